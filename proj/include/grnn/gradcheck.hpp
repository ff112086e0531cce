#pragma once

// Analytic-vs-numeric gradient comparison and random problem instances for it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grnn/linkage.hpp"
#include "grnn/model.hpp"

namespace grnn {

struct GradCheckInstance {
  LinkageNetwork link;
  PropagationMatrix propagation;
  ModelParams params;
  Matrix initial_hidden;
  std::vector<Matrix> inputs;
  std::vector<RowVector> truth;
};

/// A small random problem. Weights are drawn wider than init_params so the
/// gates leave their linear region and every term of the gradient matters.
inline GradCheckInstance make_gradcheck_instance(Eigen::Index hidden, Eigen::Index nodes, std::size_t steps,
                                                 double alpha, std::uint64_t seed) {
  if (hidden < 1 || nodes < 1 || steps < 1) throw ParameterError("gradcheck instance dimensions must be positive");
  const auto n = static_cast<std::size_t>(nodes);
  auto road = n == 1 ? chain_road_network(1)
                     : random_road_network(std::max<std::size_t>(2, (n + 1) / 2), n, seed, /*allow_loops=*/true);
  auto link = transform(road);
  PropagationMatrix pm(link, alpha);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> weight(0.0, 0.5);
  std::normal_distribution<double> state(0.0, 0.5);
  std::uniform_real_distribution<double> value(0.05, 0.95);

  auto params = ModelParams::zeros(hidden, nodes, 1);
  params.for_each([&](std::string_view, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = weight(rng);
  });
  Matrix h0(hidden, nodes);
  for (Eigen::Index i = 0; i < h0.size(); ++i) h0.data()[i] = state(rng);
  std::vector<Matrix> inputs;
  std::vector<RowVector> truth;
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix x(1, nodes);
    RowVector y(nodes);
    for (Eigen::Index i = 0; i < nodes; ++i) {
      x(0, i) = value(rng);
      y(i) = value(rng);
    }
    inputs.push_back(std::move(x));
    truth.push_back(std::move(y));
  }
  return {std::move(link), std::move(pm), std::move(params), std::move(h0), std::move(inputs), std::move(truth)};
}

struct FieldError {
  std::string name;
  double worst_relative = 0.0;  // over entries outside the absolute floor
  double worst_absolute = 0.0;
  std::size_t failures = 0;
  std::size_t entries = 0;
};

struct GradientComparison {
  std::vector<FieldError> fields;
  double relative_tolerance = 1e-4;
  double absolute_floor = 1e-7;

  bool passed() const {
    return std::all_of(fields.begin(), fields.end(), [](const FieldError& f) { return f.failures == 0; });
  }
  double worst_relative() const {
    double w = 0.0;
    for (const auto& f : fields) w = std::max(w, f.worst_relative);
    return w;
  }
};

/// An entry agrees when |a - b| <= absolute_floor, or when
/// |a - b| / max(|a|, |b|) <= relative_tolerance.
inline GradientComparison compare_gradients(const GradientSet& analytic, const GradientSet& numeric,
                                            double relative_tolerance = 1e-4, double absolute_floor = 1e-7) {
  GradientComparison out;
  out.relative_tolerance = relative_tolerance;
  out.absolute_floor = absolute_floor;
  auto compare = [&](const std::string& name, const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("gradient shapes differ for " + name);
    FieldError f{name};
    f.entries = static_cast<std::size_t>(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double x = a.data()[i], y = b.data()[i];
      const double diff = std::abs(x - y);
      f.worst_absolute = std::max(f.worst_absolute, diff);
      if (!std::isfinite(diff)) {
        ++f.failures;
        f.worst_relative = INFINITY;
        continue;
      }
      if (diff <= absolute_floor) continue;
      const double rel = diff / std::max(std::abs(x), std::abs(y));
      f.worst_relative = std::max(f.worst_relative, rel);
      if (rel > relative_tolerance) ++f.failures;
    }
    out.fields.push_back(std::move(f));
  };
  std::vector<std::pair<std::string, const Matrix*>> lhs;
  analytic.weights.for_each([&](std::string_view name, const Matrix& m) { lhs.emplace_back(std::string(name), &m); });
  std::size_t i = 0;
  numeric.weights.for_each([&](std::string_view, const Matrix& m) {
    compare(lhs[i].first, *lhs[i].second, m);
    ++i;
  });
  compare("initial_hidden", analytic.initial_hidden, numeric.initial_hidden);
  return out;
}

/// Analytic gradients of an instance, from one forward and backward pass.
inline GradientSet analytic_gradient(const GradCheckInstance& inst) {
  const auto trace = forward(inst.params, inst.initial_hidden, inst.inputs, inst.propagation);
  return backward(trace, inst.truth, inst.params, inst.propagation);
}

inline GradientSet numeric_gradient(const GradCheckInstance& inst, double epsilon = 1e-4) {
  return fd_gradient(inst.params, inst.initial_hidden, inst.inputs, inst.truth, inst.propagation, epsilon);
}

}  // namespace grnn
