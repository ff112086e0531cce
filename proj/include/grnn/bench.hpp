#pragma once

// Joint versus per-segment training cost.
//
// For each size n a chain of n segments is trained jointly by one GRNN, and
// separately by n single-segment GRNNs fed the same columns. A "step" is one
// online arrival: predict, then `epochs` updates over the window.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grnn/linkage.hpp"
#include "grnn/online.hpp"
#include "grnn/text.hpp"

namespace grnn {

struct BenchSettings {
  std::vector<std::size_t> sizes{1, 10, 156};
  Eigen::Index hidden = 16;
  std::size_t window = 8;
  std::size_t epochs = 1;
  std::size_t warmup = 4;  // arrivals past a full window, excluded from timing
  std::size_t steps = 100;   // timed arrivals; per-step time is the median
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t n = 0;
  double wall_ms_per_step = 0.0;
  std::size_t param_count = 0;  // weights plus hidden state
  double separate_wall_ms_per_step = 0.0;
  std::size_t separate_param_count = 0;

  /// Joint time per segment-step relative to the separate models'.
  double speedup() const { return separate_wall_ms_per_step / wall_ms_per_step; }
};

/// Shared weights m: three D x D, three D x d and the 1 x D output row.
inline std::size_t shared_weight_count(std::size_t hidden, std::size_t inputs = 1) {
  return 3 * hidden * hidden + 3 * hidden * inputs + hidden;
}

/// m + (2D + 1) n per-node biases + D n hidden state.
inline std::size_t joint_parameter_count(std::size_t n, std::size_t hidden, std::size_t inputs = 1) {
  return shared_weight_count(hidden, inputs) + (2 * hidden + 1) * n + hidden * n;
}

inline std::size_t separate_parameter_count(std::size_t n, std::size_t hidden, std::size_t inputs = 1) {
  return n * shared_weight_count(hidden, inputs) + n * (2 * hidden + 1 + hidden);
}

namespace detail {

inline std::size_t footprint(const OnlinePredictor& p) {
  return p.params().parameter_count() + static_cast<std::size_t>(p.hidden().size());
}

inline Eigen::MatrixXd bench_stream(Eigen::Index n, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(length));
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    for (Eigen::Index j = 0; j < n; ++j) m(j, t) = u(rng);
  }
  return m;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

inline BenchRow bench_size(std::size_t n, const BenchSettings& s) {
  if (n < 1) throw ParameterError("bench size must be >= 1");
  if (s.steps < 1) throw ParameterError("bench needs at least one timed step");
  using clock = std::chrono::steady_clock;
  TrainConfig cfg;
  cfg.window = s.window;
  cfg.hidden = s.hidden;
  cfg.epochs = s.epochs;
  cfg.seed = s.seed;
  // Timing only: random inputs carry no signal, so divergence is not checked.
  cfg.divergence_factor = 1e300;

  const std::size_t untimed = s.window + s.warmup;
  const auto data = detail::bench_stream(static_cast<Eigen::Index>(n), untimed + s.steps, s.seed);
  BenchRow row;
  row.n = n;

  OnlinePredictor joint(transform(chain_road_network(n)), cfg);
  const auto single = transform(chain_road_network(1));
  std::vector<OnlinePredictor> models;
  models.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto c = cfg;
    c.seed = s.seed + j;
    models.emplace_back(single, c);
    row.separate_param_count += detail::footprint(models.back());
  }
  row.param_count = detail::footprint(joint);

  RowVector obs(1);
  auto feed_joint = [&](std::size_t t) { joint.step(data.col(static_cast<Eigen::Index>(t)).transpose()); };
  // Every model sees the arrival before the next one comes in, as online.
  auto feed_separate = [&](std::size_t t) {
    for (std::size_t j = 0; j < n; ++j) {
      obs(0) = data(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t));
      models[j].step(obs);
    }
  };
  auto timed = [](auto&& feed, std::size_t t) {
    const auto start = clock::now();
    feed(t);
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  for (std::size_t t = 0; t < untimed; ++t) {
    feed_joint(t);
    feed_separate(t);
  }
  // Both sides are timed on the same arrival, back to back, so background
  // load lands on them alike; the medians drop the spikes.
  std::vector<double> joint_ms, separate_ms;
  for (std::size_t t = untimed; t < untimed + s.steps; ++t) {
    joint_ms.push_back(timed(feed_joint, t));
    separate_ms.push_back(timed(feed_separate, t));
  }
  row.wall_ms_per_step = detail::median(joint_ms);
  row.separate_wall_ms_per_step = detail::median(separate_ms);
  return row;
}

inline std::vector<BenchRow> complexity_bench(const BenchSettings& s) {
  std::vector<BenchRow> rows;
  for (auto n : s.sizes) rows.push_back(bench_size(n, s));
  return rows;
}

inline std::string format_bench(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "n,wall_ms_per_step,param_count,separate_wall_ms_per_step,separate_param_count\n";
  for (const auto& r : rows) {
    out << r.n << ',' << text::format_double(r.wall_ms_per_step) << ',' << r.param_count << ','
        << text::format_double(r.separate_wall_ms_per_step) << ',' << r.separate_param_count << '\n';
  }
  return out.str();
}

}  // namespace grnn
