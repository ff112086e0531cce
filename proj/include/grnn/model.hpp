#pragma once

// The GRNN cell. One step, for hidden state H (D x n), input X (d x n) and
// propagation matrix A' (n x n):
//
//   S  = H A'
//   Z  = sigmoid(Wz S + Uz X + Bz)          update gate
//   R  = sigmoid(Wr S + Ur X + Br)          reset gate
//   C  = tanh(W X + U (R . S))              candidate (no bias)
//   H' = (1 - Z) . S + Z . C
//   o  = sigmoid(w_o H' + b_o)              per-node prediction, 1 x n
//
// Loss over a window of K steps is mean squared error over all n*K outputs.
// Gradients are derived by hand (see docs/gradients.md) and checked against
// central finite differences by fd_gradient().

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grnn/error.hpp"
#include "grnn/linkage.hpp"

namespace grnn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Every learnable array. Shapes: D = hidden, n = nodes, d = input features.
struct ModelParams {
  Matrix update_state;     // Wz, D x D
  Matrix update_input;     // Uz, D x d
  Matrix update_bias;      // Bz, D x n
  Matrix reset_state;      // Wr, D x D
  Matrix reset_input;      // Ur, D x d
  Matrix reset_bias;       // Br, D x n
  Matrix candidate_input;  // W,  D x d
  Matrix candidate_state;  // U,  D x D
  Matrix output_weight;    // w_o, 1 x D
  Matrix output_bias;      // b_o, 1 x n

  Eigen::Index hidden_dim() const { return update_state.rows(); }
  Eigen::Index num_nodes() const { return update_bias.cols(); }
  Eigen::Index input_dim() const { return update_input.cols(); }

  static ModelParams zeros(Eigen::Index hidden, Eigen::Index nodes, Eigen::Index inputs) {
    if (hidden < 1 || nodes < 1 || inputs < 1) {
      throw ParameterError("model dimensions must be positive (D=" + std::to_string(hidden) +
                           ", n=" + std::to_string(nodes) + ", d=" + std::to_string(inputs) + ")");
    }
    ModelParams p;
    p.update_state = Matrix::Zero(hidden, hidden);
    p.update_input = Matrix::Zero(hidden, inputs);
    p.update_bias = Matrix::Zero(hidden, nodes);
    p.reset_state = Matrix::Zero(hidden, hidden);
    p.reset_input = Matrix::Zero(hidden, inputs);
    p.reset_bias = Matrix::Zero(hidden, nodes);
    p.candidate_input = Matrix::Zero(hidden, inputs);
    p.candidate_state = Matrix::Zero(hidden, hidden);
    p.output_weight = Matrix::Zero(1, hidden);
    p.output_bias = Matrix::Zero(1, nodes);
    return p;
  }

  /// Calls f(name, matrix) for each field, in a fixed order.
  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("update_state", self.update_state);
    f("update_input", self.update_input);
    f("update_bias", self.update_bias);
    f("reset_state", self.reset_state);
    f("reset_input", self.reset_input);
    f("reset_bias", self.reset_bias);
    f("candidate_input", self.candidate_input);
    f("candidate_state", self.candidate_state);
    f("output_weight", self.output_weight);
    f("output_bias", self.output_bias);
  }
  template <class F> void for_each(F&& f) { visit(*this, f); }
  template <class F> void for_each(F&& f) const { visit(*this, f); }

  bool all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for_each([&](std::string_view, const Matrix& m) { total += static_cast<std::size_t>(m.size()); });
    return total;
  }

  /// Weights shared by all nodes: everything except Bz, Br and b_o.
  std::size_t shared_parameter_count() const {
    return parameter_count() -
           static_cast<std::size_t>(update_bias.size() + reset_bias.size() + output_bias.size());
  }

  void check_shapes() const {
    const auto D = hidden_dim(), n = num_nodes(), d = input_dim();
    auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
      if (m.rows() != r || m.cols() != c) {
        throw ContractError(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                            std::to_string(c));
      }
    };
    expect(update_state, D, D, "update_state");
    expect(update_input, D, d, "update_input");
    expect(update_bias, D, n, "update_bias");
    expect(reset_state, D, D, "reset_state");
    expect(reset_input, D, d, "reset_input");
    expect(reset_bias, D, n, "reset_bias");
    expect(candidate_input, D, d, "candidate_input");
    expect(candidate_state, D, D, "candidate_state");
    expect(output_weight, 1, D, "output_weight");
    expect(output_bias, 1, n, "output_bias");
  }

  bool operator==(const ModelParams& o) const {
    return hidden_dim() == o.hidden_dim() && num_nodes() == o.num_nodes() && input_dim() == o.input_dim() &&
           flatten() == o.flatten();
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each([&](std::string_view, const Matrix& m) { out.insert(out.end(), m.data(), m.data() + m.size()); });
    return out;
  }
};

/// Weights ~ Normal(0, stddev^2) (default variance 0.01), biases zero.
/// Deterministic in `seed`.
inline ModelParams init_params(Eigen::Index hidden, Eigen::Index nodes, Eigen::Index inputs, std::uint64_t seed,
                               double stddev = 0.1) {
  auto p = ModelParams::zeros(hidden, nodes, inputs);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  for (Matrix* m : {&p.update_state, &p.update_input, &p.reset_state, &p.reset_input, &p.candidate_input,
                    &p.candidate_state, &p.output_weight}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
  }
  return p;
}

/// Random normal hidden state, D x n.
inline Matrix init_hidden(Eigen::Index hidden, Eigen::Index nodes, std::uint64_t seed, double stddev = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix h(hidden, nodes);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
  return h;
}

/// Gradients mirror ModelParams field-for-field, plus the gradient with
/// respect to the hidden state at the start of the window.
struct GradientSet {
  ModelParams weights;
  Matrix initial_hidden;

  bool all_finite() const { return weights.all_finite() && initial_hidden.allFinite(); }
};

namespace detail {

inline Matrix sigmoid(const Matrix& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

// dst += U x for the input terms. With a handful of features the product is
// a few outer products, and the coefficient-wise kernel skips GEMM packing.
inline void add_input_term(Matrix& dst, const Matrix& u, const Matrix& x) {
  if (u.cols() <= 4) {
    dst.noalias() += u.lazyProduct(x);
  } else {
    dst.noalias() += u * x;
  }
}

// tanh through the vectorised exp: 1 - 2 / (exp(2x) + 1). Saturates cleanly
// to +-1 when exp overflows or underflows; absolute error is a few ulp.
template <class Derived>
Matrix tanh(const Eigen::MatrixBase<Derived>& x) {
  return (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
}

}  // namespace detail

/// Everything one step produces; kept for backpropagation.
struct StepTrace {
  Matrix input;        // X, d x n
  Matrix propagated;   // S
  Matrix update_gate;  // Z
  Matrix reset_gate;   // R
  Matrix candidate;    // C
  Matrix hidden;       // H after the step
  RowVector output;    // o, filled by forward()
};

struct ForwardTrace {
  Matrix initial_hidden;
  std::vector<StepTrace> steps;

  std::size_t length() const { return steps.size(); }
  const Matrix& final_hidden() const { return steps.empty() ? initial_hidden : steps.back().hidden; }
};

inline StepTrace propagate_step(const ModelParams& p, const Matrix& h_prev, const Matrix& x,
                                const PropagationMatrix& pm) {
  const auto D = p.hidden_dim(), n = p.num_nodes();
  if (h_prev.rows() != D || h_prev.cols() != n) throw ContractError("hidden state shape does not match params");
  if (x.rows() != p.input_dim() || x.cols() != n) throw ContractError("input shape does not match params");
  if (pm.size() != n) throw ContractError("propagation matrix size does not match node count");
  if (!x.allFinite() || !h_prev.allFinite()) throw NumericError("non-finite input to propagate_step");

  StepTrace s;
  s.input = x;
  propagate_into(h_prev, pm, s.propagated);
  const Matrix& S = s.propagated;
  // Products accumulate onto the bias copies, which spares Eigen zeroing a
  // fresh destination for every product.
  Matrix pre = p.update_bias;
  pre.noalias() += p.update_state * S;
  detail::add_input_term(pre, p.update_input, x);
  s.update_gate = detail::sigmoid(pre);
  pre = p.reset_bias;
  pre.noalias() += p.reset_state * S;
  detail::add_input_term(pre, p.reset_input, x);
  s.reset_gate = detail::sigmoid(pre);
  const Matrix gated = s.reset_gate.cwiseProduct(S);
  pre.noalias() = p.candidate_state * gated;
  detail::add_input_term(pre, p.candidate_input, x);
  s.candidate = detail::tanh(pre);
  s.hidden = ((1.0 - s.update_gate.array()) * S.array() + s.update_gate.array() * s.candidate.array()).matrix();
  return s;
}

inline RowVector output_step(const ModelParams& p, const Matrix& h) {
  if (h.rows() != p.hidden_dim() || h.cols() != p.num_nodes()) {
    throw ContractError("hidden state shape does not match params");
  }
  return detail::sigmoid(p.output_weight * h + p.output_bias);
}

/// Runs inputs[0..K) from h0, recording every step and its output.
inline ForwardTrace forward(const ModelParams& p, const Matrix& h0, std::span<const Matrix> inputs,
                            const PropagationMatrix& pm) {
  ForwardTrace trace;
  trace.initial_hidden = h0;
  trace.steps.reserve(inputs.size());
  const Matrix* h = &trace.initial_hidden;
  for (const auto& x : inputs) {
    trace.steps.push_back(propagate_step(p, *h, x, pm));
    auto& s = trace.steps.back();
    s.output = output_step(p, s.hidden);
    h = &s.hidden;
  }
  return trace;
}

/// Final hidden state only; no trace is kept.
inline Matrix advance(const ModelParams& p, Matrix h, std::span<const Matrix> inputs, const PropagationMatrix& pm) {
  for (const auto& x : inputs) h = propagate_step(p, h, x, pm).hidden;
  return h;
}

inline double loss(std::span<const RowVector> predictions, std::span<const RowVector> truth) {
  if (predictions.size() != truth.size()) throw ContractError("prediction/truth sequence lengths differ");
  if (predictions.empty()) throw ContractError("loss over an empty window");
  const auto n = predictions.front().size();
  double total = 0.0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    if (predictions[t].size() != n || truth[t].size() != n) throw ContractError("prediction/truth width mismatch");
    total += (truth[t] - predictions[t]).squaredNorm();
  }
  return total / static_cast<double>(n * static_cast<Eigen::Index>(predictions.size()));
}

inline double loss(const ForwardTrace& trace, std::span<const RowVector> truth) {
  std::vector<RowVector> outputs;
  outputs.reserve(trace.steps.size());
  for (const auto& s : trace.steps) outputs.push_back(s.output);
  return loss(outputs, truth);
}

/// Truncated BPTT over the whole trace. truth[t] is the target of the output
/// after step t.
inline GradientSet backward(const ForwardTrace& trace, std::span<const RowVector> truth, const ModelParams& p,
                            const PropagationMatrix& pm) {
  const auto K = trace.steps.size();
  if (truth.size() != K) throw ContractError("truth length does not match trace length");
  if (K == 0) throw ContractError("backward over an empty trace");
  const auto D = p.hidden_dim(), n = p.num_nodes();
  if (trace.initial_hidden.rows() != D || trace.initial_hidden.cols() != n) {
    throw ContractError("trace does not match params");
  }

  GradientSet g{ModelParams::zeros(D, n, p.input_dim()), Matrix()};
  const double scale = -2.0 / static_cast<double>(n * static_cast<Eigen::Index>(K));
  Matrix d_hidden = Matrix::Zero(D, n);

  for (std::size_t k = K; k-- > 0;) {
    const auto& s = trace.steps[k];
    if (truth[k].size() != n) throw ContractError("truth width does not match node count");
    if (s.hidden.rows() != D || s.hidden.cols() != n) throw ContractError("trace does not match params");

    // Output head.
    const RowVector d_out_pre =
        (scale * (truth[k] - s.output)).cwiseProduct((s.output.array() * (1.0 - s.output.array())).matrix());
    g.weights.output_weight.noalias() += d_out_pre * s.hidden.transpose();
    g.weights.output_bias += d_out_pre;
    d_hidden.noalias() += p.output_weight.transpose() * d_out_pre;

    const auto S = s.propagated.array();
    const auto Z = s.update_gate.array();
    const auto R = s.reset_gate.array();
    const auto C = s.candidate.array();
    const auto dH = d_hidden.array();

    const Matrix d_cand_pre = (dH * Z * (1.0 - C * C)).matrix();
    const Matrix d_update_pre = (dH * (C - S) * Z * (1.0 - Z)).matrix();
    const Matrix d_reset_in = p.candidate_state.transpose() * d_cand_pre;  // w.r.t. R . S
    const Matrix d_reset_pre = (d_reset_in.array() * S * R * (1.0 - R)).matrix();
    const Matrix gated = (R * S).matrix();

    g.weights.candidate_input.noalias() += d_cand_pre * s.input.transpose();
    g.weights.candidate_state.noalias() += d_cand_pre * gated.transpose();
    g.weights.update_state.noalias() += d_update_pre * s.propagated.transpose();
    g.weights.update_input.noalias() += d_update_pre * s.input.transpose();
    g.weights.update_bias += d_update_pre;
    g.weights.reset_state.noalias() += d_reset_pre * s.propagated.transpose();
    g.weights.reset_input.noalias() += d_reset_pre * s.input.transpose();
    g.weights.reset_bias += d_reset_pre;

    Matrix d_prop = (dH * (1.0 - Z) + d_reset_in.array() * R).matrix();
    d_prop.noalias() += p.update_state.transpose() * d_update_pre;
    d_prop.noalias() += p.reset_state.transpose() * d_reset_pre;
    d_hidden = propagate_adjoint(d_prop, pm);
  }
  g.initial_hidden = std::move(d_hidden);
  return g;
}

/// Central differences of the window loss, one full forward pass per
/// perturbation. Only practical on small instances.
inline GradientSet fd_gradient(const ModelParams& p, const Matrix& h0, std::span<const Matrix> inputs,
                               std::span<const RowVector> truth, const PropagationMatrix& pm,
                               double epsilon = 1e-4) {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  auto eval = [&](const ModelParams& q, const Matrix& h) { return loss(forward(q, h, inputs, pm), truth); };

  GradientSet g{ModelParams::zeros(p.hidden_dim(), p.num_nodes(), p.input_dim()), Matrix::Zero(h0.rows(), h0.cols())};
  ModelParams work = p;
  std::vector<Matrix*> grads;
  g.weights.for_each([&](std::string_view, Matrix& m) { grads.push_back(&m); });
  std::size_t field = 0;
  work.for_each([&](std::string_view, Matrix& m) {
    Matrix& out = *grads[field++];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + epsilon;
      const double up = eval(work, h0);
      m.data()[i] = saved - epsilon;
      const double down = eval(work, h0);
      m.data()[i] = saved;
      out.data()[i] = (up - down) / (2.0 * epsilon);
    }
  });
  Matrix h = h0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double saved = h.data()[i];
    h.data()[i] = saved + epsilon;
    const double up = eval(p, h);
    h.data()[i] = saved - epsilon;
    const double down = eval(p, h);
    h.data()[i] = saved;
    g.initial_hidden.data()[i] = (up - down) / (2.0 * epsilon);
  }
  return g;
}

/// Euclidean norm of all weight gradients taken together.
inline double gradient_norm(const GradientSet& g) {
  double sq = 0.0;
  g.weights.for_each([&](std::string_view, const Matrix& m) { sq += m.squaredNorm(); });
  return std::sqrt(sq);
}

/// Rescales the weight gradients so their joint norm is at most max_norm.
/// Returns the norm before clipping.
inline double clip_gradients(GradientSet& g, double max_norm) {
  if (!(max_norm > 0.0)) throw ParameterError("clip norm must be positive");
  const double norm = gradient_norm(g);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    g.weights.for_each([&](std::string_view, Matrix& m) { m *= scale; });
  }
  return norm;
}

/// Plain gradient descent. Hidden states are not parameters and are untouched.
inline void sgd_update(ModelParams& p, const GradientSet& g, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("learning rate must be positive");
  if (!g.weights.all_finite()) throw NumericError("non-finite gradient; update aborted");
  g.weights.check_shapes();
  p.check_shapes();
  std::vector<const Matrix*> grads;
  g.weights.for_each([&](std::string_view, const Matrix& m) { grads.push_back(&m); });
  std::size_t field = 0;
  p.for_each([&](std::string_view, Matrix& m) {
    const Matrix& d = *grads[field++];
    if (d.rows() != m.rows() || d.cols() != m.cols()) throw ContractError("gradient shape mismatch");
    m -= lr * d;
  });
}

/// Adam moment estimates, shaped like the parameters.
struct AdamState {
  ModelParams first;
  ModelParams second;
  std::int64_t steps = 0;

  static AdamState zeros_like(const ModelParams& p) {
    const auto z = ModelParams::zeros(p.hidden_dim(), p.num_nodes(), p.input_dim());
    return {z, z, 0};
  }
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline void adam_update(ModelParams& p, AdamState& state, const GradientSet& g, double lr,
                        const AdamSettings& s = {}) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("learning rate must be positive");
  if (!g.weights.all_finite()) throw NumericError("non-finite gradient; update aborted");
  std::vector<const Matrix*> grads;
  std::vector<Matrix*> m1, m2;
  g.weights.for_each([&](std::string_view, const Matrix& m) { grads.push_back(&m); });
  state.first.for_each([&](std::string_view, Matrix& m) { m1.push_back(&m); });
  state.second.for_each([&](std::string_view, Matrix& m) { m2.push_back(&m); });
  ++state.steps;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.steps));
  std::size_t k = 0;
  p.for_each([&](std::string_view, Matrix& m) {
    const Matrix& d = *grads[k];
    if (d.rows() != m.rows() || d.cols() != m.cols() || m1[k]->rows() != m.rows() || m1[k]->cols() != m.cols()) {
      throw ContractError("gradient or optimizer state shape mismatch");
    }
    *m1[k] = s.beta1 * *m1[k] + (1.0 - s.beta1) * d;
    *m2[k] = s.beta2 * *m2[k] + (1.0 - s.beta2) * d.cwiseAbs2();
    m.array() -= lr * (m1[k]->array() / c1) / ((m2[k]->array() / c2).sqrt() + s.epsilon);
    ++k;
  });
}

}  // namespace grnn
