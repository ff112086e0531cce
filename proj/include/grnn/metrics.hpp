#pragma once

// Error metrics and the naive baselines they are compared against.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "grnn/error.hpp"

namespace grnn {

namespace detail {
inline void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError("panel shapes differ: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.size() == 0) throw ContractError("empty panel");
}
}  // namespace detail

/// Mean of e = truth - prediction over all n*T entries.
inline double mean_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
  detail::check_same_shape(truth, prediction);
  return (truth - prediction).mean();
}

inline double mse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
  detail::check_same_shape(truth, prediction);
  return (truth - prediction).squaredNorm() / static_cast<double>(truth.size());
}

/// Population variance of the errors (divisor n*T).
inline double vd(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
  detail::check_same_shape(truth, prediction);
  // Shifting by the first error keeps a constant error at exactly zero.
  Eigen::ArrayXXd e = (truth - prediction).array();
  e -= e(0, 0);
  return (e - e.mean()).square().sum() / static_cast<double>(e.size());
}

struct EvalReport {
  double mse = 0.0;
  double vd = 0.0;
  double mean_error = 0.0;
  Eigen::VectorXd per_segment_mse;
  Eigen::Index segments = 0;
  Eigen::Index intervals = 0;
};

/// Both panels are segment x interval in original units.
inline EvalReport evaluate(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
  detail::check_same_shape(truth, prediction);
  EvalReport r;
  r.mse = mse(truth, prediction);
  r.vd = vd(truth, prediction);
  r.mean_error = mean_error(truth, prediction);
  r.per_segment_mse = (truth - prediction).array().square().rowwise().mean().matrix();
  r.segments = truth.rows();
  r.intervals = truth.cols();
  return r;
}

/// Prediction for interval t is the mean of the same within-day offset on
/// all earlier days. Without such history, the mean of all earlier
/// intervals of that segment; interval 0 falls back to its own value.
inline Eigen::MatrixXd historical_average(const Eigen::MatrixXd& panel, Eigen::Index period) {
  if (period <= 0) throw ParameterError("historical average period must be positive");
  if (panel.cols() < period) throw ContractError("panel shorter than one period");
  const auto n = panel.rows(), length = panel.cols();
  Eigen::MatrixXd out(n, length);
  Eigen::MatrixXd offset_sum = Eigen::MatrixXd::Zero(n, period);
  Eigen::VectorXi offset_count = Eigen::VectorXi::Zero(period);
  Eigen::VectorXd running = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < length; ++t) {
    const auto k = t % period;
    if (offset_count(k) > 0) {
      out.col(t) = offset_sum.col(k) / static_cast<double>(offset_count(k));
    } else if (t > 0) {
      out.col(t) = running / static_cast<double>(t);
    } else {
      out.col(t) = panel.col(0);
    }
    offset_sum.col(k) += panel.col(t);
    ++offset_count(k);
    running += panel.col(t);
  }
  return out;
}

/// Prediction for interval t is the observation at t - 1 (t = 0 copies itself).
inline Eigen::MatrixXd persistence(const Eigen::MatrixXd& panel) {
  if (panel.cols() < 1) throw ContractError("empty panel");
  Eigen::MatrixXd out(panel.rows(), panel.cols());
  out.col(0) = panel.col(0);
  if (panel.cols() > 1) out.rightCols(panel.cols() - 1) = panel.leftCols(panel.cols() - 1);
  return out;
}

}  // namespace grnn
