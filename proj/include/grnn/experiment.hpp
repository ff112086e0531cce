#pragma once

// End-to-end evaluation of a raw panel: normalise on the training split,
// replay online, map predictions back to original units and score them next
// to the historical-average and persistence baselines on the same intervals.

#include <Eigen/Dense>

#include <vector>

#include "grnn/linkage.hpp"
#include "grnn/metrics.hpp"
#include "grnn/online.hpp"
#include "grnn/panel.hpp"

namespace grnn {

struct ExperimentResult {
  Normalizer normalizer;
  std::size_t clamped = 0;             // normalised entries pushed into (0, 1)
  std::vector<Eigen::Index> intervals;  // scored panel columns
  Eigen::MatrixXd truth;                // original units, n x V
  Eigen::MatrixXd grnn;
  Eigen::MatrixXd historical_average;
  Eigen::MatrixXd persistence;
  EvalReport grnn_report;
  EvalReport ha_report;
  EvalReport persistence_report;
  OnlinePredictor predictor;
};

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  return out;
}

/// `period` is the number of intervals per day for the historical average.
inline ExperimentResult run_experiment(const ConditionPanel& panel, const LinkageNetwork& link, const TrainConfig& cfg,
                                       double split, Eigen::Index period) {
  const auto normalizer = fit_normalizer(panel, split);
  const auto scaled = normalizer.apply(panel.values);
  auto offline = run_offline(scaled.values, link, cfg, split);
  const auto& cols = offline.validation.intervals;
  if (cols.empty()) throw ValidationError("no validation intervals; lower the split");

  ExperimentResult r{normalizer, scaled.clamped, cols, select_columns(panel.values, cols),
                     normalizer.invert(offline.validation.predictions),
                     select_columns(historical_average(panel.values, period), cols),
                     select_columns(persistence(panel.values), cols),
                     {}, {}, {}, std::move(offline.predictor)};
  r.grnn_report = evaluate(r.truth, r.grnn);
  r.ha_report = evaluate(r.truth, r.historical_average);
  r.persistence_report = evaluate(r.truth, r.persistence);
  return r;
}

}  // namespace grnn
