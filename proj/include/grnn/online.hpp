#pragma once

// Online train-and-predict loop.
//
// The predictor keeps the hidden state H at the start of a rolling window of
// the last T observations. On each arrival:
//   1. if the window is full, H is advanced over its oldest observation,
//      which is then dropped (params are those left by the last training);
//   2. the new observation is appended;
//   3. the next interval is predicted by running the whole window from H
//      with the current params, before any training;
//   4. for each epoch, the window's consecutive pairs (x[k] -> x[k+1]) are
//      fitted with one gradient step on their mean squared error.
// A window of w observations gives w - 1 training pairs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grnn/checkpoint.hpp"
#include "grnn/error.hpp"
#include "grnn/linkage.hpp"
#include "grnn/model.hpp"

namespace grnn {

enum class Optimizer { sgd, adam };

inline Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw ParameterError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

inline std::string_view optimizer_name(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

struct TrainConfig {
  std::size_t window = 144;   // T
  Eigen::Index hidden = 32;   // D
  std::size_t epochs = 10;    // iterations per arrival
  double alpha = 0.5;
  double lr = 0.01;
  Optimizer optimizer = Optimizer::sgd;
  std::uint64_t seed = 0;
  bool reinit_hidden = false;  // fresh H for every window instead of carrying it
  double hidden_stddev = 0.1;
  double weight_stddev = 0.1;
  double clip_norm = 0.0;  // joint gradient-norm cap per update; 0 disables
  double divergence_factor = 10.0;
  std::size_t divergence_patience = 3;

  void validate() const {
    if (window < 1) throw ParameterError("window (T) must be >= 1");
    if (hidden < 1) throw ParameterError("hidden dimension (D) must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be >= 0");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("learning rate must be > 0");
    if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm)) throw ParameterError("clip_norm must be >= 0");
    if (!(hidden_stddev >= 0.0)) throw ParameterError("hidden_stddev must be >= 0");
    if (!(divergence_factor > 1.0) || divergence_patience < 1) throw ParameterError("bad divergence settings");
  }
};

class OnlinePredictor {
 public:
  OnlinePredictor(const LinkageNetwork& link, TrainConfig cfg)
      : cfg_(validated(cfg)), nodes_(link.nodes()), propagation_(link, cfg.alpha) {
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    params_ = init_params(cfg_.hidden, n, 1, cfg_.seed, cfg_.weight_stddev);
    adam_ = AdamState::zeros_like(params_);
    hidden_ = init_hidden(cfg_.hidden, n, hidden_seed(0), cfg_.hidden_stddev);
  }

  /// Consumes one observation (normalised, entries in [0, 1]) and returns
  /// the prediction for the following interval.
  RowVector step(const RowVector& observation) {
    if (observation.size() != num_nodes()) {
      throw ContractError("observation has " + std::to_string(observation.size()) + " entries, expected " +
                          std::to_string(num_nodes()));
    }
    if (!observation.allFinite() || observation.minCoeff() < 0.0 || observation.maxCoeff() > 1.0) {
      throw ContractError("observation entries must be finite and within [0, 1]");
    }

    if (window_.size() == cfg_.window) {
      const Matrix oldest = window_.front();
      hidden_ = propagate_step(params_, hidden_, oldest, propagation_).hidden;
      window_.pop_front();
      ++hidden_timestamp_;
    }
    window_.push_back(observation);
    ++arrivals_;
    if (cfg_.reinit_hidden) hidden_ = init_hidden(cfg_.hidden, num_nodes(), hidden_seed(hidden_timestamp_), cfg_.hidden_stddev);

    // The pass over all but the newest observation doubles as the first
    // training epoch's forward pass; one more step gives the prediction.
    const std::vector<Matrix> inputs(window_.begin(), std::prev(window_.end()));
    auto trace = forward(params_, hidden_, inputs, propagation_);
    const RowVector prediction =
        output_step(params_, propagate_step(params_, trace.final_hidden(), window_.back(), propagation_).hidden);

    last_loss_.reset();
    if (window_.size() >= 2 && cfg_.epochs > 0) {
      std::vector<RowVector> truth(std::next(window_.begin()), window_.end());
      for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
        if (epoch > 0) trace = forward(params_, hidden_, inputs, propagation_);
        const double l = loss(trace, truth);
        if (epoch == 0) {
          last_loss_ = l;
          check_divergence(l);
        }
        auto grads = backward(trace, truth, params_, propagation_);
        if (cfg_.clip_norm > 0.0) clip_gradients(grads, cfg_.clip_norm);
        if (cfg_.optimizer == Optimizer::adam) {
          adam_update(params_, adam_, grads, cfg_.lr);
        } else {
          sgd_update(params_, grads, cfg_.lr);
        }
      }
      if (!params_.all_finite()) throw NumericError("parameters became non-finite");
    }
    return prediction;
  }

  const TrainConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  const Matrix& hidden() const { return hidden_; }
  std::int64_t hidden_timestamp() const { return hidden_timestamp_; }
  std::int64_t arrivals() const { return arrivals_; }
  const std::deque<RowVector>& window() const { return window_; }
  const PropagationMatrix& propagation() const { return propagation_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(nodes_.size()); }
  /// Pre-update loss of the first epoch of the latest arrival, if it trained.
  std::optional<double> last_loss() const { return last_loss_; }

  Checkpoint snapshot(std::optional<Normalizer> normalizer = std::nullopt) const {
    Checkpoint c;
    c.params = params_;
    c.alpha = cfg_.alpha;
    c.nodes = nodes_;
    c.hidden = hidden_;
    c.hidden_timestamp = hidden_timestamp_;
    c.normalizer = normalizer;
    auto i64 = [](auto v) { return static_cast<std::int64_t>(v); };
    c.extra = {
        {"run.window", i64(cfg_.window)},
        {"run.epochs", i64(cfg_.epochs)},
        {"run.lr", cfg_.lr},
        {"run.seed", i64(cfg_.seed)},
        {"run.reinit_hidden", i64(cfg_.reinit_hidden)},
        {"run.hidden_stddev", cfg_.hidden_stddev},
        {"run.divergence_factor", cfg_.divergence_factor},
        {"run.divergence_patience", i64(cfg_.divergence_patience)},
        {"run.arrivals", arrivals_},
        {"run.reference_loss", reference_loss_.value_or(std::nan(""))},
        {"run.strikes", i64(strikes_)},
        {"run.observations", window_matrix()},
        {"run.optimizer", std::string(optimizer_name(cfg_.optimizer))},
        {"run.weight_stddev", cfg_.weight_stddev},
        {"run.clip_norm", cfg_.clip_norm},
        {"run.adam.steps", adam_.steps},
    };
    adam_.first.for_each([&](std::string_view name, const Matrix& m) {
      c.extra.push_back({"run.adam.first." + std::string(name), m});
    });
    adam_.second.for_each([&](std::string_view name, const Matrix& m) {
      c.extra.push_back({"run.adam.second." + std::string(name), m});
    });
    return c;
  }

  /// Rebuilds a predictor from snapshot(); the link must have the same nodes.
  static OnlinePredictor restore(const Checkpoint& c, const LinkageNetwork& link) {
    if (c.nodes != link.nodes()) throw ValidationError("checkpoint node order does not match the linkage network");
    RecordView v(c.extra);
    TrainConfig cfg;
    cfg.window = static_cast<std::size_t>(v.get<std::int64_t>("run.window"));
    cfg.hidden = c.params.hidden_dim();
    cfg.epochs = static_cast<std::size_t>(v.get<std::int64_t>("run.epochs"));
    cfg.alpha = c.alpha;
    cfg.lr = v.get<double>("run.lr");
    cfg.seed = static_cast<std::uint64_t>(v.get<std::int64_t>("run.seed"));
    cfg.reinit_hidden = v.get<std::int64_t>("run.reinit_hidden") != 0;
    cfg.hidden_stddev = v.get<double>("run.hidden_stddev");
    cfg.divergence_factor = v.get<double>("run.divergence_factor");
    cfg.divergence_patience = static_cast<std::size_t>(v.get<std::int64_t>("run.divergence_patience"));
    cfg.optimizer = parse_optimizer(v.get<std::string>("run.optimizer"));
    cfg.weight_stddev = v.get<double>("run.weight_stddev");
    cfg.clip_norm = v.get<double>("run.clip_norm");
    OnlinePredictor p(link, cfg);
    p.adam_.steps = v.get<std::int64_t>("run.adam.steps");
    auto load_moments = [&](ModelParams& target, const std::string& prefix) {
      target.for_each([&](std::string_view name, Matrix& m) {
        const auto& stored = v.get<Eigen::MatrixXd>(prefix + std::string(name));
        if (stored.rows() != m.rows() || stored.cols() != m.cols()) {
          throw ValidationError("checkpoint optimizer state " + prefix + std::string(name) + " has wrong shape");
        }
        m = stored;
      });
    };
    load_moments(p.adam_.first, "run.adam.first.");
    load_moments(p.adam_.second, "run.adam.second.");
    p.params_ = c.params;
    p.hidden_ = c.hidden;
    p.hidden_timestamp_ = c.hidden_timestamp;
    p.arrivals_ = v.get<std::int64_t>("run.arrivals");
    const double ref = v.get<double>("run.reference_loss");
    if (!std::isnan(ref)) p.reference_loss_ = ref;
    p.strikes_ = static_cast<std::size_t>(v.get<std::int64_t>("run.strikes"));
    const auto& obs = v.get<Eigen::MatrixXd>("run.observations");
    if (obs.rows() > 0 && obs.cols() != p.num_nodes()) throw ValidationError("checkpoint window has wrong width");
    if (static_cast<std::size_t>(obs.rows()) > cfg.window) throw ValidationError("checkpoint window longer than T");
    for (Eigen::Index r = 0; r < obs.rows(); ++r) p.window_.push_back(obs.row(r));
    return p;
  }

  /// Epochs per arrival for subsequent steps; 0 turns training off.
  void set_epochs(std::size_t epochs) { cfg_.epochs = epochs; }

 private:
  static TrainConfig validated(TrainConfig cfg) {
    cfg.validate();
    return cfg;
  }

  std::uint64_t hidden_seed(std::int64_t timestamp) const {
    return cfg_.seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL + static_cast<std::uint64_t>(timestamp);
  }

  Eigen::MatrixXd window_matrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(window_.size()), num_nodes());
    for (std::size_t r = 0; r < window_.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = window_[r];
    return m;
  }

  // Reference loss: the largest pre-update loss seen while the window is
  // still filling, i.e. essentially the untrained model's loss.
  void check_divergence(double l) {
    if (!std::isfinite(l)) throw NumericError("training loss became non-finite");
    if (window_.size() < cfg_.window || !reference_loss_) {
      reference_loss_ = std::max(reference_loss_.value_or(0.0), l);
      return;
    }
    if (l > cfg_.divergence_factor * *reference_loss_) {
      if (++strikes_ >= cfg_.divergence_patience) {
        throw NumericError("training diverged: loss " + std::to_string(l) + " exceeded " +
                           std::to_string(cfg_.divergence_factor) + "x the reference " +
                           std::to_string(*reference_loss_) + " for " + std::to_string(strikes_) +
                           " consecutive arrivals");
      }
    } else {
      strikes_ = 0;
    }
  }

  TrainConfig cfg_;
  std::vector<std::string> nodes_;
  PropagationMatrix propagation_;
  ModelParams params_;
  AdamState adam_;
  Matrix hidden_;
  std::int64_t hidden_timestamp_ = 0;
  std::int64_t arrivals_ = 0;
  std::deque<RowVector> window_;
  std::optional<double> reference_loss_;
  std::size_t strikes_ = 0;
  std::optional<double> last_loss_;
};

/// Aligned validation output of a replay, normalised units.
struct ReplayResult {
  std::vector<Eigen::Index> intervals;  // panel column of each prediction
  Eigen::MatrixXd predictions;          // n x V
  Eigen::MatrixXd truth;                // n x V
};

/// Feeds columns [begin, end) of `panel` to the predictor. A prediction made
/// after column t targets column t + 1 and is kept when that column is at or
/// beyond `validation_start` and inside the panel.
inline ReplayResult replay(OnlinePredictor& predictor, const Eigen::MatrixXd& panel, Eigen::Index begin,
                           Eigen::Index end, Eigen::Index validation_start) {
  if (begin < 0 || end > panel.cols() || begin > end) throw ContractError("replay range out of bounds");
  std::vector<Eigen::Index> cols;
  std::vector<RowVector> preds;
  for (Eigen::Index t = begin; t < end; ++t) {
    RowVector o = predictor.step(panel.col(t).transpose());
    if (t + 1 >= validation_start && t + 1 < panel.cols()) {
      cols.push_back(t + 1);
      preds.push_back(std::move(o));
    }
  }
  ReplayResult r;
  r.intervals = cols;
  r.predictions.resize(panel.rows(), static_cast<Eigen::Index>(cols.size()));
  r.truth.resize(panel.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    r.predictions.col(static_cast<Eigen::Index>(k)) = preds[k].transpose();
    r.truth.col(static_cast<Eigen::Index>(k)) = panel.col(cols[k]);
  }
  return r;
}

/// First panel column that is scored: floor(split * L), but never 0.
inline Eigen::Index validation_start(Eigen::Index length, double split) {
  return std::max<Eigen::Index>(1, training_length(length, split));
}

struct OfflineResult {
  ReplayResult validation;
  OnlinePredictor predictor;
};

/// Replays a normalised panel (n x L) from a fresh model and keeps the
/// predictions for the last (1 - split) of the intervals. Training
/// continues online through the validation span.
inline OfflineResult run_offline(const Eigen::MatrixXd& panel, const LinkageNetwork& link, const TrainConfig& cfg,
                                 double split) {
  if (panel.rows() != static_cast<Eigen::Index>(link.size())) throw ContractError("panel rows != node count");
  if (panel.cols() < static_cast<Eigen::Index>(cfg.window) + 1) {
    throw ValidationError("panel has " + std::to_string(panel.cols()) + " intervals; need at least T + 1 = " +
                          std::to_string(cfg.window + 1));
  }
  OnlinePredictor predictor(link, cfg);
  auto result = replay(predictor, panel, 0, panel.cols(), validation_start(panel.cols(), split));
  return {std::move(result), std::move(predictor)};
}

}  // namespace grnn
