#pragma once

// Condition panels (segment x interval) and their text format:
//
//   # interval_minutes=10
//   segment_id,interval_index,value
//   s0,0,41.5
//
// Interior gaps of up to two intervals are filled by linear interpolation;
// anything else missing is rejected.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "grnn/error.hpp"
#include "grnn/linkage.hpp"
#include "grnn/text.hpp"

namespace grnn {

struct ConditionPanel {
  Eigen::MatrixXd values;             // n x L, row order = segments
  std::vector<std::string> segments;  // aligned to the linkage network
  std::int64_t first_interval = 0;
  int interval_minutes = 10;

  Eigen::Index num_segments() const { return values.rows(); }
  Eigen::Index length() const { return values.cols(); }
};

inline constexpr std::size_t kMaxInterpolatedGap = 2;

inline ConditionPanel parse_panel(std::string_view contents, const LinkageNetwork& link) {
  const auto table = text::parse_table(contents, {"segment_id", "interval_index", "value"}, "panel");
  ConditionPanel panel;
  panel.segments = link.nodes();
  for (const auto& c : table.comments) {
    constexpr std::string_view key = "interval_minutes=";
    if (c.rfind(key, 0) == 0) {
      panel.interval_minutes = static_cast<int>(text::parse_int(std::string_view(c).substr(key.size()), "interval_minutes"));
    }
  }
  if (panel.interval_minutes <= 0) throw ValidationError("panel: interval_minutes must be positive");
  if (table.rows.empty()) throw ValidationError("panel: no records");

  const auto n = link.size();
  std::vector<std::map<std::int64_t, double>> series(n);
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = "panel:" + std::to_string(table.line_numbers[r]);
    auto it = link.node_index().find(row[0]);
    if (it == link.node_index().end()) throw ValidationError(where + ": unknown segment '" + row[0] + "'");
    const auto t = text::parse_int(row[1], "interval_index");
    const auto v = text::parse_double(row[2], "value");
    if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value");
    if (!series[it->second].emplace(t, v).second) {
      throw ValidationError(where + ": duplicate record for segment '" + row[0] + "' interval " + std::to_string(t));
    }
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }

  // Each segment needs a record at least every third interval, so a span
  // wider than that cannot pass the gap policy; refuse before allocating.
  if (static_cast<std::uint64_t>(hi - lo) >= (kMaxInterpolatedGap + 1) * table.rows.size()) {
    throw ValidationError("panel: interval indices " + std::to_string(lo) + ".." + std::to_string(hi) +
                          " are too sparse to form a contiguous panel");
  }
  const auto length = static_cast<Eigen::Index>(hi - lo + 1);
  panel.first_interval = lo;
  panel.values.resize(static_cast<Eigen::Index>(n), length);
  std::vector<std::string> rejected;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = series[i];
    const auto row = static_cast<Eigen::Index>(i);
    bool ok = !s.empty() && s.begin()->first == lo && s.rbegin()->first == hi;
    if (ok) {
      auto prev = s.begin();
      panel.values(row, 0) = prev->second;
      for (auto it = std::next(s.begin()); it != s.end() && ok; prev = it, ++it) {
        const auto gap = static_cast<std::size_t>(it->first - prev->first - 1);
        if (gap > kMaxInterpolatedGap) {
          ok = false;
          break;
        }
        for (std::int64_t t = prev->first + 1; t < it->first; ++t) {
          const double w = static_cast<double>(t - prev->first) / static_cast<double>(it->first - prev->first);
          panel.values(row, t - lo) = (1.0 - w) * prev->second + w * it->second;
        }
        panel.values(row, it->first - lo) = it->second;
      }
    }
    if (!ok) rejected.push_back(link.nodes()[i]);
  }
  if (!rejected.empty()) {
    std::string msg = "panel: gaps longer than " + std::to_string(kMaxInterpolatedGap) +
                      " intervals (or missing at the ends) for segments:";
    for (const auto& id : rejected) msg += " " + id;
    throw ValidationError(msg);
  }
  return panel;
}

inline ConditionPanel load_panel(const std::string& path, const LinkageNetwork& link) {
  return parse_panel(text::read_file(path), link);
}

inline std::string format_panel(const ConditionPanel& panel) {
  std::string out = "# interval_minutes=" + std::to_string(panel.interval_minutes) + "\n";
  out += "segment_id,interval_index,value\n";
  for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
    for (Eigen::Index t = 0; t < panel.values.cols(); ++t) {
      out += panel.segments[static_cast<std::size_t>(i)] + "," + std::to_string(panel.first_interval + t) + "," +
             text::format_double(panel.values(i, t)) + "\n";
    }
  }
  return out;
}

/// Affine map of the training-split range [min, max] onto [lo, hi] = [0.05, 0.95].
struct Normalizer {
  double min = 0.0;
  double max = 1.0;
  double lo = 0.05;
  double hi = 0.95;

  static constexpr double kMargin = 1e-6;

  double apply(double x) const { return lo + (hi - lo) * (x - min) / (max - min); }
  double invert(double y) const { return min + (y - lo) * (max - min) / (hi - lo); }

  /// Result is strictly inside (0, 1); entries pushed there are counted.
  struct Applied {
    Eigen::MatrixXd values;
    std::size_t clamped = 0;
  };

  Applied apply(const Eigen::MatrixXd& raw) const {
    Applied out{raw.unaryExpr([this](double x) { return apply(x); }), 0};
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
      double& v = out.values.data()[i];
      if (v < kMargin) {
        v = kMargin;
        ++out.clamped;
      } else if (v > 1.0 - kMargin) {
        v = 1.0 - kMargin;
        ++out.clamped;
      }
    }
    return out;
  }

  Eigen::MatrixXd invert(const Eigen::MatrixXd& scaled) const {
    return scaled.unaryExpr([this](double y) { return invert(y); });
  }
};

/// Number of leading intervals that form the training split.
inline Eigen::Index training_length(Eigen::Index length, double train_fraction) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw ParameterError("train fraction must be in [0, 1]");
  return static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(length)));
}

/// Bounds come from the first floor(train_fraction * L) intervals only.
inline Normalizer fit_normalizer(const Eigen::MatrixXd& values, double train_fraction) {
  const auto train = training_length(values.cols(), train_fraction);
  if (train < 1 || values.rows() < 1) throw ValidationError("normalizer: empty training split");
  const auto block = values.leftCols(train);
  Normalizer norm;
  norm.min = block.minCoeff();
  norm.max = block.maxCoeff();
  if (!(norm.max > norm.min)) throw ValidationError("normalizer: training split is constant");
  return norm;
}

inline Normalizer fit_normalizer(const ConditionPanel& panel, double train_fraction) {
  return fit_normalizer(panel.values, train_fraction);
}

}  // namespace grnn
