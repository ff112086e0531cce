#pragma once

// Synthetic traffic on a linkage network. Each interval every segment mixes
// toward the mean of its upstream segments, then receives a shared daily
// increment and independent noise:
//
//   x[t+1][j] = (1 - beta) x[t][j] + beta * mean_{i: A[i][j]=1} x[t][i]
//               + seasonal(t) + N(0, noise^2)
//
// seasonal(t) = amplitude * (sin(2pi(t+1)/P) - sin(2pi t/P)), so a panel in
// sync follows a daily sine of the given amplitude. Segments without
// upstream neighbours mix with themselves. Values are clipped to
// [floor, ceiling]. The output is synthetic and labelled as such.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "grnn/linkage.hpp"
#include "grnn/panel.hpp"

namespace grnn {

struct SimulationParams {
  double beta = 0.6;
  double noise = 0.3;
  double amplitude = 30.0;
  Eigen::Index period = 144;  // intervals per day
  double initial_low = 30.0;
  double initial_high = 60.0;
  double floor = 1.0;
  double ceiling = 120.0;
  int interval_minutes = 10;
  std::uint64_t seed = 0;
};

inline double seasonal_increment(const SimulationParams& p, Eigen::Index t) {
  if (p.amplitude == 0.0) return 0.0;
  const double w = 2.0 * std::numbers::pi / static_cast<double>(p.period);
  return p.amplitude * (std::sin(w * static_cast<double>(t + 1)) - std::sin(w * static_cast<double>(t)));
}

inline ConditionPanel simulate_diffusion(const LinkageNetwork& link, Eigen::Index length, const SimulationParams& p) {
  if (length < 1) throw ParameterError("simulation length must be >= 1");
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw ParameterError("beta must be in [0, 1]");
  if (!(p.noise >= 0.0)) throw ParameterError("noise must be >= 0");
  if (p.period < 1) throw ParameterError("period must be >= 1");
  if (!(p.floor < p.ceiling) || !(p.initial_low <= p.initial_high)) throw ParameterError("bad simulation range");

  const auto n = static_cast<Eigen::Index>(link.size());
  const auto upstream = link.predecessors();
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> initial(p.initial_low, p.initial_high);
  std::normal_distribution<double> noise(0.0, 1.0);

  ConditionPanel panel;
  panel.segments = link.nodes();
  panel.interval_minutes = p.interval_minutes;
  panel.values.resize(n, length);
  for (Eigen::Index j = 0; j < n; ++j) {
    panel.values(j, 0) = p.initial_low == p.initial_high ? p.initial_low : initial(rng);
  }
  for (Eigen::Index t = 0; t + 1 < length; ++t) {
    const double season = seasonal_increment(p, t);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double own = panel.values(j, t);
      double up = own;
      if (const auto& preds = upstream[static_cast<std::size_t>(j)]; !preds.empty()) {
        up = 0.0;
        for (auto i : preds) up += panel.values(static_cast<Eigen::Index>(i), t);
        up /= static_cast<double>(preds.size());
      }
      double next = (1.0 - p.beta) * own + p.beta * up + season;
      if (p.noise > 0.0) next += p.noise * noise(rng);
      panel.values(j, t + 1) = std::clamp(next, p.floor, p.ceiling);
    }
  }
  return panel;
}

}  // namespace grnn
