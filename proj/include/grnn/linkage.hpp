#pragma once

// Road networks, their line graph ("linkage network"), and the propagation
// matrix A' = alpha * A + I used by the recurrent cell.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grnn/error.hpp"

namespace grnn {

struct Intersection {
  std::string id;
  double lng = 0.0;
  double lat = 0.0;
};

struct Segment {
  std::string id;
  std::string init_vertex;
  std::string term_vertex;
};

/// Directed road graph: intersections joined by one-way segments.
/// (u -> v) and (v -> u) are distinct segments. Immutable once built.
class RoadNetwork {
 public:
  RoadNetwork(std::vector<Intersection> vertices, std::vector<Segment> segments)
      : vertices_(std::move(vertices)), segments_(std::move(segments)) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (!vertex_index_.emplace(vertices_[i].id, i).second) {
        throw ValidationError("duplicate vertex id '" + vertices_[i].id + "'");
      }
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : segments_) {
      if (!seen.insert(s.id).second) throw ValidationError("duplicate segment id '" + s.id + "'");
      for (const auto* end : {&s.init_vertex, &s.term_vertex}) {
        if (!vertex_index_.count(*end)) {
          throw ValidationError("segment '" + s.id + "' references unknown vertex '" + *end + "'");
        }
      }
    }
  }

  const std::vector<Intersection>& vertices() const { return vertices_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_segments() const { return segments_.size(); }

  /// Sum over intersections of indegree * outdegree; equals the linkage count.
  std::size_t turn_count() const {
    std::vector<std::size_t> in(vertices_.size(), 0), out(vertices_.size(), 0);
    for (const auto& s : segments_) {
      ++out[vertex_index_.at(s.init_vertex)];
      ++in[vertex_index_.at(s.term_vertex)];
    }
    std::size_t total = 0;
    for (std::size_t v = 0; v < vertices_.size(); ++v) total += in[v] * out[v];
    return total;
  }

 private:
  std::vector<Intersection> vertices_;
  std::vector<Segment> segments_;
  std::unordered_map<std::string, std::size_t> vertex_index_;
};

/// Line graph of a RoadNetwork. Node i is segment i (input order); a directed
/// linkage i -> j exists iff term(i) == init(j). Self-linkages are kept.
class LinkageNetwork {
 public:
  LinkageNetwork(std::vector<std::string> nodes, std::vector<std::vector<std::size_t>> successors)
      : nodes_(std::move(nodes)), successors_(std::move(successors)) {
    if (successors_.size() != nodes_.size()) throw ContractError("successor list size != node count");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!node_index_.emplace(nodes_[i], i).second) {
        throw ValidationError("duplicate node id '" + nodes_[i] + "'");
      }
    }
    for (auto& succ : successors_) {
      std::sort(succ.begin(), succ.end());
      if (std::adjacent_find(succ.begin(), succ.end()) != succ.end()) {
        throw ContractError("repeated linkage");
      }
      for (auto j : succ) {
        if (j >= nodes_.size()) throw ContractError("linkage target out of range");
      }
      num_linkages_ += succ.size();
    }
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::unordered_map<std::string, std::size_t>& node_index() const { return node_index_; }
  std::size_t num_linkages() const { return num_linkages_; }

  /// Row i: sorted indices j with A[i][j] = 1.
  const std::vector<std::size_t>& successors(std::size_t i) const { return successors_.at(i); }

  bool linked(std::size_t from, std::size_t to) const {
    const auto& s = successors_.at(from);
    return std::binary_search(s.begin(), s.end(), to);
  }

  /// Column j of A: sorted indices i with A[i][j] = 1.
  std::vector<std::vector<std::size_t>> predecessors() const {
    std::vector<std::vector<std::size_t>> pred(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (auto j : successors_[i]) pred[j].push_back(i);
    }
    return pred;
  }

  Eigen::MatrixXd adjacency() const {
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (auto j : successors_[i]) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    }
    return a;
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<std::vector<std::size_t>> successors_;
  std::unordered_map<std::string, std::size_t> node_index_;
  std::size_t num_linkages_ = 0;
};

/// Graph transformation: bucket segments by their initial intersection, then
/// each segment's successors are the bucket at its terminal intersection.
inline LinkageNetwork transform(const RoadNetwork& net) {
  const auto& segs = net.segments();
  if (segs.empty()) throw ValidationError("road network has no segments");

  std::unordered_map<std::string, std::vector<std::size_t>> starting_at;
  for (std::size_t i = 0; i < segs.size(); ++i) starting_at[segs[i].init_vertex].push_back(i);

  std::vector<std::string> nodes;
  std::vector<std::vector<std::size_t>> successors(segs.size());
  nodes.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    nodes.push_back(segs[i].id);
    if (auto it = starting_at.find(segs[i].term_vertex); it != starting_at.end()) successors[i] = it->second;
  }
  return LinkageNetwork(std::move(nodes), std::move(successors));
}

using SparseColumns = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// A' = alpha * A + I, held densely and as a column-compressed view.
class PropagationMatrix {
 public:
  PropagationMatrix(const LinkageNetwork& link, double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw ParameterError("alpha must be finite and >= 0, got " + std::to_string(alpha));
    }
    const auto n = static_cast<Eigen::Index>(link.size());
    values_ = Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < link.size(); ++i) {
      for (auto j : link.successors(i)) {
        values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += alpha;
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (values_(i, j) != 0.0) triplets.emplace_back(i, j, values_(i, j));
      }
    }
    sparse_.resize(n, n);
    sparse_.setFromTriplets(triplets.begin(), triplets.end());
    sparse_.makeCompressed();
  }

  double alpha() const { return alpha_; }
  Eigen::Index size() const { return values_.rows(); }
  const Eigen::MatrixXd& values() const { return values_; }

  /// Column-major nonzeros: iterating column j yields every (i, A'[i][j]) != 0.
  const SparseColumns& sparse() const { return sparse_; }

 private:
  double alpha_;
  Eigen::MatrixXd values_;
  SparseColumns sparse_;
};

inline PropagationMatrix build_propagation_matrix(const LinkageNetwork& link, double alpha) {
  return PropagationMatrix(link, alpha);
}

inline const SparseColumns& sparse_view(const PropagationMatrix& pm) { return pm.sparse(); }

/// out = h * A'. Accumulates each output column in ascending row order.
inline void propagate_into(const Eigen::MatrixXd& h, const PropagationMatrix& pm, Eigen::MatrixXd& out) {
  const auto& a = pm.sparse();
  if (h.cols() != a.rows()) throw ContractError("state columns do not match propagation matrix");
  out.setZero(h.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    for (SparseColumns::InnerIterator it(a, j); it; ++it) out.col(j) += it.value() * h.col(it.index());
  }
}

inline Eigen::MatrixXd propagate(const Eigen::MatrixXd& h, const PropagationMatrix& pm) {
  Eigen::MatrixXd out;
  propagate_into(h, pm, out);
  return out;
}

/// out = g * A'^T, the adjoint of propagate().
inline Eigen::MatrixXd propagate_adjoint(const Eigen::MatrixXd& g, const PropagationMatrix& pm) {
  const auto& a = pm.sparse();
  if (g.cols() != a.cols()) throw ContractError("gradient columns do not match propagation matrix");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), a.rows());
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    for (SparseColumns::InnerIterator it(a, j); it; ++it) out.col(it.index()) += it.value() * g.col(j);
  }
  return out;
}

// Synthetic road networks for simulation, benchmarks and tests.

/// One-way chain v0 -> v1 -> ... -> v_n with n segments.
inline RoadNetwork chain_road_network(std::size_t segments) {
  std::vector<Intersection> v;
  std::vector<Segment> e;
  for (std::size_t i = 0; i <= segments; ++i) {
    v.push_back({"v" + std::to_string(i), 121.4 + 0.001 * static_cast<double>(i), 31.2});
  }
  for (std::size_t i = 0; i < segments; ++i) {
    e.push_back({"s" + std::to_string(i), v[i].id, v[i + 1].id});
  }
  return RoadNetwork(std::move(v), std::move(e));
}

/// Ring road over `intersections` vertices; with `two_way` every stretch
/// carries a segment in each direction.
inline RoadNetwork ring_road_network(std::size_t intersections, bool two_way) {
  if (intersections < 2) throw ParameterError("ring needs at least 2 intersections");
  std::vector<Intersection> v;
  std::vector<Segment> e;
  for (std::size_t i = 0; i < intersections; ++i) {
    const double angle = 2.0 * 3.141592653589793 * static_cast<double>(i) / static_cast<double>(intersections);
    v.push_back({"v" + std::to_string(i), 121.47 + 0.01 * std::cos(angle), 31.23 + 0.01 * std::sin(angle)});
  }
  for (std::size_t i = 0; i < intersections; ++i) {
    const auto j = (i + 1) % intersections;
    e.push_back({"s" + std::to_string(e.size()), v[i].id, v[j].id});
    if (two_way) e.push_back({"s" + std::to_string(e.size()), v[j].id, v[i].id});
  }
  return RoadNetwork(std::move(v), std::move(e));
}

/// One-way street grid over rows x cols intersections: every street runs
/// east or north, so the road network is acyclic. `segments` keeps only the
/// first that many segments in row-major order (0 keeps all).
inline RoadNetwork grid_road_network(std::size_t rows, std::size_t cols, std::size_t segments = 0) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ParameterError("grid needs at least 2 intersections");
  std::vector<Intersection> v;
  std::vector<Segment> e;
  auto id = [&](std::size_t r, std::size_t c) { return "v" + std::to_string(r) + "_" + std::to_string(c); };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      v.push_back({id(r, c), 121.40 + 0.005 * static_cast<double>(c), 31.20 + 0.005 * static_cast<double>(r)});
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) e.push_back({"s" + std::to_string(e.size()), id(r, c), id(r, c + 1)});
      if (r + 1 < rows) e.push_back({"s" + std::to_string(e.size()), id(r, c), id(r + 1, c)});
    }
  }
  if (segments > 0) {
    if (segments > e.size()) throw ParameterError("grid has fewer segments than requested");
    e.resize(segments);
  }
  return RoadNetwork(std::move(v), std::move(e));
}

/// A one-way ring over `intersections` vertices plus random extra segments
/// (distinct ordered vertex pairs) up to `segments` in total.
inline RoadNetwork random_road_network(std::size_t intersections, std::size_t segments, std::uint64_t seed,
                                       bool allow_loops = false) {
  if (intersections < 2) throw ParameterError("need at least 2 intersections");
  const std::size_t max_pairs = intersections * (intersections - 1) + (allow_loops ? intersections : 0);
  if (segments < intersections || segments > max_pairs) {
    throw ParameterError("segment count out of range for random road network");
  }
  std::mt19937_64 rng(seed);
  std::vector<Intersection> v;
  for (std::size_t i = 0; i < intersections; ++i) {
    v.push_back({"v" + std::to_string(i), 121.4 + 0.001 * static_cast<double>(i % 17),
                 31.2 + 0.001 * static_cast<double>(i / 17)});
  }
  std::vector<Segment> e;
  std::unordered_set<std::size_t> used;
  auto add = [&](std::size_t a, std::size_t b) {
    if (!used.insert(a * intersections + b).second) return false;
    e.push_back({"s" + std::to_string(e.size()), v[a].id, v[b].id});
    return true;
  };
  for (std::size_t i = 0; i < intersections; ++i) add(i, (i + 1) % intersections);
  std::uniform_int_distribution<std::size_t> pick(0, intersections - 1);
  while (e.size() < segments) {
    const auto a = pick(rng);
    const auto b = pick(rng);
    if (a == b && !allow_loops) continue;
    add(a, b);
  }
  return RoadNetwork(std::move(v), std::move(e));
}

}  // namespace grnn
