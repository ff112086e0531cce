#pragma once

// Node/edge files for road networks and the linkage export.
//   nodes: vertex_id,lng,lat
//   edges: segment_id,init_vertex,term_vertex
//   linkages: from_segment,to_segment (row-major adjacency order)

#include <string>
#include <string_view>
#include <vector>

#include "grnn/linkage.hpp"
#include "grnn/text.hpp"

namespace grnn {

inline RoadNetwork parse_road_network(std::string_view nodes_text, std::string_view edges_text) {
  const auto nodes = text::parse_table(nodes_text, {"vertex_id", "lng", "lat"}, "nodes");
  const auto edges = text::parse_table(edges_text, {"segment_id", "init_vertex", "term_vertex"}, "edges");
  std::vector<Intersection> v;
  v.reserve(nodes.rows.size());
  for (const auto& r : nodes.rows) {
    v.push_back({r[0], text::parse_double(r[1], "lng"), text::parse_double(r[2], "lat")});
  }
  std::vector<Segment> e;
  e.reserve(edges.rows.size());
  for (const auto& r : edges.rows) e.push_back({r[0], r[1], r[2]});
  return RoadNetwork(std::move(v), std::move(e));
}

inline RoadNetwork load_road_network(const std::string& nodes_path, const std::string& edges_path) {
  return parse_road_network(text::read_file(nodes_path), text::read_file(edges_path));
}

inline std::string format_nodes(const RoadNetwork& net) {
  std::string out = "vertex_id,lng,lat\n";
  for (const auto& v : net.vertices()) {
    out += v.id + "," + text::format_double(v.lng) + "," + text::format_double(v.lat) + "\n";
  }
  return out;
}

inline std::string format_edges(const RoadNetwork& net) {
  std::string out = "segment_id,init_vertex,term_vertex\n";
  for (const auto& s : net.segments()) out += s.id + "," + s.init_vertex + "," + s.term_vertex + "\n";
  return out;
}

inline std::string format_linkages(const LinkageNetwork& link) {
  std::string out = "from_segment,to_segment\n";
  for (std::size_t i = 0; i < link.size(); ++i) {
    for (auto j : link.successors(i)) out += link.nodes()[i] + "," + link.nodes()[j] + "\n";
  }
  return out;
}

/// Rebuild a linkage network from its export. Nodes appear in `node_order`;
/// when empty, order of first appearance is used (isolated nodes are lost).
inline LinkageNetwork parse_linkages(std::string_view contents, std::vector<std::string> node_order = {}) {
  const auto t = text::parse_table(contents, {"from_segment", "to_segment"}, "linkages");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < node_order.size(); ++i) {
    if (!index.emplace(node_order[i], i).second) {
      throw ValidationError("duplicate node id '" + node_order[i] + "'");
    }
  }
  const bool fixed = !node_order.empty();
  auto lookup = [&](const std::string& id) {
    auto it = index.find(id);
    if (it != index.end()) return it->second;
    if (fixed) throw ValidationError("linkage references unknown segment '" + id + "'");
    node_order.push_back(id);
    index.emplace(id, node_order.size() - 1);
    return node_order.size() - 1;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& r : t.rows) {
    const auto a = lookup(r[0]);
    const auto b = lookup(r[1]);
    pairs.emplace_back(a, b);
  }
  std::vector<std::vector<std::size_t>> succ(node_order.size());
  for (auto [a, b] : pairs) succ[a].push_back(b);
  return LinkageNetwork(std::move(node_order), std::move(succ));
}

}  // namespace grnn
