#include <gtest/gtest.h>

#include "grnn/graph_io.hpp"

using namespace grnn;

TEST(GraphIo, ParsesNodeAndEdgeFiles) {
  const auto net = parse_road_network("# city block\nvertex_id,lng,lat\nA,121.4,31.2\nB,121.5,31.3\n",
                                      "segment_id,init_vertex,term_vertex\n1,A,B\n2,B,A\n");
  EXPECT_EQ(net.num_vertices(), 2u);
  EXPECT_EQ(net.num_segments(), 2u);
  EXPECT_DOUBLE_EQ(net.vertices()[1].lat, 31.3);
}

TEST(GraphIo, WrongHeaderOrBadNumberRejected) {
  EXPECT_THROW(parse_road_network("id,lng,lat\n", "segment_id,init_vertex,term_vertex\n"), ValidationError);
  EXPECT_THROW(parse_road_network("vertex_id,lng,lat\nA,east,31\n", "segment_id,init_vertex,term_vertex\n"),
               ValidationError);
  EXPECT_THROW(parse_road_network("vertex_id,lng,lat\nA,1,2\n", "segment_id,init_vertex,term_vertex\n1,A,Z\n"),
               ValidationError);
}

TEST(GraphIo, FormatParseRoundTrip) {
  const auto net = random_road_network(7, 20, 11);
  const auto back = parse_road_network(format_nodes(net), format_edges(net));
  EXPECT_EQ(format_nodes(back), format_nodes(net));
  EXPECT_EQ(format_edges(back), format_edges(net));
}

TEST(GraphIo, LinkageExportIsRowMajorAndRoundTrips) {
  const auto link = transform(RoadNetwork({{"u", 0, 0}, {"v", 0, 0}}, {{"b", "u", "v"}, {"a", "v", "u"}, {"c", "v", "v"}}));
  const auto text = format_linkages(link);
  EXPECT_EQ(text, "from_segment,to_segment\nb,a\nb,c\na,b\nc,a\nc,c\n");
  const auto back = parse_linkages(text, link.nodes());
  EXPECT_EQ(back.adjacency(), link.adjacency());
  EXPECT_EQ(format_linkages(back), text);
  EXPECT_THROW(parse_linkages("from_segment,to_segment\nb,zz\n", link.nodes()), ValidationError);
}
