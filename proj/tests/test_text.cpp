#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "grnn/text.hpp"

using namespace grnn;

TEST(Text, SplitTrimsFields) {
  EXPECT_EQ(text::split(" a , b,c "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(text::split(""), (std::vector<std::string>{""}));
  EXPECT_EQ(text::split("a,,b"), (std::vector<std::string>{"a", "", "b"}));
}

TEST(Text, ParseRejectsGarbage) {
  EXPECT_DOUBLE_EQ(text::parse_double("2.5", "x"), 2.5);
  EXPECT_EQ(text::parse_int("-7", "x"), -7);
  EXPECT_THROW(text::parse_double("2.5km", "x"), ValidationError);
  EXPECT_THROW(text::parse_double("", "x"), ValidationError);
  EXPECT_THROW(text::parse_int("3.0", "x"), ValidationError);
}

TEST(Text, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / 7.0;
    EXPECT_EQ(text::parse_double(text::format_double(v), "v"), v);
  }
  EXPECT_EQ(text::format_double(0.1), "0.1");
}

TEST(Text, TableHeaderAndComments) {
  const auto t = text::parse_table("# a note\n\nx,y\n1,2\n\n3,4\n", {"x", "y"}, "t");
  EXPECT_EQ(t.comments, std::vector<std::string>{"a note"});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.line_numbers[1], 6u);
  EXPECT_THROW(text::parse_table("y,x\n", {"x", "y"}, "t"), ValidationError);
  EXPECT_THROW(text::parse_table("x,y\n1\n", {"x", "y"}, "t"), ValidationError);
}

TEST(Text, Fnv1aKnownVectors) {
  EXPECT_EQ(text::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(text::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(text::hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
  EXPECT_EQ(text::hex64(1), "0000000000000001");
}

TEST(Text, MissingFileIsValidationError) {
  EXPECT_THROW(text::read_file("/nonexistent/definitely/missing.csv"), ValidationError);
}
