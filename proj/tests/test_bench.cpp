#include <gtest/gtest.h>

#include "grnn/bench.hpp"

using namespace grnn;

TEST(Bench, ParameterCountsMatchShapeArithmetic) {
  for (Eigen::Index D : {1, 4, 16}) {
    for (Eigen::Index n : {1, 7, 50}) {
      const auto p = ModelParams::zeros(D, n, 1);
      std::size_t shapes = 0;
      p.for_each([&](std::string_view, const Matrix& m) { shapes += static_cast<std::size_t>(m.rows() * m.cols()); });
      const auto uD = static_cast<std::size_t>(D), un = static_cast<std::size_t>(n);
      EXPECT_EQ(p.shared_parameter_count(), shared_weight_count(uD));
      EXPECT_EQ(shapes + uD * un, joint_parameter_count(un, uD));
      EXPECT_EQ(separate_parameter_count(un, uD), un * joint_parameter_count(1, uD));
    }
  }
  EXPECT_EQ(shared_weight_count(16), 3u * 256 + 3u * 16 + 16);
}

TEST(Bench, RowsReportFootprints) {
  BenchSettings s;
  s.hidden = 4;
  s.window = 4;
  s.steps = 3;
  s.warmup = 1;
  s.sizes = {1, 3};
  const auto rows = complexity_bench(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].param_count, joint_parameter_count(3, 4));
  EXPECT_EQ(rows[1].separate_param_count, separate_parameter_count(3, 4));
  EXPECT_GT(rows[1].wall_ms_per_step, 0.0);
  const auto csv = format_bench(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,wall_ms_per_step,param_count,separate_wall_ms_per_step,separate_param_count");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Bench, SingleSegmentCostsTheSameEitherWay) {
  BenchSettings s;
  s.hidden = 8;
  s.steps = 200;
  const auto row = bench_size(1, s);
  EXPECT_GT(row.speedup(), 0.5);
  EXPECT_LT(row.speedup(), 2.0);
}

TEST(Bench, RejectsEmptyRuns) {
  BenchSettings s;
  s.steps = 0;
  EXPECT_THROW(bench_size(2, s), ParameterError);
  EXPECT_THROW(bench_size(0, BenchSettings{}), ParameterError);
}
