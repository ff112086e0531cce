#include <gtest/gtest.h>

#include <random>

#include "grnn/checkpoint.hpp"
#include "grnn/online.hpp"
#include "oracles.hpp"

using namespace grnn;

namespace {

TrainConfig small_config(Optimizer opt = Optimizer::sgd) {
  TrainConfig c;
  c.window = 5;
  c.hidden = 4;
  c.epochs = 3;
  c.lr = 0.05;
  c.optimizer = opt;
  c.seed = 7;
  return c;
}

Eigen::MatrixXd stream(Eigen::Index n, Eigen::Index length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  Eigen::MatrixXd m(n, length);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

RowVector col(const Eigen::MatrixXd& m, Eigen::Index t) { return m.col(t).transpose(); }

}  // namespace

TEST(Online, PredictionComesBeforeTraining) {
  const auto link = transform(random_road_network(3, 5, 2));
  const auto data = stream(5, 20, 1);
  OnlinePredictor trained(link, small_config());
  for (Eigen::Index t = 0; t < data.cols(); ++t) {
    OnlinePredictor frozen = trained;
    frozen.set_epochs(0);
    const auto a = trained.step(col(data, t));
    const auto b = frozen.step(col(data, t));
    EXPECT_EQ(a, b) << "arrival " << t;
  }
}

TEST(Online, ZeroEpochsMatchesUntrainedScalarOracle) {
  const auto road = random_road_network(3, 5, 4);
  const auto link = transform(road);
  auto cfg = small_config();
  cfg.epochs = 0;
  OnlinePredictor p(link, cfg);
  const auto params = p.params();
  const auto a = oracle::propagation(oracle::line_graph(road), cfg.alpha);
  oracle::Grid h = oracle::grid(p.hidden());
  const auto data = stream(5, 12, 3);
  std::vector<Eigen::MatrixXd> window;
  for (Eigen::Index t = 0; t < data.cols(); ++t) {
    const auto pred = p.step(col(data, t));
    window.push_back(data.col(t).transpose());
    if (window.size() > cfg.window) {
      h = oracle::step(params, h, oracle::grid(window.front()), oracle::grid(a)).h;
      window.erase(window.begin());
    }
    oracle::Grid g = h;
    for (const auto& x : window) g = oracle::step(params, g, oracle::grid(x), oracle::grid(a)).h;
    const auto o = oracle::output(params, g);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(pred(j), o[static_cast<std::size_t>(j)], 1e-12);
  }
  EXPECT_EQ(p.params(), params);
}

TEST(Online, WindowSlidesAndHiddenAdvances) {
  const auto link = transform(chain_road_network(3));
  auto cfg = small_config();
  OnlinePredictor p(link, cfg);
  const auto data = stream(3, 8, 5);
  for (Eigen::Index t = 0; t < 8; ++t) p.step(col(data, t));
  EXPECT_EQ(p.window().size(), 5u);
  EXPECT_EQ(p.hidden_timestamp(), 3);
  EXPECT_EQ(p.arrivals(), 8);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(p.window()[k], col(data, static_cast<Eigen::Index>(k + 3)));
}

TEST(Online, NoTrainingUntilTwoObservations) {
  OnlinePredictor p(transform(chain_road_network(2)), small_config());
  const auto before = p.params();
  p.step(RowVector::Constant(2, 0.5));
  EXPECT_EQ(p.params(), before);
  EXPECT_FALSE(p.last_loss().has_value());
  p.step(RowVector::Constant(2, 0.4));
  EXPECT_FALSE(p.params() == before);
  EXPECT_TRUE(p.last_loss().has_value());
}

TEST(Online, Deterministic) {
  const auto link = transform(random_road_network(4, 7, 1));
  const auto data = stream(7, 15, 9);
  OnlinePredictor a(link, small_config(Optimizer::adam)), b(link, small_config(Optimizer::adam));
  for (Eigen::Index t = 0; t < data.cols(); ++t) EXPECT_EQ(a.step(col(data, t)), b.step(col(data, t)));
  EXPECT_EQ(a.params(), b.params());
}

class OnlineResume : public ::testing::TestWithParam<std::tuple<Optimizer, bool>> {};

TEST_P(OnlineResume, CheckpointContinuationIsBitwise) {
  const auto [opt, reinit] = GetParam();
  const auto link = transform(random_road_network(4, 6, 3));
  const auto data = stream(6, 16, 2);
  auto cfg = small_config(opt);
  cfg.reinit_hidden = reinit;
  OnlinePredictor full(link, cfg);
  std::vector<RowVector> expected;
  for (Eigen::Index t = 0; t < data.cols(); ++t) expected.push_back(full.step(col(data, t)));

  for (Eigen::Index cut : {1, 4, 5, 9}) {
    OnlinePredictor first(link, cfg);
    for (Eigen::Index t = 0; t < cut; ++t) first.step(col(data, t));
    const auto bytes = encode_checkpoint(first.snapshot());
    auto resumed = OnlinePredictor::restore(decode_checkpoint(bytes), link);
    EXPECT_EQ(encode_checkpoint(resumed.snapshot()), bytes);
    for (Eigen::Index t = cut; t < data.cols(); ++t) {
      EXPECT_EQ(resumed.step(col(data, t)), expected[static_cast<std::size_t>(t)]) << "cut " << cut << " t " << t;
    }
    EXPECT_EQ(resumed.params(), full.params());
    EXPECT_EQ(resumed.hidden(), full.hidden());
  }
}

INSTANTIATE_TEST_SUITE_P(Optimizers, OnlineResume,
                         ::testing::Combine(::testing::Values(Optimizer::sgd, Optimizer::adam), ::testing::Bool()));

TEST(Online, RestoreRejectsDifferentNetwork) {
  OnlinePredictor p(transform(chain_road_network(3)), small_config());
  EXPECT_THROW(OnlinePredictor::restore(p.snapshot(), transform(chain_road_network(4))), ValidationError);
}

TEST(Online, LearnsConstantSignal) {
  auto cfg = small_config(Optimizer::adam);
  cfg.window = 8;
  cfg.epochs = 10;
  cfg.lr = 0.01;
  OnlinePredictor p(transform(chain_road_network(1)), cfg);
  RowVector x = RowVector::Constant(1, 0.7), pred;
  for (int t = 0; t < 300; ++t) pred = p.step(x);
  EXPECT_NEAR(pred(0), 0.7, 0.05);
}

TEST(Online, DivergenceRaisesNumericError) {
  // A flat start gives a tiny reference loss; a sudden square wave then
  // keeps the loss far above ten times that reference.
  auto cfg = small_config();
  cfg.epochs = 1;
  cfg.lr = 1e-6;
  OnlinePredictor p(transform(chain_road_network(2)), cfg);
  const double flat = p.step(RowVector::Constant(2, 0.5))(0);
  for (int t = 0; t < 6; ++t) p.step(RowVector::Constant(2, flat));
  EXPECT_THROW(
      for (int t = 0; t < 20; ++t) p.step(RowVector::Constant(2, t % 2 ? 0.99 : 0.01)),
      NumericError);
}

TEST(Online, ObservationContract) {
  OnlinePredictor p(transform(chain_road_network(2)), small_config());
  EXPECT_THROW(p.step(RowVector::Constant(3, 0.5)), ContractError);
  EXPECT_THROW(p.step(RowVector::Constant(2, 1.5)), ContractError);
  EXPECT_THROW(p.step(RowVector::Constant(2, std::nan(""))), ContractError);
}

TEST(Online, ConfigValidation) {
  const auto link = transform(chain_road_network(2));
  auto bad = [&](auto mutate) {
    auto c = small_config();
    mutate(c);
    EXPECT_THROW(OnlinePredictor(link, c), ParameterError);
  };
  bad([](TrainConfig& c) { c.window = 0; });
  bad([](TrainConfig& c) { c.hidden = 0; });
  bad([](TrainConfig& c) { c.alpha = -0.1; });
  bad([](TrainConfig& c) { c.lr = 0.0; });
  bad([](TrainConfig& c) { c.clip_norm = -1.0; });
  bad([](TrainConfig& c) { c.divergence_factor = 1.0; });
  EXPECT_EQ(parse_optimizer("adam"), Optimizer::adam);
  EXPECT_THROW(parse_optimizer("rmsprop"), ParameterError);
}

TEST(Offline, ValidationSpan) {
  const auto link = transform(chain_road_network(2));
  auto cfg = small_config();
  cfg.epochs = 1;
  for (Eigen::Index L : {20, 37, 100}) {
    const auto data = stream(2, L, static_cast<std::uint64_t>(L));
    const auto r = run_offline(data, link, cfg, 0.75);
    const auto rows = static_cast<Eigen::Index>(r.validation.intervals.size());
    EXPECT_LE(std::abs(rows - L / 4), 1) << L;
    EXPECT_EQ(r.validation.intervals.back(), L - 1);
    EXPECT_EQ(r.validation.truth.col(0), data.col(r.validation.intervals.front()));
    EXPECT_EQ(run_offline(data, link, cfg, 1.0).validation.intervals.size(), 0u);
  }
  EXPECT_THROW(run_offline(stream(2, 5, 1), link, cfg, 0.75), ValidationError);
  EXPECT_THROW(run_offline(stream(3, 50, 1), link, cfg, 0.75), ContractError);
}
