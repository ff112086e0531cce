#include <gtest/gtest.h>

#include "grnn/gradcheck.hpp"
#include "oracles.hpp"

using namespace grnn;

namespace {

GradientComparison check(const GradCheckInstance& inst) {
  const auto analytic = analytic_gradient(inst);
  const auto numeric = oracle::fd_gradient(inst.params, inst.initial_hidden, inst.inputs, inst.truth,
                                           inst.propagation.values(), 1e-4);
  return compare_gradients(analytic, numeric, 1e-4, 1e-7);
}

std::string describe(const GradientComparison& c) {
  std::string s;
  for (const auto& f : c.fields)
    s += f.name + " rel=" + std::to_string(f.worst_relative) + " fails=" + std::to_string(f.failures) + "\n";
  return s;
}

}  // namespace

TEST(Backward, MatchesScalarFiniteDifferences) {
  const auto inst = make_gradcheck_instance(4, 6, 5, 0.5, 1);
  const auto c = check(inst);
  EXPECT_TRUE(c.passed()) << describe(c);
}

// Property: analytic gradients agree with central differences across sizes
// and all three alpha regimes.
TEST(BackwardProperty, RandomInstancesAgreeWithOracle) {
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const Eigen::Index D = 1 + static_cast<Eigen::Index>(seed % 6);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>((seed * 5) % 8);
    const std::size_t T = 1 + (seed * 7) % 6;
    const double alpha = std::array<double, 3>{0.0, 0.5, 1.0}[seed % 3];
    const auto inst = make_gradcheck_instance(D, n, T, alpha, 100 + seed);
    const auto c = check(inst);
    EXPECT_TRUE(c.passed()) << "seed " << seed << "\n" << describe(c);
  }
}

TEST(Backward, ZeroErrorWindowHasZeroGradient) {
  auto inst = make_gradcheck_instance(3, 4, 4, 0.5, 2);
  const auto trace = forward(inst.params, inst.initial_hidden, inst.inputs, inst.propagation);
  std::vector<RowVector> truth;
  for (const auto& s : trace.steps) truth.push_back(s.output);
  const auto g = backward(trace, truth, inst.params, inst.propagation);
  EXPECT_EQ(gradient_norm(g), 0.0);
  EXPECT_EQ(g.initial_hidden.cwiseAbs().maxCoeff(), 0.0);
}

// One step: dL/dH = ((o - o.o) * dL/do * w_o)^T, the simplest last-step form.
// The library's output-head gradients are built from the same vector, and
// the closed form itself is checked against differences of the head.
TEST(Backward, SingleStepClosedForm) {
  const auto inst = make_gradcheck_instance(4, 5, 1, 0.5, 3);
  const auto trace = forward(inst.params, inst.initial_hidden, inst.inputs, inst.propagation);
  const auto& s = trace.steps[0];
  const RowVector d_o = -2.0 / 5.0 * (inst.truth[0] - s.output);
  const RowVector d_pre = (s.output.array() * (1.0 - s.output.array()) * d_o.array()).matrix();
  const Matrix d_hidden = (d_pre.transpose() * inst.params.output_weight).transpose();  // D x n

  const auto g = backward(trace, inst.truth, inst.params, inst.propagation);
  EXPECT_LE((g.weights.output_bias - d_pre).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((g.weights.output_weight - d_pre * s.hidden.transpose()).cwiseAbs().maxCoeff(), 1e-15);

  auto head_loss = [&](const Matrix& h) {
    const RowVector o = output_step(inst.params, h);
    return (inst.truth[0] - o).squaredNorm() / 5.0;
  };
  Matrix h = s.hidden;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double saved = h.data()[i];
    h.data()[i] = saved + 1e-5;
    const double up = head_loss(h);
    h.data()[i] = saved - 1e-5;
    const double down = head_loss(h);
    h.data()[i] = saved;
    EXPECT_NEAR((up - down) / 2e-5, d_hidden.data()[i], 1e-9);
  }
}

TEST(Backward, ContractErrors) {
  const auto inst = make_gradcheck_instance(3, 4, 3, 0.5, 4);
  const auto trace = forward(inst.params, inst.initial_hidden, inst.inputs, inst.propagation);
  std::vector<RowVector> shorter(inst.truth.begin(), inst.truth.end() - 1);
  EXPECT_THROW(backward(trace, shorter, inst.params, inst.propagation), ContractError);
  const auto other = init_params(2, 4, 1, 0);
  EXPECT_THROW(backward(trace, inst.truth, other, inst.propagation), ContractError);
}

TEST(FdGradient, OutputBiasMatchesHandChainRule) {
  // 1 node, 1 step, zero params: o = sigmoid(b), L = (x - o)^2.
  const auto link = transform(chain_road_network(1));
  const PropagationMatrix pm(link, 0.5);
  auto p = ModelParams::zeros(2, 1, 1);
  p.output_bias(0, 0) = 0.3;
  const std::vector<Matrix> xs{Matrix::Constant(1, 1, 0.4)};
  const std::vector<RowVector> ys{RowVector::Constant(1, 0.9)};
  const double o = 1.0 / (1.0 + std::exp(-0.3));
  const double want = -2.0 * (0.9 - o) * o * (1.0 - o);
  const auto g = fd_gradient(p, Matrix::Zero(2, 1), xs, ys, pm);
  EXPECT_NEAR(g.weights.output_bias(0, 0), want, 1e-6);
}

TEST(FdGradient, CentralDifferenceIsSecondOrder) {
  const auto inst = make_gradcheck_instance(3, 3, 3, 0.5, 5);
  const auto exact = analytic_gradient(inst);
  auto err = [&](double eps) {
    const auto g = numeric_gradient(inst, eps);
    return std::abs(g.weights.candidate_state(0, 1) - exact.weights.candidate_state(0, 1));
  };
  const double ratio = err(2e-2) / err(1e-2);
  EXPECT_NEAR(ratio, 4.0, 0.5);
}

TEST(FdGradient, LibraryOracleAgreesWithScalarOracle) {
  const auto inst = make_gradcheck_instance(3, 4, 3, 1.0, 6);
  const auto lib = numeric_gradient(inst);
  const auto ref = oracle::fd_gradient(inst.params, inst.initial_hidden, inst.inputs, inst.truth,
                                       inst.propagation.values(), 1e-4);
  EXPECT_TRUE(compare_gradients(lib, ref, 1e-6, 1e-9).passed());
  EXPECT_THROW(fd_gradient(inst.params, inst.initial_hidden, inst.inputs, inst.truth, inst.propagation, 0.0),
               ParameterError);
}

TEST(CompareGradients, DetectsCorruptedEntryAndReportsPerField) {
  const auto inst = make_gradcheck_instance(3, 4, 3, 0.5, 7);
  auto analytic = analytic_gradient(inst);
  const auto numeric = numeric_gradient(inst);
  ASSERT_TRUE(compare_gradients(analytic, numeric).passed());
  analytic.weights.reset_input(1, 0) += 1e-3;
  const auto c = compare_gradients(analytic, numeric);
  EXPECT_FALSE(c.passed());
  ASSERT_EQ(c.fields.size(), 11u);
  for (const auto& f : c.fields) EXPECT_EQ(f.failures, f.name == "reset_input" ? 1u : 0u) << f.name;
  EXPECT_GT(c.worst_relative(), 1e-4);
}

TEST(CompareGradients, AbsoluteFloorAndNonFinite) {
  GradientSet a{ModelParams::zeros(1, 1, 1), Matrix::Zero(1, 1)}, b = a;
  b.weights.update_state(0, 0) = 5e-8;  // below the floor: passes despite 100% relative error
  EXPECT_TRUE(compare_gradients(a, b).passed());
  b.weights.update_state(0, 0) = std::nan("");
  EXPECT_FALSE(compare_gradients(a, b).passed());
}
