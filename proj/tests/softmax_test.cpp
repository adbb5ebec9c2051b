#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "finmdp/io.hpp"
#include "finmdp/softmax.hpp"
#include "finmdp/value.hpp"
#include "support/random_mdp.hpp"

using namespace finmdp;

TEST(SoftmaxRow, ZeroParametersGiveUniform) {
  for (int n : {1, 2, 5}) {
    const auto p = softmax_row(std::vector<double>(n, 0.0));
    for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / n);
  }
}

TEST(SoftmaxRow, ClosedFormLogThree) {
  const auto p = softmax_row({std::log(3.0), 0.0});
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
}

TEST(SoftmaxRow, ShiftInvariant) {
  const std::vector<double> row = {0.3, -1.2, 2.5};
  const auto p = softmax_row(row);
  for (double c : {1.0, -7.5, 300.0}) {
    std::vector<double> shifted = row;
    for (double& x : shifted) x += c;
    const auto q = softmax_row(shifted);
    for (std::size_t a = 0; a < row.size(); ++a) EXPECT_NEAR(q[a], p[a], 1e-14);
  }
}

TEST(SoftmaxRow, LargeMagnitudesStayNormalised) {
  CounterRng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> row(2 + static_cast<int>(rng.next_double() * 4));
    for (double& x : row) x = (2.0 * rng.next_double() - 1.0) * 700.0;
    const auto p = softmax_row(row);
    double sum = 0.0;
    for (double x : p) {
      EXPECT_TRUE(std::isfinite(x));
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(PolicyOf, RowsMatchPerRowSoftmax) {
  const FiniteMdp m = testsup::random_mdp(2);
  CounterRng rng(3);
  const ParamTensor theta = testsup::random_theta(m, rng, 2.0);
  const TabularPolicy pi = policy_of(theta);
  validate_policy(m, pi);
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states(h); ++s)
      EXPECT_EQ(pi.prob[h][s], softmax_row(theta.value[h][s]));
}

TEST(LogPolicyGrad, SingleActionVanishes) {
  const FiniteMdp m = testsup::random_mdp(7, {.max_horizon = 3, .max_actions = 1});
  const ParamTensor theta = ParamTensor::zeros(m);
  const GradTensor g = log_policy_grad(m, theta, 0, 0, 0);
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(LogPolicyGrad, UniformTwoActionClosedForm) {
  const FiniteMdp m = testsup::bandit2();
  const GradTensor g = log_policy_grad(m, ParamTensor::zeros(m), 0, 0, 0);
  EXPECT_DOUBLE_EQ(g.value[0][0][0], 0.5);
  EXPECT_DOUBLE_EQ(g.value[0][0][1], -0.5);
}

TEST(LogPolicyGrad, RowsSumToZero) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiniteMdp m = testsup::random_mdp(seed);
    CounterRng rng(seed + 40);
    const ParamTensor theta = testsup::random_theta(m, rng, 3.0);
    for (int h = 0; h < m.horizon; ++h)
      for (int s = 0; s < m.num_states(h); ++s)
        for (int a = 0; a < m.num_actions(h, s); ++a) {
          const GradTensor g = log_policy_grad(m, theta, h, s, a);
          double sum = 0.0;
          for (double x : g.value[h][s]) sum += x;
          EXPECT_NEAR(sum, 0.0, 1e-12);
        }
  }
}

TEST(LogPolicyGrad, MatchesFiniteDifferences) {
  const double step = 1e-6;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FiniteMdp m = testsup::random_mdp(seed, {.min_actions = 2});
    CounterRng rng(seed + 60);
    ParamTensor theta = testsup::random_theta(m, rng, 1.5);
    const int h = testsup::uniform_int(rng, 0, m.horizon - 1);
    const int s = testsup::uniform_int(rng, 0, m.num_states(h) - 1);
    const int a = testsup::uniform_int(rng, 0, m.num_actions(h, s) - 1);
    const GradTensor g = log_policy_grad(m, theta, h, s, a);
    for (int ap = 0; ap < m.num_actions(h, s); ++ap) {
      const double saved = theta.value[h][s][ap];
      theta.value[h][s][ap] = saved + step;
      const double up = std::log(softmax_row(theta.value[h][s])[a]);
      theta.value[h][s][ap] = saved - step;
      const double dn = std::log(softmax_row(theta.value[h][s])[a]);
      theta.value[h][s][ap] = saved;
      EXPECT_NEAR(g.value[h][s][ap], (up - dn) / (2 * step), 1e-6);
    }
  }
}

TEST(LipschitzGap, IdenticalTensorsGiveZero) {
  const FiniteMdp m = testsup::random_mdp(1);
  CounterRng rng(9);
  const ParamTensor theta = testsup::random_theta(m, rng);
  const LipschitzGap gap = lipschitz_gap(theta, theta);
  EXPECT_EQ(gap.max_policy_gap, 0.0);
  EXPECT_EQ(gap.param_distance, 0.0);
}

TEST(LipschitzGap, PolicyMapIsRootTwoLipschitz) {
  const double root2 = std::sqrt(2.0);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const FiniteMdp m = testsup::random_mdp(seed % 50);
    CounterRng rng(seed + 100);
    const ParamTensor t1 = testsup::random_theta(m, rng, 4.0);
    const ParamTensor t2 = testsup::random_theta(m, rng, 4.0);
    const LipschitzGap gap = lipschitz_gap(t1, t2);
    EXPECT_LE(gap.max_policy_gap, root2 * gap.param_distance + 1e-15);
  }
}

TEST(LipschitzGap, RowShiftMovesParametersNotPolicy) {
  const FiniteMdp m = testsup::bandit2();
  CounterRng rng(21);
  const ParamTensor t1 = testsup::random_theta(m, rng);
  ParamTensor t2 = t1;
  for (double& x : t2.value[0][0]) x += 2.5;
  const LipschitzGap gap = lipschitz_gap(t1, t2);
  EXPECT_NEAR(gap.max_policy_gap, 0.0, 1e-15);
  EXPECT_GT(gap.param_distance, 0.0);
}

TEST(MinOptimalProb, RootTwoLipschitzAlongSegment) {
  const double root2 = std::sqrt(2.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiniteMdp m = testsup::random_mdp(seed, {.constant_space = true});
    const OptimalSolution opt = backward_induction_optimal(m);
    CounterRng rng(seed + 200);
    const ParamTensor a = testsup::random_theta(m, rng, 3.0);
    const ParamTensor b = testsup::random_theta(m, rng, 3.0);
    double prev_t = 0.0;
    double prev = min_optimal_prob(policy_of(a), opt.best_action);
    for (int k = 1; k <= 10; ++k) {
      const double t = k / 10.0;
      ParamTensor mid = a;
      for (std::size_t h = 0; h < mid.value.size(); ++h)
        for (std::size_t s = 0; s < mid.value[h].size(); ++s)
          for (std::size_t i = 0; i < mid.value[h][s].size(); ++i)
            mid.value[h][s][i] += t * (b.value[h][s][i] - a.value[h][s][i]);
      const double cur = min_optimal_prob(policy_of(mid), opt.best_action);
      const double seg = (t - prev_t) * param_distance(a, b);
      EXPECT_LE(std::abs(cur - prev), root2 * seg + 1e-12);
      prev = cur;
      prev_t = t;
    }
  }
}

TEST(Checkpoint, JsonRoundTripIsExact) {
  const FiniteMdp m = testsup::random_mdp(6);
  CounterRng rng(13);
  const ParamTensor theta = testsup::random_theta(m, rng, 5.0);
  const ParamTensor back = checkpoint_from_json(m, checkpoint_to_json(m, theta));
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states(h); ++s)
      for (int a = 0; a < m.num_actions(h, s); ++a)
        EXPECT_EQ(back.value[h][s][a], theta.value[h][s][a]);
}

TEST(Checkpoint, RejectsMissingOrNonFiniteEntries) {
  const FiniteMdp m = testsup::bandit2();
  ordered_json j = checkpoint_to_json(m, ParamTensor::zeros(m));
  ordered_json missing = j;
  missing["epochs"][0]["s"].erase("a1");
  EXPECT_THROW(checkpoint_from_json(m, missing), validation_error);
  ordered_json wrong_epochs = j;
  wrong_epochs["epochs"].push_back(ordered_json::object());
  EXPECT_THROW(checkpoint_from_json(m, wrong_epochs), validation_error);
  ordered_json infinite = j;
  infinite["epochs"][0]["s"]["a0"] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(checkpoint_from_json(m, infinite), validation_error);
}
