/*
 * Copyright 2026 The Adaptex Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "adaptex/bandit.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace adaptex {
namespace {

BanditConfig Config(std::uint64_t seed = 1) {
  BanditConfig c;
  c.seed = seed;
  return c;
}

// Two arms, no features: arm 0 mean ~ N(m0, v0), arm 1 mean ~ N(m1, v1),
// independent.
PosteriorState TwoArmState(double m0, double v0, double m1, double v1) {
  PosteriorState s;
  s.n_arms = 2;
  s.n_features = 0;
  s.coef_mean = Eigen::Vector2d(m0, m1 - m0);
  s.coef_cov.resize(2, 2);
  s.coef_cov << v0, -v0, -v0, v0 + v1;
  return s;
}

TEST(InitStateTest, TwoArmPriorIsDiagonal) {
  BanditConfig c = Config();
  c.prior_var_main = 1e6;
  c.ridge_penalty_interactions = 1;
  const PosteriorState s = InitState(c, 2, 0);
  ASSERT_EQ(s.coef_cov.rows(), 2);
  EXPECT_EQ(s.coef_cov(0, 0), 1e6);
  EXPECT_EQ(s.coef_cov(1, 1), 1e6);
  EXPECT_EQ(s.coef_cov(0, 1), 0.0);
  EXPECT_EQ(s.coef_cov(1, 0), 0.0);
  EXPECT_EQ(s.n_observed, 0);
  EXPECT_TRUE(s.coef_mean.isZero());
}

TEST(InitStateTest, Dimension) {
  EXPECT_EQ((DesignLayout{40, 10}).dim(), 440);
  EXPECT_EQ(InitState(Config(), 40, 10).coef_mean.size(), 440);
}

TEST(InitStateTest, PriorIsSymmetricAndPsd) {
  const PosteriorState s = InitState(Config(), 5, 3);
  EXPECT_TRUE(s.coef_cov.isApprox(s.coef_cov.transpose(), 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.coef_cov);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  // Every pairwise arm contrast has the same prior variance at any context.
  const std::vector<double> x = {0.3, -1.2, 2.0};
  const Eigen::MatrixXd map = s.layout().ArmMap(x);
  const Eigen::MatrixXd c = map * s.coef_cov * map.transpose();
  const double ref = c(0, 0) + c(1, 1) - 2 * c(0, 1);
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      EXPECT_NEAR(c(a, a) + c(b, b) - 2 * c(a, b), ref, 1e-9 * ref) << a << "," << b;
    }
  }
}

TEST(InitStateTest, InvalidConfigRejected) {
  BanditConfig c = Config();
  c.probability_floor = 0.03;
  EXPECT_THROW(InitState(c, 40, 0), Error);
  c = Config();
  c.ridge_penalty_interactions = 0;
  EXPECT_THROW(InitState(c, 2, 1), Error);
  EXPECT_THROW(InitState(Config(), 1, 0), Error);
}

TEST(UpdatePosteriorTest, EmptyHistoryOnlyAdvancesBatch) {
  const BanditConfig c = Config();
  const PosteriorState s = InitState(c, 3, 2);
  const PosteriorState next = UpdatePosterior(s, {}, c);
  EXPECT_EQ(next.batch_index, 1);
  EXPECT_EQ(next.coef_mean, s.coef_mean);
  EXPECT_EQ(next.coef_cov, s.coef_cov);
  EXPECT_EQ(next.noise_var, s.noise_var);
}

std::vector<Observation> TwoArmData(double prop_b) {
  std::vector<Observation> h;
  for (int i = 0; i < 100; ++i) {
    const double e = (i % 2 == 0) ? 1.0 : -1.0;
    h.push_back({{}, 0, 0.5 + e, 1.0 - prop_b});
    h.push_back({{}, 1, 0.3 + e, prop_b});
  }
  return h;
}

TEST(UpdatePosteriorTest, ConjugateTwoArmClosedForm) {
  BanditConfig c = Config();
  c.fixed_noise_var = 1.0;
  const PosteriorState post = UpdatePosterior(InitState(c, 2, 0), TwoArmData(0.5), c);
  const Eigen::MatrixXd map = post.layout().ArmMap(std::vector<double>{});
  const Eigen::VectorXd mean = map * post.coef_mean;
  const Eigen::MatrixXd cov = map * post.coef_cov * map.transpose();
  EXPECT_NEAR(mean[0], 0.5, 1e-4);
  EXPECT_NEAR(mean[1], 0.3, 1e-4);
  EXPECT_NEAR(cov(0, 0), 0.01, 1e-6);
  EXPECT_NEAR(cov(1, 1), 0.01, 1e-6);
  EXPECT_EQ(post.n_observed, 200);
}

TEST(UpdatePosteriorTest, BalanceWeightsKeepWithinArmMeans) {
  BanditConfig c = Config();
  c.fixed_noise_var = 1.0;
  const auto a = UpdatePosterior(InitState(c, 2, 0), TwoArmData(0.5), c);
  const auto b = UpdatePosterior(InitState(c, 2, 0), TwoArmData(0.25), c);
  const Eigen::MatrixXd map = a.layout().ArmMap(std::vector<double>{});
  EXPECT_NEAR((map * a.coef_mean)[1], (map * b.coef_mean)[1], 1e-6);
  EXPECT_NEAR((map * b.coef_mean)[1], 0.3, 1e-4);
}

TEST(UpdatePosteriorTest, NoiseVarianceEstimated) {
  const BanditConfig c = Config();
  const auto post = UpdatePosterior(InitState(c, 2, 0), TwoArmData(0.5), c);
  EXPECT_NEAR(post.noise_var, 200.0 / 198.0, 1e-3);
}

TEST(UpdatePosteriorTest, InvalidObservationsRejected) {
  const BanditConfig c = Config();
  const PosteriorState s = InitState(c, 2, 1);
  const std::vector<Observation> zero_prop = {{{0.0}, 0, 1.0, 0.0}};
  EXPECT_THROW(UpdatePosterior(s, zero_prop, c), Error);
  const std::vector<Observation> nan = {{{0.0}, 0, std::nan(""), 0.5}};
  EXPECT_THROW(UpdatePosterior(s, nan, c), Error);
}

TEST(UpdatePosteriorTest, LargePenaltyShrinksInteractions) {
  BanditConfig c = Config();
  c.ridge_penalty_interactions = 1e9;
  std::vector<Observation> h;
  Rng rng(3);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 400; ++i) {
    const double x = normal(rng);
    const int arm = i % 2;
    h.push_back({{x}, arm, 0.2 * arm + (arm == 1 ? 1.0 : -1.0) * x + normal(rng), 0.5});
  }
  const auto post = UpdatePosterior(InitState(c, 2, 1), h, c);
  EXPECT_LT(std::abs(post.coef_mean[post.layout().interaction_offset(1)]), 1e-5);
}

TEST(ProbabilityTest, SymmetricPriorGivesEqualShares) {
  const BanditConfig c = Config();
  const PosteriorState s = InitState(c, 4, 0);
  const auto p = AssignmentProbabilities(s, std::vector<double>{}, c, 0);
  const double se = std::sqrt(0.25 * 0.75 / c.n_posterior_draws);
  for (double v : p) EXPECT_NEAR(v, 0.25, 3 * se);
}

TEST(ProbabilityTest, AnalyticTwoArmOracle) {
  const PosteriorState s = TwoArmState(0.5, 0.01, 0.3, 0.01);
  const double truth = NormalCdf(0.2 / std::sqrt(0.02));
  EXPECT_NEAR(truth, 0.921, 1e-3);
  const int draws = 4000;
  const double se = std::sqrt(truth * (1 - truth) / draws);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto p = ProbabilityOfBest(s, std::vector<double>{}, draws, rng);
    EXPECT_NEAR(p[0], truth, 3 * se) << "seed " << seed;
  }
}

TEST(ProbabilityTest, DegeneratePosteriorPutsRemainderOnBestArm) {
  BanditConfig c = Config();
  PosteriorState s = InitState(c, 5, 0);
  s.coef_mean << 0.0, 0.1, -0.2, 0.4, 0.3;
  s.coef_cov.setZero();
  const auto p = AssignmentProbabilities(s, std::vector<double>{}, c, 0);
  for (int k = 0; k < 5; ++k) {
    if (k == 3) {
      EXPECT_NEAR(p[k], 1.0 - 4 * c.probability_floor, 1e-12);
    } else {
      EXPECT_EQ(p[k], c.probability_floor);
    }
  }
}

TEST(ProbabilityTest, TiesGoToLowestIndex) {
  PosteriorState s = InitState(Config(), 3, 0);
  s.coef_mean.setZero();
  s.coef_cov.setZero();
  Rng rng(1);
  const auto p = ProbabilityOfBest(s, std::vector<double>{}, 10, rng);
  EXPECT_EQ(p[0], 1.0);
}

TEST(ProbabilityTest, ReproducibleAndStreamDependent) {
  const BanditConfig c = Config(9);
  const PosteriorState s = TwoArmState(0.5, 0.02, 0.45, 0.02);
  const auto a = AssignmentProbabilities(s, std::vector<double>{}, c, 7);
  EXPECT_EQ(a, AssignmentProbabilities(s, std::vector<double>{}, c, 7));
  EXPECT_NE(a, AssignmentProbabilities(s, std::vector<double>{}, c, 8));
}

TEST(ProbabilityTest, ContextLengthChecked) {
  const BanditConfig c = Config();
  const PosteriorState s = InitState(c, 2, 2);
  EXPECT_THROW(AssignmentProbabilities(s, std::vector<double>{1.0}, c, 0), Error);
}

TEST(ApplyFloorTest, Examples) {
  const auto a = ApplyFloor(std::vector<double>{0.999, 0.0005, 0.0005}, 0.0025);
  EXPECT_NEAR(a[0], 0.995, 1e-12);
  EXPECT_EQ(a[1], 0.0025);
  EXPECT_EQ(a[2], 0.0025);
  const std::vector<double> u(8, 0.125);
  EXPECT_EQ(ApplyFloor(u, 0.1), u);
  const auto b = ApplyFloor(std::vector<double>{0.5, 0.5, 0.0}, 0.0025);
  EXPECT_NEAR(b[0], 0.49875, 1e-12);
  EXPECT_NEAR(b[1], 0.49875, 1e-12);
  EXPECT_EQ(b[2], 0.0025);
  EXPECT_THROW(ApplyFloor(std::vector<double>(40, 0.025), 0.03), Error);
}

TEST(ApplyFloorTest, IterativeCascade) {
  // Rescaling after the first pass pushes 0.0026 below the floor.
  const auto p = ApplyFloor(std::vector<double>{0.9, 0.0974, 0.0026, 0.0}, 0.01);
  EXPECT_EQ(p[2], 0.01);
  EXPECT_EQ(p[3], 0.01);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  EXPECT_GT(p[0], p[1]);
}

TEST(DrawAssignmentTest, DegenerateAndUniform) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(DrawAssignment(std::vector<double>{1, 0, 0}, rng), 0);
    EXPECT_EQ(DrawAssignment(std::vector<double>{0, 1}, rng), 1);
  }
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[DrawAssignment(std::vector<double>(4, 0.25), rng)];
  for (int c : counts) EXPECT_NEAR(c / double(n), 0.25, 0.01);
}

// Random posterior states and contexts: every emitted vector is a floored
// simplex point and flooring keeps the argmax.
TEST(ProbabilityPropertyTest, FloorAndSimplexInvariants) {
  BanditConfig c = Config(11);
  c.n_posterior_draws = 200;
  const int k = 6, p = 2;
  Rng rng(12);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 300; ++trial) {
    PosteriorState s = InitState(c, k, p);
    const int d = s.layout().dim();
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = normal(rng) * 0.1;
    }
    s.coef_cov = a * a.transpose() / d;
    for (int i = 0; i < d; ++i) s.coef_mean[i] = normal(rng) * 0.3;
    const std::vector<double> x = {normal(rng), normal(rng)};
    Rng draw_rng(DeriveSeed(c.seed, 0, trial));
    const auto raw = ProbabilityOfBest(s, x, c.n_posterior_draws, draw_rng);
    const auto floored = ApplyFloor(raw, c.probability_floor);
    double sum = 0;
    for (double v : floored) {
      EXPECT_GE(v, c.probability_floor - 1e-12);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const auto max_raw = std::max_element(raw.begin(), raw.end());
    if (*max_raw > c.probability_floor) {
      EXPECT_EQ(max_raw - raw.begin(),
                std::max_element(floored.begin(), floored.end()) - floored.begin());
    }
  }
}

TEST(PosteriorStateTest, SerializeRoundTripIsExact) {
  BanditConfig c = Config();
  std::vector<Observation> h;
  Rng rng(2);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 50; ++i) {
    h.push_back({{normal(rng), normal(rng)}, i % 3, normal(rng), 1.0 / 3.0});
  }
  const auto s = UpdatePosterior(InitState(c, 3, 2), h, c);
  const std::string text = s.Serialize();
  EXPECT_EQ(text.rfind("adaptex-posterior 1\n", 0), 0u);
  EXPECT_EQ(PosteriorState::Deserialize(text), s);
  EXPECT_THROW(PosteriorState::Deserialize("adaptex-posterior 2\n"), Error);
  EXPECT_THROW(PosteriorState::Deserialize(text.substr(0, text.size() / 2)), Error);
}

TEST(HashFeaturesTest, DistinguishesBitPatterns) {
  EXPECT_EQ(HashFeatures(std::vector<double>{1.0, 2.0}),
            HashFeatures(std::vector<double>{1.0, 2.0}));
  EXPECT_NE(HashFeatures(std::vector<double>{1.0, 2.0}),
            HashFeatures(std::vector<double>{2.0, 1.0}));
  EXPECT_NE(HashFeatures(std::vector<double>{0.0}), HashFeatures(std::vector<double>{-0.0}));
}

}  // namespace
}  // namespace adaptex
