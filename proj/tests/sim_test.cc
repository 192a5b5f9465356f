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

#include "adaptex/sim.h"

#include <gtest/gtest.h>

#include <cmath>

#include "adaptex/common.h"

namespace adaptex {
namespace {

double Logistic(double z) { return 1 / (1 + std::exp(-z)); }

TEST(DgpTest, CalibratedValidatesAndControlProbabilities) {
  const DgpSpec dgp = DgpSpec::Calibrated();
  EXPECT_NO_THROW(dgp.Validate());
  const std::vector<double> x(dgp.n_features, 0.0);
  const ShareProbabilities p = CellProbabilities(dgp, x, 0, 0);
  EXPECT_DOUBLE_EQ(p.false_share, Logistic(-0.85));
  EXPECT_DOUBLE_EQ(p.true_share, Logistic(-0.58));
  EXPECT_EQ(dgp.Arms().size(), 40);
  EXPECT_EQ(dgp.Schema().FeatureCount(), dgp.n_features);
}

TEST(DgpTest, InvalidSpecsRejected) {
  DgpSpec d = DgpSpec::Calibrated();
  d.attrition_rate = 1.0;
  EXPECT_THROW(d.Validate(), Error);
  d = DgpSpec::Calibrated();
  d.channel_tilt = 1.5;
  EXPECT_THROW(d.Validate(), Error);
  d = DgpSpec::Calibrated();
  d.respondent_false.assign(20, 0.0);
  EXPECT_THROW(d.Validate(), Error);
}

TEST(OracleMeanTest, CountMeasuresAreLinearInProbabilities) {
  const DgpSpec dgp = DgpSpec::Calibrated();
  const std::vector<double> x = {0.4, -1.0, 0.2, 0.0};
  const ShareProbabilities p = CellProbabilities(dgp, x, 3, 2);
  EXPECT_NEAR(OracleMean(dgp, x, 3, 2, OutcomeMeasure::kDiscernment),
              -4 * p.false_share + 0.5 * 4 * p.true_share, 1e-12);
  EXPECT_NEAR(OracleMean(dgp, x, 3, 2, OutcomeMeasure::kFalseCount), p.false_share, 1e-12);
  const ResponseWeights w{-0.25, 1.0};
  EXPECT_NEAR(OracleMean(dgp, x, 3, 2, OutcomeMeasure::kDiscernment, w),
              -0.25 * 4 * p.false_share + 4 * p.true_share, 1e-12);
}

TEST(OracleMeanTest, AnyChannelWithoutUnitEffectOrTilt) {
  DgpSpec dgp = DgpSpec::Calibrated();
  dgp.unit_concentration = 0;
  dgp.channel_tilt = 0;
  const std::vector<double> x(4, 0.0);
  const double q = CellProbabilities(dgp, x, 0, 0).false_share;
  EXPECT_NEAR(OracleMean(dgp, x, 0, 0, OutcomeMeasure::kFalseAny), 1 - (1 - q) * (1 - q),
              1e-12);
}

// Monte-Carlo check of every measure against the closed form at one context.
TEST(OracleMeanTest, AgreesWithSimulatedPosttests) {
  DgpSpec dgp = DgpSpec::Calibrated();
  dgp.n_features = 1;
  dgp.false_slope = {0};
  dgp.true_slope = {0};
  dgp.attrition_rate = 0;
  const auto pop = GeneratePopulation(dgp, 40000, 5);
  double any_f = 0, any_t = 0, disc = 0;
  for (const auto& u : pop) {
    OutcomeRecord o = OutcomeRecord::FromDetail(DrawPosttest(dgp, u, 2, 1), true);
    const ChannelResponses c = ComputeChannelResponses(o);
    any_f += c.false_any;
    any_t += c.true_any;
    disc += Discernment(o, {}, Phase::kPost);
  }
  const double n = pop.size();
  const std::vector<double> x0 = {0.0};
  EXPECT_NEAR(any_f / n, OracleMean(dgp, x0, 2, 1, OutcomeMeasure::kFalseAny), 0.01);
  EXPECT_NEAR(any_t / n, OracleMean(dgp, x0, 2, 1, OutcomeMeasure::kTrueAny), 0.01);
  EXPECT_NEAR(disc / n, OracleMean(dgp, x0, 2, 1, OutcomeMeasure::kDiscernment), 0.03);
}

TEST(PopulationTest, ControlFalseAnyNearCalibrationTarget) {
  const DgpSpec dgp = DgpSpec::Calibrated();
  const auto pop = GeneratePopulation(dgp, 10000, 0);
  double any = 0;
  for (const auto& u : pop) {
    any += ComputeChannelResponses(
               OutcomeRecord::FromDetail(DrawPosttest(dgp, u, 0, 0), true))
               .false_any;
  }
  EXPECT_NEAR(any / pop.size(), 0.47, 0.02);
  EXPECT_NEAR(PopulationMean(dgp, 0, 0, OutcomeMeasure::kDiscernment), -0.48, 0.05);
}

TEST(PopulationTest, DeterministicIdsAndAttrition) {
  const DgpSpec dgp = DgpSpec::Calibrated();
  const auto a = GeneratePopulation(dgp, 20000, 3);
  const auto b = GeneratePopulation(dgp, 20000, 3);
  ASSERT_EQ(a.size(), 20000u);
  EXPECT_EQ(a[0].unit_id, 3'000'000'001);
  EXPECT_EQ(a[5].x, b[5].x);
  EXPECT_EQ(DrawPosttest(dgp, a[7], 4, 3), DrawPosttest(dgp, b[7], 4, 3));
  int censored = 0;
  for (const auto& u : a) censored += !u.completes;
  EXPECT_NEAR(censored / 20000.0, 0.07, 0.01);
  const auto other = GeneratePopulation(dgp, 10, 4);
  EXPECT_NE(other[0].x, a[0].x);
}

TEST(PopulationTest, PretestMatchesContext) {
  DgpSpec dgp = DgpSpec::Calibrated();
  dgp.pretest_feature = true;
  const auto pop = GeneratePopulation(dgp, 50, 1);
  for (const auto& u : pop) {
    const CovariateContext c = u.Context(dgp);
    const OutcomeRecord pre = OutcomeRecord::FromDetail(u.pretest, true);
    EXPECT_EQ(c.pretest_false_stratum, pre.m_pre);
    EXPECT_EQ(c.pretest_true_stratum, pre.t_pre);
    EXPECT_EQ(static_cast<int>(c.features.size()), dgp.n_features + 2);
    EXPECT_EQ(pre.m_post + pre.t_post, 0);
  }
}

TEST(PopulationTest, NullDgpHasEqualArms) {
  const DgpSpec dgp = DgpSpec::Null();
  const std::vector<double> x = {0.3, -0.2};
  const double base = OracleMean(dgp, x, 0, 0, OutcomeMeasure::kDiscernment);
  for (int r = 0; r < dgp.respondent_levels; ++r) {
    for (int h = 0; h < dgp.headline_levels; ++h) {
      EXPECT_EQ(OracleMean(dgp, x, r, h, OutcomeMeasure::kDiscernment), base);
    }
  }
}

TEST(DesignTest, EvaluationArms) {
  const auto policy = std::make_shared<const Policy>(Policy::Constant(2, 4));
  const ArmSpace policy_arms = ArmSpace::Flat(
      {{"r1", {1, 0}}, {"r2", {2, 0}}, {"r3", {3, 0}}, {"r4", {4, 0}}});
  const Design d = Design::Evaluation(1, 2, 1, 2, policy, policy_arms);
  ASSERT_EQ(d.space.size(), 6);
  EXPECT_EQ(d.space.name(0), "control");
  EXPECT_EQ(d.space.name(5), "targeted");
  EXPECT_EQ(d.space.arm(5).respondent_level, 5);
  EXPECT_EQ(d.bandit.fixed_probabilities, std::vector<double>(6, 1.0 / 6.0));
  EXPECT_FALSE(d.cells[5].has_value());
  const std::vector<double> x = {0.0};
  EXPECT_EQ(ResolveCell(d, 5, x), (Arm{3, 0}));
  EXPECT_EQ(ResolveCell(d, 0, x), (Arm{0, 0}));
  EXPECT_EQ(ResolveCell(d, 1, x), (Arm{0, 1}));
  EXPECT_EQ(ResolveCell(d, 3, x), (Arm{1, 0}));
}

Design SmallLearning(const DgpSpec& dgp, std::uint64_t seed) {
  BanditConfig b;
  b.seed = seed;
  b.n_posterior_draws = 200;
  return Design::Learning(dgp, b, BatchSchedule{300, 200, 0});
}

TEST(SimulateTest, ByteReproducibleAndConsistent) {
  DgpSpec dgp = DgpSpec::Calibrated();
  dgp.respondent_levels = 3;
  dgp.headline_levels = 2;
  for (auto* v : {&dgp.respondent_false, &dgp.respondent_true, &dgp.respondent_false_x0,
                  &dgp.respondent_true_x0}) {
    v->resize(3);
  }
  dgp.headline_false.resize(2);
  dgp.headline_true.resize(2);
  const Design design = SmallLearning(dgp, 4);
  const SimulationResult a = SimulateExperiment(dgp, design, 900);
  const SimulationResult b = SimulateExperiment(dgp, design, 900);
  EXPECT_EQ(a.event_log, b.event_log);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.posterior_updates, 3);
  ASSERT_EQ(a.dataset.size(), 900u);
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    const UnitRecord& u = a.dataset.units[i];
    EXPECT_EQ(a.dataset.arms.arm(u.arm), a.realized_cells[i]);
    EXPECT_EQ(u.outcome.completed, a.population[i].completes);
    if (!u.outcome.completed) EXPECT_EQ(u.outcome.m_post + u.outcome.t_post, 0);
    EXPECT_NO_THROW(u.outcome.Validate());
  }
  EXPECT_EQ(a.dataset.units[299].batch, 0);
  EXPECT_EQ(a.dataset.units[300].batch, 1);
}

TEST(SimulateTest, FixedDesignUsesGivenProbabilities) {
  const DgpSpec dgp = DgpSpec::Null();
  const ArmSpace space = ArmSpace::Flat({{"a", {0, 0}}, {"b", {1, 1}}});
  const Design d = Design::Fixed(space, {0.25, 0.75});
  const SimulationResult r = SimulateExperiment(dgp, d, 4000);
  int n_b = 0;
  for (const auto& u : r.dataset.units) {
    EXPECT_EQ(u.propensities, (std::vector<double>{0.25, 0.75}));
    n_b += u.arm == 1;
  }
  EXPECT_NEAR(n_b / 4000.0, 0.75, 0.03);
  EXPECT_EQ(r.posterior_updates, 0);
}

TEST(RegretTest, UniformDesignMatchesCounterfactual) {
  const DgpSpec dgp = DgpSpec::Calibrated();
  BanditConfig b;
  b.mode = AssignmentMode::kUniform;
  b.seed = 3;
  const Design d = Design::Learning(dgp, b, BatchSchedule{1000, 1000, 0});
  const SimulationResult r = SimulateExperiment(dgp, d, 3000);
  const RegretReport rep = MakeRegretReport(r, dgp, d);
  EXPECT_NEAR(rep.in_experiment_mean, rep.uniform_counterfactual_true, 0.02);
  ASSERT_EQ(rep.best_arm_share_by_batch.size(), 3u);
  for (double s : rep.best_arm_share_by_batch) EXPECT_LT(s, 0.1);
}

TEST(CoverageTest, SmallRunProducesRows) {
  const DgpSpec dgp = DgpSpec::Null();
  CoverageConfig c;
  c.n_per_rep = 400;
  c.n_reps = 3;
  c.cells = {{0, 0}, {1, 0}};
  c.schedule = {200, 100, 0};
  c.bandit.n_posterior_draws = 100;
  c.seed = 5;
  const auto rows = CoverageExperiment(dgp, c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].estimator, "aipw_uniform");
  EXPECT_EQ(rows[0].n_reps, 3);
  EXPECT_EQ(rows[0].n_intervals, 6);
  EXPECT_EQ(CoverageCsv(rows).rfind("estimator,n_reps,n_intervals,coverage,mean_width,mean_bias\n", 0),
            0u);
  EXPECT_EQ(CoverageCsv(rows), CoverageCsv(CoverageExperiment(dgp, c)));
}

}  // namespace
}  // namespace adaptex
