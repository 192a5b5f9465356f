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

#include "adaptex/estimators.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "adaptex/common.h"
#include "test_util.h"

namespace adaptex {
namespace {

using testing::FlatDataset;
using testing::MakeUnit;

constexpr int kN = 10;
constexpr int kArms = 3;

// Ten units over three arms with varied propensities and explicit
// conditional-mean predictions.
struct Fixture {
  Dataset data;
  std::vector<double> y;
  MuModel mu;
};

Fixture TenUnits() {
  Fixture f;
  f.data = FlatDataset(kArms, 1);
  const int arms[kN] = {0, 1, 2, 0, 1, 2, 0, 0, 1, 2};
  const double e0[kN] = {0.5, 0.2, 0.3, 0.6, 0.1, 0.25, 0.4, 0.7, 0.3, 0.2};
  const double e1[kN] = {0.3, 0.5, 0.3, 0.2, 0.6, 0.25, 0.4, 0.1, 0.4, 0.3};
  const int m[kN] = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  const int t[kN] = {4, 3, 2, 1, 0, 0, 1, 2, 3, 4};
  f.mu.predictions.resize(kN, kArms);
  for (int i = 0; i < kN; ++i) {
    const std::vector<double> e = {e0[i], e1[i], 1.0 - e0[i] - e1[i]};
    f.data.units.push_back(MakeUnit(i + 1, arms[i], e, {0.1 * i}, m[i], t[i], i / 4));
    f.y.push_back(Discernment(m[i], t[i]));
    for (int w = 0; w < kArms; ++w) f.mu.predictions(i, w) = -1.0 + 0.1 * w + 0.05 * i;
  }
  return f;
}

TEST(AipwScoresTest, MatchesDirectFormula) {
  const Fixture f = TenUnits();
  const ScoreTable s = AipwScores(f.data, f.y, f.mu);
  ASSERT_EQ(s.size(), kN);
  for (int i = 0; i < kN; ++i) {
    const auto& u = f.data.units[i];
    for (int w = 0; w < kArms; ++w) {
      const double m = f.mu.predictions(i, w);
      const double ind = u.arm == w ? 1.0 : 0.0;
      const double expected = m + ind / u.propensities[w] * (f.y[i] - m);
      EXPECT_NEAR(s.gamma(i, w), expected, 1e-12);
    }
  }
}

TEST(AipwScoresTest, UnitWeightsGivePlainMeanExactly) {
  const Fixture f = TenUnits();
  ScoreTable s = AipwScores(f.data, f.y, f.mu);
  for (int w = 0; w < kArms; ++w) {
    const Estimate plain = MeanResponse(s, w);
    double sum = 0;
    for (int i = 0; i < kN; ++i) sum += s.gamma(i, w);
    EXPECT_NEAR(plain.value, sum / kN, 1e-15);
    s.adaptive = AdaptiveWeights(s.propensity, AdaptiveScheme::kUniform);
    const Estimate weighted = MeanResponse(s, w);
    EXPECT_EQ(weighted.value, plain.value);
    EXPECT_EQ(weighted.std_error, plain.std_error);
    s.adaptive.reset();
  }
}

TEST(AipwScoresTest, IpwUsesZeroModel) {
  const Fixture f = TenUnits();
  const ScoreTable s = IpwScores(f.data, f.y);
  for (int i = 0; i < kN; ++i) {
    const auto& u = f.data.units[i];
    for (int w = 0; w < kArms; ++w) {
      EXPECT_EQ(s.gamma(i, w), u.arm == w ? f.y[i] / u.propensities[w] : 0.0);
    }
  }
}

TEST(AipwScoresTest, ZeroRealizedPropensityRejected) {
  Fixture f = TenUnits();
  f.data.units[0].propensities = {0.0, 0.5, 0.5};
  EXPECT_THROW(AipwScores(f.data, f.y, f.mu), Error);
}

TEST(AdaptiveWeightsTest, StabilizedIsSquareRootOfPropensity) {
  Eigen::MatrixXd e(1, 3);
  e << 0.25, 0.64, 0.11;
  const Eigen::MatrixXd h = AdaptiveWeights(e, AdaptiveScheme::kStabilizedVariance);
  EXPECT_EQ(h(0, 0), 0.5);
  EXPECT_EQ(h(0, 1), 0.8);
  EXPECT_EQ(AdaptiveWeights(e, AdaptiveScheme::kUniform), Eigen::MatrixXd::Ones(1, 3));
}

TEST(HajekMeanTest, UnitWeightsGiveSampleMeanAndSe) {
  const std::vector<double> g = {1, 2, 3, 4, 6};
  const std::vector<double> v(5, 1.0);
  const Estimate e = HajekMean(g, v);
  EXPECT_DOUBLE_EQ(e.value, 3.2);
  double ss = 0;
  for (double x : g) ss += (x - 3.2) * (x - 3.2);
  EXPECT_NEAR(e.std_error, std::sqrt(ss / 4.0) / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(e.ci_lo, 3.2 - 1.96 * e.std_error, 1e-15);
  EXPECT_EQ(e.n, 5);
}

TEST(HajekMeanTest, RatioForm) {
  const std::vector<double> g = {1, 3};
  const std::vector<double> v = {3, 1};
  EXPECT_DOUBLE_EQ(HajekMean(g, v).value, 1.5);
  EXPECT_THROW(HajekMean(std::vector<double>{}, std::vector<double>{}), Error);
  EXPECT_THROW(HajekMean(g, std::vector<double>{0, 0}), Error);
}

TEST(MakeEstimateTest, PValue) {
  const Estimate e = MakeEstimate(1.96, 1.0, 10);
  EXPECT_NEAR(e.p_two_sided, 0.05, 1e-4);
  EXPECT_EQ(MakeEstimate(0, 0, 1).p_two_sided, 1.0);
}

TEST(ContrastTest, EqualsDifferenceOfMeansWithPairedSe) {
  const Fixture f = TenUnits();
  const ScoreTable s = AipwScores(f.data, f.y, f.mu);
  const Estimate c = Contrast(s, 1, 0);
  EXPECT_NEAR(c.value, MeanResponse(s, 1).value - MeanResponse(s, 0).value, 1e-14);
  std::vector<double> diff;
  for (int i = 0; i < kN; ++i) diff.push_back(s.gamma(i, 1) - s.gamma(i, 0));
  const Estimate direct = HajekMean(diff, std::vector<double>(kN, 1.0));
  EXPECT_NEAR(c.std_error, direct.std_error, 1e-14);
  EXPECT_THROW(Contrast(s, 1, 1), Error);
}

TEST(ContrastTest, SubgroupSelectsRows) {
  const Fixture f = TenUnits();
  const ScoreTable s = AipwScores(f.data, f.y, f.mu);
  std::vector<std::uint8_t> mask(kN, 0);
  mask[2] = mask[5] = 1;
  WeightingOptions o;
  o.subgroup = mask;
  EXPECT_NEAR(MeanResponse(s, 2, o).value, (s.gamma(2, 2) + s.gamma(5, 2)) / 2, 1e-15);
  const std::vector<std::uint8_t> none(kN, 0);
  o.subgroup = none;
  EXPECT_THROW(MeanResponse(s, 0, o), Error);
}

TEST(UniformCounterfactualTest, AverageOfArmMeans) {
  const Fixture f = TenUnits();
  const ScoreTable s = AipwScores(f.data, f.y, f.mu);
  double avg = 0;
  for (int w = 0; w < kArms; ++w) avg += MeanResponse(s, w).value / kArms;
  EXPECT_NEAR(UniformCounterfactualValue(s).value, avg, 1e-14);
}

TEST(InteractionContrastsTest, RowsSumToZero) {
  Dataset d;
  d.arms = ArmSpace::Factorial(2, 2);
  Rng rng(4);
  std::uniform_int_distribution<int> arm(0, 3), count(0, 2);
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    d.units.push_back(MakeUnit(i + 1, arm(rng), {0.25, 0.25, 0.25, 0.25}, {}, count(rng),
                               count(rng)));
    y.push_back(Discernment(d.units.back().outcome.m_post, d.units.back().outcome.t_post));
  }
  const ScoreTable s = IpwScores(d, y);
  const auto table = InteractionContrasts(s, d.arms);
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(table[0][c].value + table[1][c].value, 0.0, 1e-12);
    EXPECT_NEAR(table[0][c].value,
                (MeanResponse(s, d.arms.IndexOf({0, c})).value -
                 MeanResponse(s, d.arms.IndexOf({1, c})).value) / 2,
                1e-12);
  }
  EXPECT_THROW(InteractionContrasts(s, FlatDataset(4, 0).arms), Error);
}

TEST(CensoringTest, ClipBounds) {
  EXPECT_EQ(ClipCensorWeight(0.5), 2.0);
  EXPECT_EQ(ClipCensorWeight(1.0), 1.0);
  EXPECT_EQ(ClipCensorWeight(0.001), 50.0);
  EXPECT_EQ(ClipCensorWeight(0.0), 50.0);
}

TEST(CensoringTest, InterceptOnlyGivesInverseCompletionRate) {
  Dataset d = FlatDataset(2, 1);
  for (int i = 0; i < 100; ++i) {
    d.units.push_back(MakeUnit(i + 1, i % 2, {0.5, 0.5}, {0.0}, 1, 1, 0, i % 4 != 0));
  }
  const auto w = CensoringWeights(d, CensorModel::kInterceptOnly);
  ASSERT_EQ(w.size(), 75u);
  for (double v : w) EXPECT_NEAR(v, 4.0 / 3.0, 1e-6);
  const auto none = CensoringWeights(d, CensorModel::kNone);
  EXPECT_EQ(none, std::vector<double>(75, 1.0));
}

TEST(ScoreDatasetTest, DropsCensoredAndAttachesWeights) {
  Dataset d = FlatDataset(2, 1);
  Rng rng(8);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 60; ++i) {
    d.units.push_back(MakeUnit(i + 1, i % 2, {0.5, 0.5}, {normal(rng)}, i % 5, i % 3, 0,
                               i % 10 != 0));
  }
  EstimationConfig c;
  c.adaptive = AdaptiveScheme::kStabilizedVariance;
  c.censoring = CensorModel::kLogistic;
  const ScoreTable s = ScoreDataset(d, OutcomeMeasure::kDiscernment, c);
  EXPECT_EQ(s.size(), 54);
  ASSERT_TRUE(s.adaptive.has_value());
  ASSERT_TRUE(s.censor.has_value());
  EXPECT_EQ((*s.adaptive)(0, 0), std::sqrt(0.5));
  for (double v : *s.censor) EXPECT_GE(v, 1.0);
}

TEST(FitConditionalMeansTest, CrossfitPredictionsAreOutOfFold) {
  Dataset d = FlatDataset(2, 1);
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    d.units.push_back(MakeUnit(i + 1, i % 2, {0.5, 0.5}, {i / 10.0}, 0, 0));
    y.push_back(i == 7 ? 1000.0 : 1.0);
  }
  MuOptions o;
  o.folds = 5;
  const MuModel mu = FitConditionalMeans(d, y, o);
  ASSERT_EQ(mu.folds.size(), 50u);
  // The outlier does not leak into its own prediction.
  EXPECT_LT(std::abs(mu.predictions(7, 1)), 100.0);
  EXPECT_EQ(mu.predictions.rows(), 50);
  o.folds = 1;
  EXPECT_THROW(FitConditionalMeans(d, y, o), Error);
}

TEST(FitConditionalMeansTest, HistoricalUsesOnlyEarlierBatches) {
  Dataset d = FlatDataset(2, 0);
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    d.units.push_back(MakeUnit(i + 1, i % 2, {0.5, 0.5}, {}, 0, 0, i < 10 ? 0 : 1));
    y.push_back(i < 10 ? static_cast<double>(i) : 100.0);
  }
  MuOptions o;
  o.mode = FitMode::kHistorical;
  o.learner.ridge_lambda = 1e-9;
  const MuModel mu = FitConditionalMeans(d, y, o);
  // Batch-0 unit 0 (arm 0): leave-one-out arm means over batch 0.
  EXPECT_NEAR(mu.predictions(0, 0), (2 + 4 + 6 + 8) / 4.0, 1e-12);
  EXPECT_NEAR(mu.predictions(0, 1), (1 + 3 + 5 + 7 + 9) / 5.0, 1e-12);
  // Batch-1 predictions never see the batch-1 outcomes of 100.
  for (int i = 10; i < 20; ++i) EXPECT_LT(mu.predictions(i, 0), 10.0);
}

TEST(FitConditionalMeansTest, HistoricalStartsAtEarliestPresentBatch) {
  Dataset d = FlatDataset(2, 0);
  std::vector<double> y;
  for (int i = 0; i < 8; ++i) {
    d.units.push_back(MakeUnit(i + 1, i % 2, {0.5, 0.5}, {}, 0, 0, i < 4 ? 2 : 3));
    y.push_back(i);
  }
  MuOptions o;
  o.mode = FitMode::kHistorical;
  EXPECT_NO_THROW(FitConditionalMeans(d, y, o));
}

Dataset SweepData() {
  Dataset d = FlatDataset(3, 1);
  Rng rng(21);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> count(0, 4), arm(0, 2);
  for (int i = 0; i < 120; ++i) {
    d.units.push_back(MakeUnit(i + 1, arm(rng), {0.2, 0.3, 0.5}, {normal(rng)}, count(rng),
                               count(rng)));
  }
  return d;
}

TEST(EstimateTableTest, MeansThenEffectsPerMeasure) {
  EstimationConfig c;
  c.measures = {OutcomeMeasure::kDiscernment, OutcomeMeasure::kFalseCount};
  c.ipw_only = true;
  const auto rows = EstimateTable(SweepData(), c);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].measure, "discernment");
  EXPECT_EQ(rows[0].kind, "mean");
  EXPECT_EQ(rows[3].kind, "effect");
  EXPECT_EQ(rows[3].arm, "a1");
  EXPECT_EQ(rows[5].measure, "false_count");
  EXPECT_EQ(EstimateCsvHeader(), "measure,arm,kind,estimate,se,z,p,ci_lo,ci_hi,n");
  c.control_arm = 3;
  EXPECT_THROW(EstimateTable(SweepData(), c), Error);
}

TEST(WeightSweepTest, DefaultPointReproducesMainRows) {
  EstimationConfig c;
  c.measures = {OutcomeMeasure::kDiscernment};
  const Dataset d = SweepData();
  const std::vector<ResponseWeights> grid = {{-0.5, 0.5}, {-1.0, 0.5}};
  const auto sweep = WeightSweep(d, grid, c);
  ASSERT_EQ(sweep.size(), 4u);
  const auto main = EstimateTable(d, c);
  std::vector<std::string> main_effects;
  for (const auto& r : main) {
    if (r.kind == "effect") main_effects.push_back(EstimateCsvFields(r));
  }
  EXPECT_EQ(sweep[2].log_ratio, std::log(2.0));
  EXPECT_EQ(EstimateCsvFields(sweep[2].row), main_effects[0]);
  EXPECT_EQ(EstimateCsvFields(sweep[3].row), main_effects[1]);
  EXPECT_EQ(sweep[0].log_ratio, 0.0);
  const std::vector<ResponseWeights> bad = {{-2.0, 0.5}};
  EXPECT_THROW(WeightSweep(d, bad, c), Error);
}

TEST(ResponseTest, Measures) {
  OutcomeRecord o;
  o.m_post = 2;
  o.t_post = 3;
  EXPECT_EQ(Response(o, OutcomeMeasure::kDiscernment), -0.5);
  EXPECT_EQ(Response(o, OutcomeMeasure::kFalseCount), 0.5);
  EXPECT_EQ(Response(o, OutcomeMeasure::kTrueCount), 0.75);
  EXPECT_THROW(Response(o, OutcomeMeasure::kFalseAny), Error);
  EXPECT_EQ(ParseOutcomeMeasure("true_any"), OutcomeMeasure::kTrueAny);
  EXPECT_THROW(ParseOutcomeMeasure("bogus"), Error);
}

}  // namespace
}  // namespace adaptex
