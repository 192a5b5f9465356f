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

#include "adaptex/config.h"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "adaptex/common.h"

namespace adaptex {
namespace {

using nlohmann::json;

std::string UsageMessage(const json& j) {
  try {
    CheckConfigKeys(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
    return e.what();
  }
  return "";
}

TEST(ConfigKeysTest, AcceptsDocumentedNestedKeys) {
  const json j = {{"seed", 3},
                  {"bandit", {{"n_posterior_draws", 10}}},
                  {"estimation", {{"mu", {{"learner", {{"method", "forest"}}}}}}}};
  EXPECT_EQ(UsageMessage(j), "");
}

TEST(ConfigKeysTest, NamesTheUnknownKey) {
  EXPECT_EQ(UsageMessage({{"bandit", {{"n_draws", 1}}}}), "unknown config key: bandit.n_draws");
  EXPECT_EQ(UsageMessage({{"typo", 1}}), "unknown config key: typo");
  EXPECT_EQ(UsageMessage({{"estimation", {{"mu", {{"learner", {{"depth", 2}}}}}}}}),
            "unknown config key: estimation.mu.learner.depth");
}

TEST(ConfigKeysTest, PathsAreUniqueAndDocumented) {
  std::set<std::string> seen;
  for (const ConfigKey& k : ConfigKeys()) {
    EXPECT_TRUE(seen.insert(k.path).second) << k.path;
    EXPECT_FALSE(k.doc.empty()) << k.path;
    EXPECT_NE(ConfigKeysHelp().find(k.path), std::string::npos);
  }
}

TEST(ConfigFileTest, RejectsNonObjectAndMissingFile) {
  const std::string path = ::testing::TempDir() + "/bad_config.json";
  std::ofstream(path) << "[1, 2]";
  EXPECT_THROW(LoadConfigFile(path), Error);
  EXPECT_THROW(LoadConfigFile(path + ".missing"), Error);
}

TEST(ConfigParseTest, BanditSection) {
  const BanditConfig b = BanditFromJson(
      {{"mode", "uniform"}, {"n_posterior_draws", 77}, {"fixed_noise_var", 2.5}});
  EXPECT_EQ(b.mode, AssignmentMode::kUniform);
  EXPECT_EQ(b.n_posterior_draws, 77);
  ASSERT_TRUE(b.fixed_noise_var.has_value());
  EXPECT_EQ(*b.fixed_noise_var, 2.5);
  EXPECT_FALSE(BanditFromJson(json::object()).fixed_noise_var.has_value());
  EXPECT_THROW(BanditFromJson({{"mode", "greedy"}}), Error);
  EXPECT_THROW(BanditFromJson({{"n_posterior_draws", "many"}}), Error);
}

TEST(ConfigParseTest, ScheduleAndWeights) {
  const BatchSchedule s = ScheduleFromJson({{"first_batch_size", 5}});
  EXPECT_EQ(s.first_batch_size, 5);
  EXPECT_THROW(ScheduleFromJson({{"subsequent_batch_size", 0}}), Error);
  const ResponseWeights w = WeightsFromJson({{"w_false", -0.5}});
  EXPECT_EQ(w.w_false, -0.5);
  EXPECT_EQ(w.w_true, 0.5);
  EXPECT_THROW(WeightsFromJson({{"w_true", -1}}), Error);
}

TEST(ConfigParseTest, EstimationSection) {
  const EstimationConfig c = EstimationFromJson(
      {{"measures", {"false_any", "true_count"}},
       {"mu", {{"mode", "historical"}, {"learner", {{"method", "knn"}, {"knn_k", 4}}}}},
       {"adaptive", "stabilized_variance"},
       {"censoring", "logistic"},
       {"control_arm", 2}});
  EXPECT_EQ(c.measures, (std::vector<OutcomeMeasure>{OutcomeMeasure::kFalseAny,
                                                     OutcomeMeasure::kTrueCount}));
  EXPECT_EQ(c.mu.mode, FitMode::kHistorical);
  EXPECT_EQ(c.mu.learner.method, MuMethod::kKnn);
  EXPECT_EQ(c.mu.learner.knn_k, 4);
  EXPECT_EQ(c.adaptive, AdaptiveScheme::kStabilizedVariance);
  EXPECT_EQ(c.censoring, CensorModel::kLogistic);
  EXPECT_EQ(c.control_arm, 2);
  EXPECT_THROW(EstimationFromJson({{"measures", json::array()}}), Error);
  EXPECT_THROW(EstimationFromJson({{"mu", {{"mode", "oracle"}}}}), Error);
}

TEST(ConfigParseTest, DgpDefaultsAndValidation) {
  const DgpSpec calibrated = DgpFromJson(json::object());
  EXPECT_EQ(calibrated.Arms().size(), DgpSpec::Calibrated().Arms().size());
  const DgpSpec plain = DgpFromJson({{"calibrated", false}, {"respondent_levels", 3}});
  EXPECT_EQ(plain.respondent_levels, 3);
  EXPECT_THROW(DgpFromJson({{"calibrated", false}, {"respondent_false", {0, 1, 2, 3, 4}},
                            {"respondent_levels", 2}}),
               Error);
}

TEST(ConfigParseTest, ArmSpaceAndSchema) {
  EXPECT_EQ(ArmSpaceFromJson({{"factorial", {3, 2}}}).size(), 6);
  const ArmSpace flat = ArmSpaceFromJson(
      {{"flat", {{{"name", "a"}, {"respondent_level", 0}, {"headline_level", 0}},
                 {{"name", "b"}, {"respondent_level", 1}, {"headline_level", 0}}}}});
  EXPECT_EQ(flat.size(), 2);
  EXPECT_EQ(flat.name(1), "b");
  EXPECT_THROW(ArmSpaceFromJson({{"factorial", {0, 2}}}), Error);
  EXPECT_THROW(ArmSpaceFromJson(json::object()), Error);

  const CovariateSchema s = SchemaFromJson(
      {{"include_pretest", true},
       {"covariates",
        {{{"name", "age"}, {"center", 40.0}, {"scale", 10.0}},
         {{"name", "region"}, {"kind", "categorical"}, {"levels", 4}, {"skippable", true}}}}});
  ASSERT_EQ(s.covariates.size(), 2u);
  EXPECT_TRUE(s.include_pretest);
  EXPECT_EQ(s.covariates[0].center, 40.0);
  EXPECT_EQ(s.covariates[1].kind, CovariateKind::kCategorical);
  EXPECT_TRUE(s.covariates[1].skippable);
  EXPECT_THROW(SchemaFromJson({{"covariates", {{{"name", "z"}, {"kind", "ordinal"}}}}}), Error);
}

TEST(ConfigParseTest, TocAndCoverage) {
  const TocOptions t = TocFromJson({{"grid_size", 7}, {"weighting", "qini"}});
  EXPECT_EQ(t.grid_size, 7);
  EXPECT_EQ(t.weighting, RateWeighting::kQini);
  const CoverageConfig c = CoverageFromJson({{"n_reps", 3}, {"cells", {{1, 0}, {2, 1}}}});
  EXPECT_EQ(c.n_reps, 3);
  ASSERT_EQ(c.cells.size(), 2u);
  EXPECT_EQ(c.cells[1].respondent_level, 2);
  EXPECT_THROW(CoverageFromJson({{"cells", {{1, 0, 0}}}}), Error);
}

}  // namespace
}  // namespace adaptex
