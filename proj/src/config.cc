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

#include <fstream>
#include <set>
#include <sstream>

#include "adaptex/dataset.h"

namespace adaptex {

using nlohmann::json;

namespace {

void AddLearnerKeys(std::vector<ConfigKey>& keys, const std::string& prefix) {
  keys.push_back({prefix + ".method", "ridge | knn | forest"});
  keys.push_back({prefix + ".ridge_lambda", "ridge penalty on slopes and interactions"});
  keys.push_back({prefix + ".knn_k", "neighbours per arm"});
  keys.push_back({prefix + ".forest_trees", "trees per forest"});
  keys.push_back({prefix + ".forest_min_leaf", "minimum leaf size"});
  keys.push_back({prefix + ".forest_sample_fraction", "subsample fraction per tree"});
  keys.push_back({prefix + ".forest_max_depth", "maximum tree depth"});
  keys.push_back({prefix + ".seed", "learner seed"});
}

void AddScheduleKeys(std::vector<ConfigKey>& keys, const std::string& prefix) {
  keys.push_back({prefix + ".first_batch_size", "units in batch 0"});
  keys.push_back({prefix + ".subsequent_batch_size", "units in each later batch"});
  keys.push_back({prefix + ".max_units", "close after this many units (0 = never)"});
}

void AddEstimationKeys(std::vector<ConfigKey>& keys, const std::string& prefix) {
  keys.push_back({prefix + ".measures",
                  "outcome measures: discernment, false_any, true_any, false_count, "
                  "true_count"});
  keys.push_back({prefix + ".weights.w_false", "discernment weight on false shares"});
  keys.push_back({prefix + ".weights.w_true", "discernment weight on true shares"});
  keys.push_back({prefix + ".mu.mode", "crossfit | historical"});
  keys.push_back({prefix + ".mu.folds", "crossfit folds"});
  AddLearnerKeys(keys, prefix + ".mu.learner");
  keys.push_back({prefix + ".ipw_only", "drop the conditional-mean model"});
  keys.push_back({prefix + ".adaptive", "none | uniform | stabilized_variance (alias stabilized)"});
  keys.push_back({prefix + ".censoring", "none | logistic | intercept_only"});
  keys.push_back({prefix + ".control_arm", "arm index that effects are taken against"});
}

std::vector<ConfigKey> BuildKeys() {
  std::vector<ConfigKey> k = {
      {"seed", "master seed (overridden by --seed)"},
      {"out", "output directory (overridden by --out)"},
      {"dataset", "input dataset CSV"},
      {"dgp.calibrated", "start from the calibrated default (true) or plain defaults"},
      {"dgp.n_features", "number of continuous covariates"},
      {"dgp.feature_correlation", "equicorrelation of the covariates"},
      {"dgp.false_intercept", "logit share probability of false stimuli at control"},
      {"dgp.true_intercept", "logit share probability of true stimuli at control"},
      {"dgp.false_slope", "logit slopes of the false share on the covariates"},
      {"dgp.true_slope", "logit slopes of the true share on the covariates"},
      {"dgp.respondent_levels", "respondent-treatment levels"},
      {"dgp.headline_levels", "headline-treatment levels"},
      {"dgp.respondent_false", "logit shifts of the false share per respondent level"},
      {"dgp.respondent_true", "logit shifts of the true share per respondent level"},
      {"dgp.headline_false", "logit shifts of the false share per headline level"},
      {"dgp.headline_true", "logit shifts of the true share per headline level"},
      {"dgp.respondent_false_x0", "respondent-level slopes of the false share on x1"},
      {"dgp.respondent_true_x0", "respondent-level slopes of the true share on x1"},
      {"dgp.unit_concentration", "Beta concentration of the unit effect (<= 0: none)"},
      {"dgp.channel_tilt", "timeline minus messenger tilt in [0, 1]"},
      {"dgp.attrition_rate", "posttest attrition probability at x1 = 0"},
      {"dgp.attrition_slope_x0", "logit slope of completion on x1"},
      {"dgp.pretest_feature", "append pretest counts to the bandit features"},
      {"bandit.mode", "thompson | uniform | fixed"},
      {"bandit.prior_var_main", "prior variance of intercept and main effects"},
      {"bandit.ridge_penalty_interactions", "ridge penalty on covariate-by-arm terms"},
      {"bandit.n_posterior_draws", "Monte-Carlo draws per probability vector"},
      {"bandit.probability_floor", "minimum assignment probability"},
      {"bandit.initial_noise_var", "noise variance before any refit"},
      {"bandit.fixed_noise_var", "hold the noise variance at this value"},
      {"bandit.fixed_probabilities", "probability vector for fixed mode"},
      {"objective.w_false", "bandit objective weight on false shares"},
      {"objective.w_true", "bandit objective weight on true shares"},
      {"simulate.design", "pipeline | learning | uniform"},
      {"simulate.n", "units in the (learning) stage"},
      {"simulate.evaluation_n", "units in the evaluation stage"},
      {"simulate.policy_respondent_levels", "respondent levels open to the targeted policy"},
      {"simulate.headline_a", "first evaluated headline level"},
      {"simulate.headline_b", "second evaluated headline level"},
      {"simulate.respondent_a", "first evaluated respondent level"},
      {"simulate.respondent_b", "second evaluated respondent level"},
      {"policy.kind", "greedy | restricted"},
      {"policy.arms", "restricted: [first, second] arm indices"},
      {"policy.arm_subset", "greedy: candidate arm indices"},
      {"policy.measure", "restricted: outcome measure of the CATE"},
      {"policy.lower_is_better", "restricted: smaller outcomes are better"},
      {"policy.evaluation_dataset", "dataset on which the learned policy is evaluated"},
      {"rate.policy", "restricted policy file that supplies priorities"},
      {"rate.grid_size", "TOC grid points"},
      {"rate.weighting", "autoc | qini"},
      {"rate.n_bootstrap", "half-sample bootstrap replicates"},
      {"sweep.w_false", "grid of false-share weights"},
      {"sweep.w_true", "grid of true-share weights"},
      {"coverage.n_per_rep", "units per replication"},
      {"coverage.n_reps", "replications"},
      {"coverage.cells", "[[respondent, headline], ...] cells compared"},
      {"coverage.measure", "outcome measure"},
      {"coverage.estimators", "aipw_uniform, aipw_stabilized_blts, naive_blts"},
      {"serve.host", "listen address"},
      {"serve.port", "listen port"},
      {"serve.log", "event log path; replayed on start when present"},
      {"serve.arms.factorial", "[respondent_levels, headline_levels]"},
      {"serve.arms.flat", "[{name, respondent_level, headline_level}, ...]"},
      {"serve.schema.covariates", "[{name, kind, levels, skippable, center, scale}, ...]"},
      {"serve.schema.include_pretest", "append pretest counts to the features"},
  };
  AddScheduleKeys(k, "schedule");
  AddScheduleKeys(k, "coverage.schedule");
  AddLearnerKeys(k, "simulate.policy_learner");
  AddLearnerKeys(k, "policy.learner");
  AddEstimationKeys(k, "estimation");
  AddEstimationKeys(k, "simulate.learning_estimation");
  return k;
}

void Walk(const json& j, const std::string& prefix, const std::set<std::string>& known) {
  if (!j.is_object()) ThrowUsage("config section '" + prefix + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (known.count(path)) continue;
    const auto it = known.lower_bound(path + ".");
    if (value.is_object() && it != known.end() && it->rfind(path + ".", 0) == 0) {
      Walk(value, path, known);
      continue;
    }
    ThrowUsage("unknown config key: " + path);
  }
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    ThrowUsage(std::string("config key '") + key + "' has the wrong type");
  }
}

const json& Section(const json& j, const char* key) {
  static const json kEmpty = json::object();
  if (!j.is_object() || !j.contains(key)) return kEmpty;
  return j[key];
}

}  // namespace

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = BuildKeys();
  return keys;
}

std::string ConfigKeysHelp() {
  std::string out = "Config keys (JSON, dotted paths are nested objects):\n";
  for (const ConfigKey& k : ConfigKeys()) out += "  " + k.path + "  " + k.doc + "\n";
  return out;
}

void CheckConfigKeys(const json& config) {
  std::set<std::string> known;
  for (const ConfigKey& k : ConfigKeys()) known.insert(k.path);
  Walk(config, "", known);
}

json LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) ThrowUsage("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    ThrowUsage("config file is not a JSON object: " + path);
  }
  CheckConfigKeys(j);
  return j;
}

DgpSpec DgpFromJson(const json& j) {
  DgpSpec d = j.value("calibrated", true) ? DgpSpec::Calibrated() : DgpSpec{};
  d.n_features = Get(j, "n_features", d.n_features);
  d.feature_correlation = Get(j, "feature_correlation", d.feature_correlation);
  d.false_intercept = Get(j, "false_intercept", d.false_intercept);
  d.true_intercept = Get(j, "true_intercept", d.true_intercept);
  d.false_slope = Get(j, "false_slope", d.false_slope);
  d.true_slope = Get(j, "true_slope", d.true_slope);
  d.respondent_levels = Get(j, "respondent_levels", d.respondent_levels);
  d.headline_levels = Get(j, "headline_levels", d.headline_levels);
  d.respondent_false = Get(j, "respondent_false", d.respondent_false);
  d.respondent_true = Get(j, "respondent_true", d.respondent_true);
  d.headline_false = Get(j, "headline_false", d.headline_false);
  d.headline_true = Get(j, "headline_true", d.headline_true);
  d.respondent_false_x0 = Get(j, "respondent_false_x0", d.respondent_false_x0);
  d.respondent_true_x0 = Get(j, "respondent_true_x0", d.respondent_true_x0);
  d.unit_concentration = Get(j, "unit_concentration", d.unit_concentration);
  d.channel_tilt = Get(j, "channel_tilt", d.channel_tilt);
  d.attrition_rate = Get(j, "attrition_rate", d.attrition_rate);
  d.attrition_slope_x0 = Get(j, "attrition_slope_x0", d.attrition_slope_x0);
  d.pretest_feature = Get(j, "pretest_feature", d.pretest_feature);
  d.Validate();
  return d;
}

BanditConfig BanditFromJson(const json& j) {
  BanditConfig b;
  const std::string mode = Get<std::string>(j, "mode", "thompson");
  if (mode == "thompson") {
    b.mode = AssignmentMode::kThompson;
  } else if (mode == "uniform") {
    b.mode = AssignmentMode::kUniform;
  } else if (mode == "fixed") {
    b.mode = AssignmentMode::kFixed;
  } else {
    ThrowUsage("unknown bandit.mode: " + mode);
  }
  b.prior_var_main = Get(j, "prior_var_main", b.prior_var_main);
  b.ridge_penalty_interactions =
      Get(j, "ridge_penalty_interactions", b.ridge_penalty_interactions);
  b.n_posterior_draws = Get(j, "n_posterior_draws", b.n_posterior_draws);
  b.probability_floor = Get(j, "probability_floor", b.probability_floor);
  b.initial_noise_var = Get(j, "initial_noise_var", b.initial_noise_var);
  if (j.contains("fixed_noise_var") && !j["fixed_noise_var"].is_null()) {
    b.fixed_noise_var = Get(j, "fixed_noise_var", 1.0);
  }
  b.fixed_probabilities = Get(j, "fixed_probabilities", b.fixed_probabilities);
  return b;
}

BatchSchedule ScheduleFromJson(const json& j) {
  BatchSchedule s;
  s.first_batch_size = Get(j, "first_batch_size", s.first_batch_size);
  s.subsequent_batch_size = Get(j, "subsequent_batch_size", s.subsequent_batch_size);
  s.max_units = Get(j, "max_units", s.max_units);
  s.Validate();
  return s;
}

ResponseWeights WeightsFromJson(const json& j) {
  ResponseWeights w;
  w.w_false = Get(j, "w_false", w.w_false);
  w.w_true = Get(j, "w_true", w.w_true);
  w.Validate();
  return w;
}

LearnerOptions LearnerFromJson(const json& j) {
  LearnerOptions o;
  o.method = ParseMuMethod(Get<std::string>(j, "method", MuMethodName(o.method)));
  o.ridge_lambda = Get(j, "ridge_lambda", o.ridge_lambda);
  o.knn_k = Get(j, "knn_k", o.knn_k);
  o.forest_trees = Get(j, "forest_trees", o.forest_trees);
  o.forest_min_leaf = Get(j, "forest_min_leaf", o.forest_min_leaf);
  o.forest_sample_fraction = Get(j, "forest_sample_fraction", o.forest_sample_fraction);
  o.forest_max_depth = Get(j, "forest_max_depth", o.forest_max_depth);
  o.seed = Get(j, "seed", o.seed);
  return o;
}

EstimationConfig EstimationFromJson(const json& j) {
  EstimationConfig c;
  if (j.contains("measures")) {
    c.measures.clear();
    for (const auto& m : Get<std::vector<std::string>>(j, "measures", {})) {
      c.measures.push_back(ParseOutcomeMeasure(m));
    }
    if (c.measures.empty()) ThrowUsage("estimation.measures must not be empty");
  }
  c.weights = WeightsFromJson(Section(j, "weights"));
  const json& mu = Section(j, "mu");
  const std::string mode = Get<std::string>(mu, "mode", "crossfit");
  if (mode == "crossfit") {
    c.mu.mode = FitMode::kCrossfit;
  } else if (mode == "historical") {
    c.mu.mode = FitMode::kHistorical;
  } else {
    ThrowUsage("unknown estimation.mu.mode: " + mode);
  }
  c.mu.folds = Get(mu, "folds", c.mu.folds);
  c.mu.learner = LearnerFromJson(Section(mu, "learner"));
  c.ipw_only = Get(j, "ipw_only", c.ipw_only);
  c.adaptive = ParseAdaptiveScheme(Get<std::string>(j, "adaptive", "none"));
  c.censoring = ParseCensorModel(Get<std::string>(j, "censoring", "none"));
  c.control_arm = Get(j, "control_arm", c.control_arm);
  return c;
}

TocOptions TocFromJson(const json& j) {
  TocOptions o;
  o.grid_size = Get(j, "grid_size", o.grid_size);
  o.weighting = ParseRateWeighting(Get<std::string>(j, "weighting", "autoc"));
  o.n_bootstrap = Get(j, "n_bootstrap", o.n_bootstrap);
  return o;
}

CoverageConfig CoverageFromJson(const json& j) {
  CoverageConfig c;
  c.n_per_rep = Get(j, "n_per_rep", c.n_per_rep);
  c.n_reps = Get(j, "n_reps", c.n_reps);
  for (const auto& cell : Get<std::vector<std::vector<int>>>(j, "cells", {{0, 0}, {0, 1}})) {
    if (cell.size() != 2) ThrowUsage("coverage.cells entries must be [respondent, headline]");
    c.cells.push_back({cell[0], cell[1]});
  }
  c.measure = ParseOutcomeMeasure(Get<std::string>(j, "measure", "discernment"));
  c.estimators = Get(j, "estimators", c.estimators);
  if (j.contains("schedule")) c.schedule = ScheduleFromJson(j["schedule"]);
  return c;
}

ArmSpace ArmSpaceFromJson(const json& j) {
  if (j.contains("factorial")) {
    const auto dims = Get<std::vector<int>>(j, "factorial", {});
    if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) {
      ThrowUsage("arms.factorial must be [respondent_levels, headline_levels]");
    }
    return ArmSpace::Factorial(dims[0], dims[1]);
  }
  if (j.contains("flat")) {
    std::vector<std::pair<std::string, Arm>> arms;
    for (const json& a : j["flat"]) {
      arms.push_back({Get<std::string>(a, "name", ""),
                      {Get(a, "respondent_level", 0), Get(a, "headline_level", 0)}});
    }
    return ArmSpace::Flat(std::move(arms));
  }
  ThrowUsage("arms needs 'factorial' or 'flat'");
}

CovariateSchema SchemaFromJson(const json& j) {
  CovariateSchema schema;
  schema.include_pretest = Get(j, "include_pretest", false);
  for (const json& c : Section(j, "covariates")) {
    CovariateSpec spec;
    spec.name = Get<std::string>(c, "name", "");
    if (spec.name.empty()) ThrowUsage("covariate without a name");
    const std::string kind = Get<std::string>(c, "kind", "continuous");
    if (kind == "continuous") {
      spec.kind = CovariateKind::kContinuous;
    } else if (kind == "categorical") {
      spec.kind = CovariateKind::kCategorical;
    } else if (kind == "index") {
      spec.kind = CovariateKind::kIndex;
    } else {
      ThrowUsage("unknown covariate kind: " + kind);
    }
    spec.levels = Get(c, "levels", 0);
    spec.skippable = Get(c, "skippable", false);
    spec.center = Get(c, "center", 0.0);
    spec.scale = Get(c, "scale", 1.0);
    schema.covariates.push_back(spec);
  }
  return schema;
}

}  // namespace adaptex
