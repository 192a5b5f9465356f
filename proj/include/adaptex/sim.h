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

#ifndef ADAPTEX_SIM_H_
#define ADAPTEX_SIM_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptex/bandit.h"
#include "adaptex/dataset.h"
#include "adaptex/estimators.h"
#include "adaptex/experiment.h"
#include "adaptex/model.h"
#include "adaptex/policy.h"

namespace adaptex {

// Synthetic population over a factorial arm space. Each stimulus type has a
// share probability on the logit scale:
//   logit p(x, r, h) = intercept + slope . x + respondent[r] + headline[h]
//                      + respondent_x0[r] * x0
// A unit draws its own probability from Beta(k p, k (1 - p)) (k =
// unit_concentration; k <= 0 disables the unit effect) and answers each of
// its 2 stimuli on the timeline with probability q + tilt * min(q, 1 - q) and
// on messenger with q - tilt * min(q, 1 - q). Channel offsets cancel, so
// E[M] = 4 p exactly.
struct DgpSpec {
  int n_features = 4;
  double feature_correlation = 0.2;

  double false_intercept = -0.85;
  double true_intercept = -0.58;
  std::vector<double> false_slope;  // n_features, zero-padded
  std::vector<double> true_slope;

  int respondent_levels = 8;
  int headline_levels = 5;
  std::vector<double> respondent_false;  // logit shifts per level, zero-padded
  std::vector<double> respondent_true;
  std::vector<double> headline_false;
  std::vector<double> headline_true;
  std::vector<double> respondent_false_x0;  // heterogeneity in feature 0
  std::vector<double> respondent_true_x0;

  double unit_concentration = 4.0;
  double channel_tilt = 0.2;

  double attrition_rate = 0.07;     // at x0 = 0
  double attrition_slope_x0 = 0.0;  // logit slope of completion on x0

  // Appends the pretest counts to the bandit's feature vector.
  bool pretest_feature = false;

  std::uint64_t seed = 1;

  void Validate() const;
  ArmSpace Arms() const { return ArmSpace::Factorial(respondent_levels, headline_levels); }
  CovariateSchema Schema() const;

  // Mid-size default loosely matching the reported magnitudes: control
  // discernment near -0.48, false any-channel share near 0.47, effects of a
  // few hundredths on the discernment scale.
  static DgpSpec Calibrated();
  // Every arm identical.
  static DgpSpec Null(int n_features = 2);
};

struct ShareProbabilities {
  double false_share = 0;
  double true_share = 0;
};

ShareProbabilities CellProbabilities(const DgpSpec& dgp, std::span<const double> x,
                                     int respondent, int headline);

// Exact conditional mean of `measure` for a cell, computed from the model
// parameters (closed form, regularized incomplete beta for the any-channel
// measures).
double OracleMean(const DgpSpec& dgp, std::span<const double> x, int respondent,
                  int headline, OutcomeMeasure measure,
                  const ResponseWeights& weights = {});

struct PopulationUnit {
  std::int64_t unit_id = 0;
  std::vector<double> x;
  ChannelDetail pretest{};  // posttest half zero
  bool completes = true;
  // Quantiles of the unit's share probabilities within the Beta mixing
  // distribution; shared by every cell, so potential outcomes are coupled.
  double latent_false = 0.5;
  double latent_true = 0.5;
  std::uint64_t outcome_seed = 0;

  CovariateContext Context(const DgpSpec& dgp) const;
};

std::vector<PopulationUnit> GeneratePopulation(const DgpSpec& dgp, std::int64_t n,
                                               std::uint64_t stream = 0);

// Posttest grid for `unit` under a cell; deterministic in (unit, cell).
ChannelDetail DrawPosttest(const DgpSpec& dgp, const PopulationUnit& unit,
                           int respondent, int headline);

// Average of OracleMean over an independent covariate sample.
double PopulationMean(const DgpSpec& dgp, int respondent, int headline,
                      OutcomeMeasure measure, const ResponseWeights& weights = {},
                      int n_draws = 100000, std::uint64_t stream = 0xC0FFEE);

// Arms of an experiment and the DGP cell each arm delivers.
struct Design {
  ArmSpace space;
  // nullopt marks the targeted arm, whose cell the policy picks per context.
  std::vector<std::optional<Arm>> cells;
  BanditConfig bandit;
  BatchSchedule schedule;
  ResponseWeights objective;
  std::shared_ptr<const Policy> targeted;
  ArmSpace policy_arms;

  // Full factorial design assigned by `bandit` (Thompson sampling by default).
  static Design Learning(const DgpSpec& dgp, BanditConfig bandit, BatchSchedule schedule);
  // Fixed assignment probabilities; arm k delivers cell levels(k).
  static Design Fixed(ArmSpace space, std::vector<double> probabilities);
  // Control, two headline arms, two respondent arms and a targeted arm, each
  // with probability 1/6. The targeted arm is logged with respondent level
  // one past the largest level of `policy_arms`.
  static Design Evaluation(int headline_a, int headline_b, int respondent_a,
                           int respondent_b, std::shared_ptr<const Policy> targeted,
                           ArmSpace policy_arms);
};

// Cell a design arm resolves to for context x.
Arm ResolveCell(const Design& design, int arm, std::span<const double> x);

struct SimulationResult {
  std::string event_log;  // JSONL
  Dataset dataset;
  std::vector<Arm> realized_cells;
  int posterior_updates = 0;
  std::vector<PopulationUnit> population;
};

SimulationResult SimulateExperiment(const DgpSpec& dgp, const Design& design,
                                    std::int64_t n, std::uint64_t population_stream = 0);

struct RegretReport {
  double in_experiment_mean = 0;
  double uniform_counterfactual_true = 0;
  std::vector<double> best_arm_share_by_batch;
};

RegretReport MakeRegretReport(const SimulationResult& result, const DgpSpec& dgp,
                              const Design& design);

struct CoverageConfig {
  std::int64_t n_per_rep = 2000;
  int n_reps = 500;
  // Arms 0..K-1 of a flat design built from these cells.
  std::vector<Arm> cells;
  OutcomeMeasure measure = OutcomeMeasure::kDiscernment;
  ResponseWeights weights;
  BanditConfig bandit;  // for the adaptive design
  BatchSchedule schedule{400, 400, 0};
  std::vector<std::string> estimators = {"aipw_uniform", "aipw_stabilized_blts",
                                         "naive_blts"};
  std::uint64_t seed = 0;
};

struct CoverageRow {
  std::string estimator;
  int n_reps = 0;
  std::int64_t n_intervals = 0;
  double coverage = 0;
  double mean_width = 0;
  double mean_bias = 0;
};

// Fraction of 95% intervals that cover the population arm means.
std::vector<CoverageRow> CoverageExperiment(const DgpSpec& dgp, const CoverageConfig& config);
std::string CoverageCsv(const std::vector<CoverageRow>& rows);

// Learning stage over the full factorial followed by an evaluation stage
// with a greedy targeted policy over `policy_respondent_levels`.
struct PipelineConfig {
  std::int64_t learning_n = 4761;
  std::int64_t evaluation_n = 10531;
  BanditConfig bandit;
  BatchSchedule schedule;
  std::vector<int> policy_respondent_levels = {1, 2, 3, 4};
  LearnerOptions policy_learner;
  int headline_a = 1, headline_b = 2, respondent_a = 1, respondent_b = 2;
  EstimationConfig learning_estimation;
  EstimationConfig evaluation_estimation;
};

struct PipelineResult {
  SimulationResult learning;
  SimulationResult evaluation;
  std::shared_ptr<const Policy> targeted;
  std::vector<BatchShare> on_policy;
  std::vector<EstimateRow> evaluation_estimates;
  Estimate uniform_counterfactual;
};

PipelineResult RunPipeline(const DgpSpec& dgp, const PipelineConfig& config);

}  // namespace adaptex

#endif  // ADAPTEX_SIM_H_
