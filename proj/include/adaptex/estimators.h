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

#ifndef ADAPTEX_ESTIMATORS_H_
#define ADAPTEX_ESTIMATORS_H_

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptex/dataset.h"
#include "adaptex/model.h"
#include "adaptex/regression.h"

namespace adaptex {

enum class OutcomeMeasure {
  kDiscernment,  // w_false * M_post + w_true * T_post
  kFalseAny,     // share of false stimuli shared on any channel
  kTrueAny,
  kFalseCount,   // M_post / 4
  kTrueCount,    // T_post / 4
};

OutcomeMeasure ParseOutcomeMeasure(const std::string& name);
std::string OutcomeMeasureName(OutcomeMeasure measure);

double Response(const OutcomeRecord& outcome, OutcomeMeasure measure,
                const ResponseWeights& weights = {});
std::vector<double> Responses(const Dataset& data, OutcomeMeasure measure,
                              const ResponseWeights& weights = {});

enum class FitMode { kCrossfit, kHistorical };

struct MuOptions {
  LearnerOptions learner;
  FitMode mode = FitMode::kCrossfit;
  int folds = 5;
};

// Out-of-sample conditional-mean predictions for every unit and arm, plus a
// predictor fitted on all units for use on new contexts.
struct MuModel {
  MuMethod method = MuMethod::kRidge;
  FitMode mode = FitMode::kCrossfit;
  std::vector<int> folds;          // crossfit only
  Eigen::MatrixXd predictions;     // n x K
  std::shared_ptr<const ArmPredictor> full;
};

// `data` must contain only units with observed outcomes; `y` aligns with it.
MuModel FitConditionalMeans(const Dataset& data, std::span<const double> y,
                            const MuOptions& options);

ArmTrainingSet MakeTrainingSet(const Dataset& data, std::span<const double> y);
FeatureMatrix FeatureRows(const Dataset& data);

struct ScoreTable {
  int n_arms = 0;
  std::vector<std::int64_t> unit_ids;
  std::vector<int> arm;
  std::vector<int> batch;
  std::vector<double> y;
  Eigen::MatrixXd gamma;       // n x K scores
  Eigen::MatrixXd propensity;  // n x K
  std::optional<Eigen::MatrixXd> adaptive;  // n x K weights h_i(w)
  std::optional<std::vector<double>> censor;

  int size() const { return static_cast<int>(arm.size()); }
};

ScoreTable AipwScores(const Dataset& data, std::span<const double> y,
                      const MuModel& mu);
// AIPW with a zero conditional-mean model.
ScoreTable IpwScores(const Dataset& data, std::span<const double> y);

enum class AdaptiveScheme { kNone, kUniform, kStabilizedVariance };

AdaptiveScheme ParseAdaptiveScheme(const std::string& name);
std::string AdaptiveSchemeName(AdaptiveScheme scheme);

// kStabilizedVariance: h_i(w) = sqrt(e_i(X_i; w)). kUniform: h = 1.
Eigen::MatrixXd AdaptiveWeights(const Eigen::MatrixXd& propensity,
                                AdaptiveScheme scheme);

struct Estimate {
  double value = 0;
  double std_error = 0;
  double z = 0;
  double p_two_sided = 1;
  double ci_lo = 0;
  double ci_hi = 0;
  std::int64_t n = 0;
};

Estimate MakeEstimate(double value, double std_error, std::int64_t n);

struct WeightingOptions {
  bool use_adaptive = true;  // apply h when the table has it
  bool use_censor = true;    // apply c when the table has it
  // Nonzero entries select the subgroup; empty means all units.
  std::span<const std::uint8_t> subgroup;
};

// Weighted (Hajek) mean of `scores` with weights `weights`:
//   value = sum(v * g) / sum(v)
//   se^2  = n / (n - 1) * sum(psi^2),  psi_i = v_i (g_i - value) / sum(v)
// With unit weights this is the sample mean with se = sd / sqrt(n).
Estimate HajekMean(std::span<const double> scores, std::span<const double> weights);

// Combination sum_k c_k Q(w_k) of per-arm weighted means; the standard error
// uses the summed per-unit influence terms, so within-unit correlation across
// arms is respected.
Estimate LinearCombination(const ScoreTable& scores,
                           std::span<const std::pair<int, double>> terms,
                           const WeightingOptions& options = {});

Estimate MeanResponse(const ScoreTable& scores, int arm,
                      const WeightingOptions& options = {});
Estimate Contrast(const ScoreTable& scores, int arm, int other_arm,
                  const WeightingOptions& options = {});

// Weight of arm `arm` for unit `i` under the given options.
double UnitWeight(const ScoreTable& scores, int i, int arm,
                  const WeightingOptions& options);

enum class CensorModel { kNone, kLogistic, kInterceptOnly };

CensorModel ParseCensorModel(const std::string& name);
std::string CensorModelName(CensorModel model);

double ClipCensorWeight(double completion_probability);

// Inverse completion probabilities for the completed units of `assigned`, in
// dataset order. The completion model conditions on features and arm.
std::vector<double> CensoringWeights(const Dataset& assigned, CensorModel model,
                                     double penalty = 1.0);

// entry[r][c] = Q(r, c) - mean over r' of Q(r', c) on a factorial arm space.
std::vector<std::vector<Estimate>> InteractionContrasts(
    const ScoreTable& scores, const ArmSpace& arms,
    const WeightingOptions& options = {});

// Value of assigning every arm with probability 1/K.
Estimate UniformCounterfactualValue(const ScoreTable& scores,
                                    const WeightingOptions& options = {});

struct EstimationConfig {
  std::vector<OutcomeMeasure> measures = {OutcomeMeasure::kFalseAny,
                                          OutcomeMeasure::kTrueAny,
                                          OutcomeMeasure::kDiscernment};
  ResponseWeights weights;
  MuOptions mu;
  bool ipw_only = false;  // zero conditional-mean model, no covariates
  AdaptiveScheme adaptive = AdaptiveScheme::kNone;
  CensorModel censoring = CensorModel::kNone;
  int control_arm = 0;
};

// Full scoring pipeline for one measure: censoring weights, conditional
// means, scores and adaptive weights.
ScoreTable ScoreDataset(const Dataset& assigned, OutcomeMeasure measure,
                        const EstimationConfig& config);

struct EstimateRow {
  std::string measure;
  std::string arm;
  std::string kind;  // "mean" or "effect" (arm minus control)
  Estimate estimate;
};

std::vector<EstimateRow> EstimateTable(const Dataset& assigned,
                                       const EstimationConfig& config);

std::string EstimateCsvHeader();
std::string EstimateCsvFields(const EstimateRow& row);
std::string EstimateTableCsv(const std::vector<EstimateRow>& rows);

struct SweepRow {
  double log_ratio = 0;  // log(-w_false / w_true)
  ResponseWeights weights;
  EstimateRow row;
};

std::vector<SweepRow> WeightSweep(const Dataset& assigned,
                                  std::span<const ResponseWeights> grid,
                                  const EstimationConfig& config);
std::string SweepCsv(const std::vector<SweepRow>& rows);

}  // namespace adaptex

#endif  // ADAPTEX_ESTIMATORS_H_
