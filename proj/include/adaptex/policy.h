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

#ifndef ADAPTEX_POLICY_H_
#define ADAPTEX_POLICY_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptex/dataset.h"
#include "adaptex/estimators.h"
#include "adaptex/regression.h"
#include "json.hpp"

namespace adaptex {

// Deterministic map from contexts to arm indices of an arm space.
class Policy {
 public:
  enum class Kind { kConstant, kGreedy, kRestricted, kTable };

  static Policy Constant(int arm, int n_arms);
  // argmax over `arm_subset` of the predicted mean; ties go to the lowest
  // arm index.
  static Policy Greedy(std::shared_ptr<const ArmPredictor> model,
                       std::vector<int> arm_subset, int n_arms);
  // first_arm when the CATE (first minus second) favors it, or is exactly 0.
  static Policy Restricted(int first_arm, int second_arm,
                           std::shared_ptr<const Regressor> cate,
                           bool lower_is_better, int n_arms);
  static Policy Table(std::map<std::uint64_t, int> table, int default_arm,
                      int n_arms);

  int Assign(std::span<const double> features) const;
  int Assign(const CovariateContext& context) const { return Assign(context.features); }

  Kind kind() const { return kind_; }
  int n_arms() const { return n_arms_; }
  // Restricted policies only.
  double Cate(std::span<const double> features) const;
  int first_arm() const { return first_arm_; }
  int second_arm() const { return second_arm_; }
  bool lower_is_better() const { return lower_is_better_; }

  // {"kind": "constant", "arm": k}
  // {"kind": "table", "default_arm": k, "table": {"<hash>": k, ...}}
  // {"kind": "greedy", "arm_subset": [...], "model": <checkpoint>}
  // {"kind": "restricted", "arms": [a, b], "lower_is_better": bool,
  //  "cate": <checkpoint>}
  // Every form also carries "n_arms".
  nlohmann::json ToJson() const;
  static Policy FromJson(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::kConstant;
  int n_arms_ = 0;
  int constant_arm_ = 0;
  std::shared_ptr<const ArmPredictor> model_;
  std::vector<int> subset_;
  int first_arm_ = 0;
  int second_arm_ = 0;
  std::shared_ptr<const Regressor> cate_;
  bool lower_is_better_ = true;
  std::map<std::uint64_t, int> table_;
};

Policy LearnGreedyPolicy(std::shared_ptr<const ArmPredictor> model,
                         std::vector<int> arm_subset, int n_arms);

struct RestrictedPolicyOptions {
  OutcomeMeasure measure = OutcomeMeasure::kFalseAny;
  // Defaults to true for false-sharing measures, false otherwise.
  std::optional<bool> lower_is_better;
  // Scoring of the learning data (historical conditional means by default).
  EstimationConfig scoring;
  LearnerOptions cate;
};

// Regresses per-unit score differences (first minus second) on covariates.
Policy LearnRestrictedPolicy(const Dataset& learning, int first_arm, int second_arm,
                             const RestrictedPolicyOptions& options);

struct PolicyApplication {
  std::vector<int> assignments;
  std::vector<double> shares;  // per arm, sums to 1
};

PolicyApplication ApplyPolicy(const Policy& policy, const Dataset& data);
double PolicyOverlap(std::span<const int> a, std::span<const int> b);

// Weighted mean of Gamma_i(pi(X_i)); throws when the policy picks an arm with
// zero logged propensity for some unit.
Estimate EvaluateAssignments(const ScoreTable& scores, std::span<const int> assignments,
                             const WeightingOptions& options = {});
Estimate EvaluatePolicy(const Policy& policy, const Dataset& scored_units,
                        const ScoreTable& scores, const WeightingOptions& options = {});
// Value of assignment a minus value of assignment b.
Estimate ComparePolicies(const ScoreTable& scores, std::span<const int> a,
                         std::span<const int> b, const WeightingOptions& options = {});

struct BatchShare {
  int batch = 0;  // -1 for the pooled row
  std::int64_t n = 0;
  double share = 0;
};

// Share of units whose realized respondent level equals the respondent level
// of the policy's arm (headline level ignored).
std::vector<BatchShare> OnPolicyShare(const Dataset& log, const Policy& policy,
                                      const ArmSpace& policy_arms, bool by_batch = true);

enum class RateWeighting { kAutoc, kQini };

RateWeighting ParseRateWeighting(const std::string& name);
std::string RateWeightingName(RateWeighting weighting);

struct TocCurve {
  std::vector<double> q;
  std::vector<double> value;
  std::vector<double> se;
  Estimate rate;
  RateWeighting weighting = RateWeighting::kAutoc;
  bool constant_priorities = false;
};

struct TocOptions {
  int grid_size = 100;  // q = 1/G, 2/G, ..., 1
  RateWeighting weighting = RateWeighting::kAutoc;
  int n_bootstrap = 200;
  std::uint64_t seed = 0;
};

// Units are ranked by descending priority (ties by ascending unit id); TOC(q)
// is the mean score difference over the top ceil(q n) units minus the overall
// mean. Standard errors come from half-sample bootstrap replicates.
TocCurve TocRate(const ScoreTable& scores, int first_arm, int second_arm,
                 std::span<const double> priorities, const TocOptions& options);

// Point TOC values on the grid without bootstrap.
std::vector<double> TocValues(std::span<const double> deltas,
                              std::span<const double> priorities,
                              std::span<const std::int64_t> unit_ids,
                              std::span<const double> grid);

std::string TocCsv(const TocCurve& curve);

// Larger priority = larger expected benefit of the first arm.
std::vector<double> RestrictedPriorities(const Policy& restricted, const Dataset& data);

}  // namespace adaptex

#endif  // ADAPTEX_POLICY_H_
