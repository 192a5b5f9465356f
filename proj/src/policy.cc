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

#include "adaptex/policy.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adaptex/bandit.h"
#include "adaptex/common.h"

namespace adaptex {

using nlohmann::json;

namespace {

void CheckArmIndex(int arm, int n_arms) {
  if (arm < 0 || arm >= n_arms) ThrowUsage("policy arm index out of range");
}

}  // namespace

Policy Policy::Constant(int arm, int n_arms) {
  CheckArmIndex(arm, n_arms);
  Policy p;
  p.kind_ = Kind::kConstant;
  p.n_arms_ = n_arms;
  p.constant_arm_ = arm;
  return p;
}

Policy Policy::Greedy(std::shared_ptr<const ArmPredictor> model,
                      std::vector<int> arm_subset, int n_arms) {
  if (arm_subset.empty()) ThrowUsage("greedy policy needs a nonempty arm subset");
  if (!model) ThrowUsage("greedy policy needs a conditional-mean model");
  std::sort(arm_subset.begin(), arm_subset.end());
  arm_subset.erase(std::unique(arm_subset.begin(), arm_subset.end()), arm_subset.end());
  for (int a : arm_subset) CheckArmIndex(a, n_arms);
  Policy p;
  p.kind_ = Kind::kGreedy;
  p.n_arms_ = n_arms;
  p.model_ = std::move(model);
  p.subset_ = std::move(arm_subset);
  return p;
}

Policy Policy::Restricted(int first_arm, int second_arm,
                          std::shared_ptr<const Regressor> cate,
                          bool lower_is_better, int n_arms) {
  CheckArmIndex(first_arm, n_arms);
  CheckArmIndex(second_arm, n_arms);
  if (first_arm == second_arm) ThrowUsage("restricted policy needs two distinct arms");
  Policy p;
  p.kind_ = Kind::kRestricted;
  p.n_arms_ = n_arms;
  p.first_arm_ = first_arm;
  p.second_arm_ = second_arm;
  p.cate_ = std::move(cate);
  p.lower_is_better_ = lower_is_better;
  return p;
}

Policy Policy::Table(std::map<std::uint64_t, int> table, int default_arm, int n_arms) {
  CheckArmIndex(default_arm, n_arms);
  for (const auto& [hash, arm] : table) CheckArmIndex(arm, n_arms);
  Policy p;
  p.kind_ = Kind::kTable;
  p.n_arms_ = n_arms;
  p.constant_arm_ = default_arm;
  p.table_ = std::move(table);
  return p;
}

double Policy::Cate(std::span<const double> features) const {
  if (kind_ != Kind::kRestricted) ThrowUsage("only restricted policies carry a CATE");
  return cate_->Predict(features);
}

int Policy::Assign(std::span<const double> features) const {
  switch (kind_) {
    case Kind::kConstant:
      return constant_arm_;
    case Kind::kGreedy: {
      int best = subset_.front();
      double best_value = model_->Predict(features, best);
      for (std::size_t i = 1; i < subset_.size(); ++i) {
        const double v = model_->Predict(features, subset_[i]);
        if (v > best_value) {
          best = subset_[i];
          best_value = v;
        }
      }
      return best;
    }
    case Kind::kRestricted: {
      const double tau = cate_->Predict(features);
      const bool first = tau == 0.0 || (lower_is_better_ ? tau < 0 : tau > 0);
      return first ? first_arm_ : second_arm_;
    }
    case Kind::kTable: {
      auto it = table_.find(HashFeatures(features));
      return it == table_.end() ? constant_arm_ : it->second;
    }
  }
  return constant_arm_;
}

json Policy::ToJson() const {
  switch (kind_) {
    case Kind::kConstant:
      return {{"kind", "constant"}, {"n_arms", n_arms_}, {"arm", constant_arm_}};
    case Kind::kGreedy:
      return {{"kind", "greedy"},
              {"n_arms", n_arms_},
              {"arm_subset", subset_},
              {"model", model_->ToJson()}};
    case Kind::kRestricted:
      return {{"kind", "restricted"},
              {"n_arms", n_arms_},
              {"arms", {first_arm_, second_arm_}},
              {"lower_is_better", lower_is_better_},
              {"cate", cate_->ToJson()}};
    case Kind::kTable: {
      json table = json::object();
      for (const auto& [hash, arm] : table_) table[std::to_string(hash)] = arm;
      return {{"kind", "table"},
              {"n_arms", n_arms_},
              {"default_arm", constant_arm_},
              {"table", table}};
    }
  }
  return {};
}

Policy Policy::FromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int n_arms = j.at("n_arms").get<int>();
  if (kind == "constant") return Constant(j.at("arm").get<int>(), n_arms);
  if (kind == "greedy") {
    return Greedy(ArmPredictorFromJson(j.at("model")),
                  j.at("arm_subset").get<std::vector<int>>(), n_arms);
  }
  if (kind == "restricted") {
    const auto arms = j.at("arms").get<std::vector<int>>();
    if (arms.size() != 2) ThrowData("restricted policy needs two arms");
    return Restricted(arms[0], arms[1], RegressorFromJson(j.at("cate")),
                      j.at("lower_is_better").get<bool>(), n_arms);
  }
  if (kind == "table") {
    std::map<std::uint64_t, int> table;
    for (const auto& [key, arm] : j.at("table").items()) {
      table[std::stoull(key)] = arm.get<int>();
    }
    return Table(std::move(table), j.at("default_arm").get<int>(), n_arms);
  }
  ThrowData("unknown policy kind '" + kind + "'");
}

Policy LearnGreedyPolicy(std::shared_ptr<const ArmPredictor> model,
                         std::vector<int> arm_subset, int n_arms) {
  return Policy::Greedy(std::move(model), std::move(arm_subset), n_arms);
}

Policy LearnRestrictedPolicy(const Dataset& learning, int first_arm, int second_arm,
                             const RestrictedPolicyOptions& options) {
  CheckArmIndex(first_arm, learning.n_arms());
  CheckArmIndex(second_arm, learning.n_arms());
  if (first_arm == second_arm) ThrowUsage("restricted policy needs two distinct arms");
  const Dataset completed = learning.Completed();
  int n_first = 0, n_second = 0;
  for (const auto& u : completed.units) {
    n_first += u.arm == first_arm;
    n_second += u.arm == second_arm;
  }
  if (n_first == 0 || n_second == 0) {
    ThrowData("restricted policy: an arm has no observed units");
  }
  const ScoreTable scores = ScoreDataset(learning, options.measure, options.scoring);
  std::vector<double> delta(scores.size());
  for (int i = 0; i < scores.size(); ++i) {
    delta[i] = scores.gamma(i, first_arm) - scores.gamma(i, second_arm);
  }
  std::shared_ptr<const Regressor> cate =
      FitRegressor(FeatureRows(completed), delta, options.cate);
  const bool lower = options.lower_is_better.value_or(
      options.measure == OutcomeMeasure::kFalseAny ||
      options.measure == OutcomeMeasure::kFalseCount);
  return Policy::Restricted(first_arm, second_arm, std::move(cate), lower,
                            learning.n_arms());
}

PolicyApplication ApplyPolicy(const Policy& policy, const Dataset& data) {
  for (const auto& u : data.units) {
    if (static_cast<int>(u.context.features.size()) != data.n_features()) {
      ThrowData("context does not match the dataset schema");
    }
  }
  PolicyApplication out;
  out.shares.assign(policy.n_arms(), 0.0);
  for (const auto& u : data.units) {
    const int arm = policy.Assign(u.context);
    out.assignments.push_back(arm);
    out.shares[arm] += 1.0;
  }
  if (!data.units.empty()) {
    for (double& s : out.shares) s /= static_cast<double>(data.units.size());
  }
  return out;
}

double PolicyOverlap(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) ThrowData("overlap needs assignments over the same units");
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return same / static_cast<double>(a.size());
}

namespace {

void CheckSupport(const ScoreTable& scores, std::span<const int> assignments) {
  if (static_cast<int>(assignments.size()) != scores.size()) {
    ThrowData("assignments do not match the score table");
  }
  for (int i = 0; i < scores.size(); ++i) {
    const int a = assignments[i];
    if (a < 0 || a >= scores.n_arms) ThrowData("assigned arm out of range");
    if (!(scores.propensity(i, a) > 0.0)) {
      ThrowData("policy selects an arm with zero propensity for unit " +
                std::to_string(scores.unit_ids[i]));
    }
  }
}

}  // namespace

Estimate EvaluateAssignments(const ScoreTable& scores, std::span<const int> assignments,
                             const WeightingOptions& options) {
  CheckSupport(scores, assignments);
  std::vector<double> g, v;
  for (int i = 0; i < scores.size(); ++i) {
    if (!options.subgroup.empty() && !options.subgroup[i]) continue;
    g.push_back(scores.gamma(i, assignments[i]));
    v.push_back(UnitWeight(scores, i, assignments[i], options));
  }
  if (g.empty()) ThrowData("empty subgroup");
  return HajekMean(g, v);
}

Estimate EvaluatePolicy(const Policy& policy, const Dataset& scored_units,
                        const ScoreTable& scores, const WeightingOptions& options) {
  if (static_cast<int>(scored_units.size()) != scores.size()) {
    ThrowData("scored units do not match the score table");
  }
  std::vector<int> assignments;
  for (const auto& u : scored_units.units) assignments.push_back(policy.Assign(u.context));
  return EvaluateAssignments(scores, assignments, options);
}

Estimate ComparePolicies(const ScoreTable& scores, std::span<const int> a,
                         std::span<const int> b, const WeightingOptions& options) {
  CheckSupport(scores, a);
  CheckSupport(scores, b);
  std::vector<int> rows;
  for (int i = 0; i < scores.size(); ++i) {
    if (options.subgroup.empty() || options.subgroup[i]) rows.push_back(i);
  }
  if (rows.empty()) ThrowData("empty subgroup");
  const std::size_t n = rows.size();
  auto side = [&](std::span<const int> assign, std::vector<double>& psi) {
    double weighted = 0, total = 0;
    for (int i : rows) {
      const double v = UnitWeight(scores, i, assign[i], options);
      weighted += v * scores.gamma(i, assign[i]);
      total += v;
    }
    const double q = weighted / total;
    psi.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const int i = rows[r];
      psi[r] = UnitWeight(scores, i, assign[i], options) * (scores.gamma(i, assign[i]) - q) / total;
    }
    return q;
  };
  std::vector<double> psi_a, psi_b;
  const double qa = side(a, psi_a);
  const double qb = side(b, psi_b);
  double ss = 0;
  for (std::size_t r = 0; r < n; ++r) ss += (psi_a[r] - psi_b[r]) * (psi_a[r] - psi_b[r]);
  return MakeEstimate(qa - qb, n > 1 ? std::sqrt(ss * n / (n - 1.0)) : 0.0,
                      static_cast<std::int64_t>(n));
}

std::vector<BatchShare> OnPolicyShare(const Dataset& log, const Policy& policy,
                                      const ArmSpace& policy_arms, bool by_batch) {
  std::map<int, std::pair<std::int64_t, std::int64_t>> tally;  // batch -> (n, hits)
  for (const auto& u : log.units) {
    const int target = policy_arms.arm(policy.Assign(u.context)).respondent_level;
    const int realized = log.arms.arm(u.arm).respondent_level;
    auto& [n, hits] = tally[by_batch ? u.batch : -1];
    ++n;
    hits += realized == target;
  }
  std::vector<BatchShare> out;
  for (const auto& [batch, counts] : tally) {
    out.push_back({batch, counts.first,
                   counts.second / static_cast<double>(counts.first)});
  }
  return out;
}

RateWeighting ParseRateWeighting(const std::string& name) {
  if (name == "autoc") return RateWeighting::kAutoc;
  if (name == "qini") return RateWeighting::kQini;
  ThrowUsage("unknown RATE weighting '" + name + "'");
}

std::string RateWeightingName(RateWeighting weighting) {
  return weighting == RateWeighting::kQini ? "qini" : "autoc";
}

namespace {

std::vector<int> PriorityOrder(std::span<const double> priorities,
                               std::span<const std::int64_t> unit_ids) {
  std::vector<int> order(priorities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (priorities[a] != priorities[b]) return priorities[a] > priorities[b];
    return unit_ids[a] < unit_ids[b];
  });
  return order;
}

std::size_t TopCount(double q, std::size_t n) {
  const double m = std::ceil(q * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(m, 1.0)), 1, n);
}

// TOC on units listed in rank order.
std::vector<double> TocFromRanked(std::span<const double> ranked_deltas,
                                  std::span<const double> grid) {
  const std::size_t n = ranked_deltas.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + ranked_deltas[i];
  const double overall = prefix[n] / static_cast<double>(n);
  std::vector<double> toc;
  toc.reserve(grid.size());
  for (double q : grid) {
    const std::size_t m = TopCount(q, n);
    toc.push_back(prefix[m] / static_cast<double>(m) - overall);
  }
  return toc;
}

double RateFromToc(std::span<const double> toc, std::span<const double> grid,
                   RateWeighting weighting) {
  double sum = 0;
  for (std::size_t j = 0; j < toc.size(); ++j) {
    sum += weighting == RateWeighting::kQini ? grid[j] * toc[j] : toc[j];
  }
  return sum / static_cast<double>(toc.size());
}

}  // namespace

std::vector<double> TocValues(std::span<const double> deltas,
                              std::span<const double> priorities,
                              std::span<const std::int64_t> unit_ids,
                              std::span<const double> grid) {
  if (deltas.empty()) ThrowData("TOC needs at least one unit");
  const auto order = PriorityOrder(priorities, unit_ids);
  std::vector<double> ranked;
  ranked.reserve(order.size());
  for (int i : order) ranked.push_back(deltas[i]);
  return TocFromRanked(ranked, grid);
}

TocCurve TocRate(const ScoreTable& scores, int first_arm, int second_arm,
                 std::span<const double> priorities, const TocOptions& options) {
  if (options.n_bootstrap < 2) ThrowUsage("RATE needs at least 2 bootstrap replicates");
  if (options.grid_size < 1) ThrowUsage("TOC grid needs at least one point");
  if (first_arm == second_arm) ThrowUsage("TOC needs two distinct arms");
  if (first_arm < 0 || second_arm < 0 || first_arm >= scores.n_arms ||
      second_arm >= scores.n_arms) {
    ThrowUsage("TOC arm index out of range");
  }
  if (static_cast<int>(priorities.size()) != scores.size()) {
    ThrowData("priority vector does not match the score table");
  }
  const int n = scores.size();
  if (n < 2) ThrowData("TOC needs at least two units");

  TocCurve curve;
  curve.weighting = options.weighting;
  for (int j = 1; j <= options.grid_size; ++j) {
    curve.q.push_back(j == options.grid_size ? 1.0 : j / double(options.grid_size));
  }
  curve.constant_priorities =
      std::all_of(priorities.begin(), priorities.end(),
                  [&](double p) { return p == priorities[0]; });

  std::vector<double> delta(n);
  for (int i = 0; i < n; ++i) {
    delta[i] = scores.gamma(i, first_arm) - scores.gamma(i, second_arm);
  }
  const auto order = PriorityOrder(priorities, scores.unit_ids);
  std::vector<double> ranked(n);
  for (int r = 0; r < n; ++r) ranked[r] = delta[order[r]];
  curve.value = TocFromRanked(ranked, curve.q);
  const double rate = RateFromToc(curve.value, curve.q, options.weighting);

  // Half-sample bootstrap: draw n/2 ranks without replacement, keep rank order.
  const int half = n / 2;
  const int g = static_cast<int>(curve.q.size());
  std::vector<double> sum(g, 0.0), sum_sq(g, 0.0);
  double rate_sum = 0, rate_sq = 0;
  std::vector<int> ranks(n);
  std::vector<double> sub(half);
  for (int b = 0; b < options.n_bootstrap; ++b) {
    std::iota(ranks.begin(), ranks.end(), 0);
    Rng rng(DeriveSeed(options.seed, 0xb007, static_cast<std::uint64_t>(b)));
    for (int i = 0; i < half; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(ranks[i], ranks[pick(rng)]);
    }
    std::sort(ranks.begin(), ranks.begin() + half);
    for (int i = 0; i < half; ++i) sub[i] = ranked[ranks[i]];
    const auto toc = TocFromRanked(sub, curve.q);
    const double r = RateFromToc(toc, curve.q, options.weighting);
    for (int j = 0; j < g; ++j) {
      sum[j] += toc[j];
      sum_sq[j] += toc[j] * toc[j];
    }
    rate_sum += r;
    rate_sq += r * r;
  }
  const double reps = options.n_bootstrap;
  auto sd = [&](double s, double s2) {
    const double var = (s2 - s * s / reps) / (reps - 1);
    return var > 0 ? std::sqrt(var) : 0.0;
  };
  for (int j = 0; j < g; ++j) curve.se.push_back(sd(sum[j], sum_sq[j]));
  curve.rate = MakeEstimate(rate, sd(rate_sum, rate_sq), n);
  return curve;
}

std::string TocCsv(const TocCurve& curve) {
  std::ostringstream out;
  out << "q,value,se\n";
  for (std::size_t j = 0; j < curve.q.size(); ++j) {
    out << FormatDouble(curve.q[j]) << ',' << FormatDouble(curve.value[j]) << ','
        << FormatDouble(curve.se[j]) << '\n';
  }
  return out.str();
}

std::vector<double> RestrictedPriorities(const Policy& restricted, const Dataset& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& u : data.units) {
    const double tau = restricted.Cate(u.context.features);
    out.push_back(restricted.lower_is_better() ? -tau : tau);
  }
  return out;
}

}  // namespace adaptex
