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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "adaptex/common.h"

namespace adaptex {

OutcomeMeasure ParseOutcomeMeasure(const std::string& name) {
  if (name == "discernment") return OutcomeMeasure::kDiscernment;
  if (name == "false_any" || name == "false_sharing") return OutcomeMeasure::kFalseAny;
  if (name == "true_any" || name == "true_sharing") return OutcomeMeasure::kTrueAny;
  if (name == "false_count") return OutcomeMeasure::kFalseCount;
  if (name == "true_count") return OutcomeMeasure::kTrueCount;
  ThrowUsage("unknown outcome measure '" + name + "'");
}

std::string OutcomeMeasureName(OutcomeMeasure measure) {
  switch (measure) {
    case OutcomeMeasure::kDiscernment: return "discernment";
    case OutcomeMeasure::kFalseAny: return "false_any";
    case OutcomeMeasure::kTrueAny: return "true_any";
    case OutcomeMeasure::kFalseCount: return "false_count";
    case OutcomeMeasure::kTrueCount: return "true_count";
  }
  return "discernment";
}

double Response(const OutcomeRecord& outcome, OutcomeMeasure measure,
                const ResponseWeights& weights) {
  switch (measure) {
    case OutcomeMeasure::kDiscernment:
      return Discernment(outcome, weights, Phase::kPost);
    case OutcomeMeasure::kFalseAny:
      return ComputeChannelResponses(outcome).false_any;
    case OutcomeMeasure::kTrueAny:
      return ComputeChannelResponses(outcome).true_any;
    case OutcomeMeasure::kFalseCount:
      return outcome.m_post / 4.0;
    case OutcomeMeasure::kTrueCount:
      return outcome.t_post / 4.0;
  }
  return 0;
}

std::vector<double> Responses(const Dataset& data, OutcomeMeasure measure,
                              const ResponseWeights& weights) {
  std::vector<double> y;
  y.reserve(data.size());
  for (const auto& u : data.units) y.push_back(Response(u.outcome, measure, weights));
  return y;
}

FeatureMatrix FeatureRows(const Dataset& data) {
  FeatureMatrix x(data.size(), data.n_features());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data.units[i].context.features;
    if (static_cast<int>(f.size()) != data.n_features()) {
      ThrowData("unit feature length does not match the dataset schema");
    }
    for (int j = 0; j < data.n_features(); ++j) x(i, j) = f[j];
  }
  return x;
}

ArmTrainingSet MakeTrainingSet(const Dataset& data, std::span<const double> y) {
  ArmTrainingSet t;
  t.x = FeatureRows(data);
  t.n_arms = data.n_arms();
  t.y.assign(y.begin(), y.end());
  for (const auto& u : data.units) t.arm.push_back(u.arm);
  return t;
}

namespace {

ArmTrainingSet Subset(const ArmTrainingSet& all, const std::vector<int>& rows) {
  ArmTrainingSet t;
  t.n_arms = all.n_arms;
  t.x.resize(rows.size(), all.x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.x.row(i) = all.x.row(rows[i]);
    t.arm.push_back(all.arm[rows[i]]);
    t.y.push_back(all.y[rows[i]]);
  }
  return t;
}

void PredictRows(const ArmPredictor& model, const ArmTrainingSet& all,
                 const std::vector<int>& rows, Eigen::MatrixXd& out) {
  for (int r : rows) {
    const std::span<const double> x(all.x.row(r).data(), all.x.cols());
    for (int k = 0; k < all.n_arms; ++k) out(r, k) = model.Predict(x, k);
  }
}

}  // namespace

MuModel FitConditionalMeans(const Dataset& data, std::span<const double> y,
                            const MuOptions& options) {
  if (y.size() != data.size()) ThrowData("outcome vector does not match dataset");
  for (const auto& u : data.units) {
    if (!u.outcome.completed) ThrowData("conditional means need completed outcomes");
  }
  const int n = static_cast<int>(data.size());
  const int k = data.n_arms();
  const ArmTrainingSet all = MakeTrainingSet(data, y);

  MuModel mu;
  mu.method = options.learner.method;
  mu.mode = options.mode;
  mu.predictions = Eigen::MatrixXd::Zero(n, k);

  if (options.mode == FitMode::kCrossfit) {
    if (options.folds < 2) ThrowUsage("crossfit needs at least 2 folds");
    if (n < options.folds) ThrowData("crossfit needs at least one unit per fold");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(options.learner.seed, 0xf01d));
    std::shuffle(order.begin(), order.end(), rng);
    mu.folds.assign(n, 0);
    for (int i = 0; i < n; ++i) mu.folds[order[i]] = i % options.folds;
    for (int f = 0; f < options.folds; ++f) {
      std::vector<int> train, test;
      for (int i = 0; i < n; ++i) (mu.folds[i] == f ? test : train).push_back(i);
      LearnerOptions fold_options = options.learner;
      fold_options.seed = DeriveSeed(options.learner.seed, 0xf01d, f + 1);
      auto model = FitArmPredictor(Subset(all, train), fold_options);
      PredictRows(*model, all, test, mu.predictions);
    }
  } else {
    std::map<int, std::vector<int>> by_batch;
    for (int i = 0; i < n; ++i) by_batch[data.units[i].batch].push_back(i);
    const int first_batch = by_batch.begin()->first;
    for (const auto& [batch, rows] : by_batch) {
      if (batch != first_batch) {
        std::vector<int> train;
        for (int i = 0; i < n; ++i) {
          if (data.units[i].batch < batch) train.push_back(i);
        }
        if (train.empty()) {
          ThrowData("batch " + std::to_string(batch) + " has no earlier data to predict from");
        }
        LearnerOptions batch_options = options.learner;
        batch_options.seed = DeriveSeed(options.learner.seed, 0xba7c, batch);
        auto model = FitArmPredictor(Subset(all, train), batch_options);
        PredictRows(*model, all, rows, mu.predictions);
        continue;
      }
      // Earliest batch: leave-one-out batch means, per arm when possible.
      std::vector<double> sum(k, 0.0);
      std::vector<int> count(k, 0);
      double total = 0;
      for (int r : rows) {
        sum[all.arm[r]] += all.y[r];
        ++count[all.arm[r]];
        total += all.y[r];
      }
      const int n0 = static_cast<int>(rows.size());
      for (int r : rows) {
        if (n0 < 2) ThrowData("first batch has a single unit and no fallback mean");
        const double global = (total - all.y[r]) / (n0 - 1);
        for (int w = 0; w < k; ++w) {
          double s = sum[w];
          int c = count[w];
          if (w == all.arm[r]) {
            s -= all.y[r];
            --c;
          }
          mu.predictions(r, w) = c > 0 ? s / c : global;
        }
      }
    }
  }
  mu.full = FitArmPredictor(all, options.learner);
  return mu;
}

ScoreTable AipwScores(const Dataset& data, std::span<const double> y,
                      const MuModel& mu) {
  const int n = static_cast<int>(data.size());
  const int k = data.n_arms();
  if (static_cast<int>(y.size()) != n || mu.predictions.rows() != n ||
      mu.predictions.cols() != k) {
    ThrowData("scores: outcome or prediction shape does not match dataset");
  }
  ScoreTable t;
  t.n_arms = k;
  t.gamma.resize(n, k);
  t.propensity.resize(n, k);
  t.y.assign(y.begin(), y.end());
  for (int i = 0; i < n; ++i) {
    const UnitRecord& u = data.units[i];
    if (static_cast<int>(u.propensities.size()) != k) ThrowData("propensity vector length mismatch");
    const double e = u.propensities[u.arm];
    if (!(e > 0.0)) {
      ThrowData("unit " + std::to_string(u.unit_id) + " has zero propensity on its realized arm");
    }
    t.unit_ids.push_back(u.unit_id);
    t.arm.push_back(u.arm);
    t.batch.push_back(u.batch);
    for (int w = 0; w < k; ++w) {
      t.propensity(i, w) = u.propensities[w];
      const double m = mu.predictions(i, w);
      t.gamma(i, w) = w == u.arm ? m + (y[i] - m) / e : m;
    }
  }
  return t;
}

ScoreTable IpwScores(const Dataset& data, std::span<const double> y) {
  MuModel zero;
  zero.predictions = Eigen::MatrixXd::Zero(data.size(), data.n_arms());
  return AipwScores(data, y, zero);
}

AdaptiveScheme ParseAdaptiveScheme(const std::string& name) {
  if (name == "none") return AdaptiveScheme::kNone;
  if (name == "uniform") return AdaptiveScheme::kUniform;
  if (name == "stabilized_variance" || name == "stabilized-variance" || name == "stabilized") {
    return AdaptiveScheme::kStabilizedVariance;
  }
  ThrowUsage("unknown adaptive weight scheme '" + name + "'");
}

std::string AdaptiveSchemeName(AdaptiveScheme scheme) {
  switch (scheme) {
    case AdaptiveScheme::kNone: return "none";
    case AdaptiveScheme::kUniform: return "uniform";
    case AdaptiveScheme::kStabilizedVariance: return "stabilized-variance";
  }
  return "none";
}

Eigen::MatrixXd AdaptiveWeights(const Eigen::MatrixXd& propensity,
                                AdaptiveScheme scheme) {
  if (scheme == AdaptiveScheme::kStabilizedVariance) {
    return propensity.cwiseMax(0.0).cwiseSqrt();
  }
  return Eigen::MatrixXd::Ones(propensity.rows(), propensity.cols());
}

Estimate MakeEstimate(double value, double std_error, std::int64_t n) {
  Estimate e;
  e.value = value;
  e.std_error = std_error;
  e.n = n;
  if (std_error > 0) {
    e.z = value / std_error;
  } else {
    e.z = value == 0 ? 0.0 : std::copysign(INFINITY, value);
  }
  e.p_two_sided = std::erfc(std::abs(e.z) / std::sqrt(2.0));
  e.ci_lo = value - 1.96 * std_error;
  e.ci_hi = value + 1.96 * std_error;
  return e;
}

Estimate HajekMean(std::span<const double> scores, std::span<const double> weights) {
  const std::size_t n = scores.size();
  if (n == 0) ThrowData("cannot average an empty set of scores");
  if (weights.size() != n) ThrowData("weights and scores differ in length");
  double weighted = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    weighted += weights[i] * scores[i];
    total += weights[i];
  }
  if (!(total > 0)) ThrowData("weights sum to zero");
  const double value = weighted / total;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double psi = weights[i] * (scores[i] - value) / total;
    ss += psi * psi;
  }
  const double se = n > 1 ? std::sqrt(ss * n / (n - 1.0)) : 0.0;
  return MakeEstimate(value, se, static_cast<std::int64_t>(n));
}

double UnitWeight(const ScoreTable& scores, int i, int arm,
                  const WeightingOptions& options) {
  double v = 1.0;
  if (options.use_adaptive && scores.adaptive) v *= (*scores.adaptive)(i, arm);
  if (options.use_censor && scores.censor) v *= (*scores.censor)[i];
  return v;
}

namespace {

std::vector<int> SelectedUnits(const ScoreTable& scores, const WeightingOptions& options) {
  std::vector<int> rows;
  if (!options.subgroup.empty() &&
      static_cast<int>(options.subgroup.size()) != scores.size()) {
    ThrowData("subgroup mask length does not match the score table");
  }
  for (int i = 0; i < scores.size(); ++i) {
    if (options.subgroup.empty() || options.subgroup[i]) rows.push_back(i);
  }
  if (rows.empty()) ThrowData("empty subgroup");
  return rows;
}

void CheckArm(const ScoreTable& scores, int arm) {
  if (arm < 0 || arm >= scores.n_arms) ThrowData("arm index out of range");
}

}  // namespace

Estimate MeanResponse(const ScoreTable& scores, int arm,
                      const WeightingOptions& options) {
  CheckArm(scores, arm);
  const auto rows = SelectedUnits(scores, options);
  std::vector<double> g, v;
  g.reserve(rows.size());
  v.reserve(rows.size());
  for (int i : rows) {
    g.push_back(scores.gamma(i, arm));
    v.push_back(UnitWeight(scores, i, arm, options));
  }
  return HajekMean(g, v);
}

Estimate LinearCombination(const ScoreTable& scores,
                           std::span<const std::pair<int, double>> terms,
                           const WeightingOptions& options) {
  const auto rows = SelectedUnits(scores, options);
  const std::size_t n = rows.size();
  std::vector<double> psi(n, 0.0);
  double value = 0;
  for (const auto& [arm, coef] : terms) {
    CheckArm(scores, arm);
    double weighted = 0, total = 0;
    for (int i : rows) {
      const double v = UnitWeight(scores, i, arm, options);
      weighted += v * scores.gamma(i, arm);
      total += v;
    }
    if (!(total > 0)) ThrowData("weights sum to zero");
    const double q = weighted / total;
    value += coef * q;
    for (std::size_t r = 0; r < n; ++r) {
      const int i = rows[r];
      psi[r] += coef * UnitWeight(scores, i, arm, options) * (scores.gamma(i, arm) - q) / total;
    }
  }
  double ss = 0;
  for (double p : psi) ss += p * p;
  const double se = n > 1 ? std::sqrt(ss * n / (n - 1.0)) : 0.0;
  return MakeEstimate(value, se, static_cast<std::int64_t>(n));
}

Estimate Contrast(const ScoreTable& scores, int arm, int other_arm,
                  const WeightingOptions& options) {
  if (arm == other_arm) ThrowUsage("contrast needs two distinct arms");
  const std::pair<int, double> terms[] = {{arm, 1.0}, {other_arm, -1.0}};
  return LinearCombination(scores, terms, options);
}

CensorModel ParseCensorModel(const std::string& name) {
  if (name == "none") return CensorModel::kNone;
  if (name == "logistic") return CensorModel::kLogistic;
  if (name == "intercept_only" || name == "intercept") return CensorModel::kInterceptOnly;
  ThrowUsage("unknown censoring model '" + name + "'");
}

std::string CensorModelName(CensorModel model) {
  switch (model) {
    case CensorModel::kNone: return "none";
    case CensorModel::kLogistic: return "logistic";
    case CensorModel::kInterceptOnly: return "intercept";
  }
  return "none";
}

double ClipCensorWeight(double completion_probability) {
  if (!(completion_probability > 0)) return 50.0;
  return std::clamp(1.0 / completion_probability, 1.0, 50.0);
}

std::vector<double> CensoringWeights(const Dataset& assigned, CensorModel model,
                                     double penalty) {
  std::vector<int> labels;
  int n_complete = 0;
  for (const auto& u : assigned.units) {
    labels.push_back(u.outcome.completed ? 1 : 0);
    n_complete += labels.back();
  }
  if (n_complete == 0) ThrowData("every unit is censored");
  if (model == CensorModel::kNone || n_complete == static_cast<int>(labels.size())) {
    return std::vector<double>(n_complete, 1.0);
  }

  const int p = model == CensorModel::kInterceptOnly
                    ? 0
                    : assigned.n_features() + assigned.n_arms() - 1;
  FeatureMatrix x(assigned.size(), p);
  if (p > 0) {
    const FeatureMatrix f = FeatureRows(assigned);
    x.setZero();
    x.leftCols(f.cols()) = f;
    for (std::size_t i = 0; i < assigned.size(); ++i) {
      const int arm = assigned.units[i].arm;
      if (arm > 0) x(i, f.cols() + arm - 1) = 1.0;
    }
  }
  const LogisticFit fit = FitLogistic(x, labels, penalty);
  std::vector<double> weights;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (!labels[i]) continue;
    const double prob = fit.Probability(std::span<const double>(x.row(i).data(), p));
    weights.push_back(ClipCensorWeight(prob));
  }
  return weights;
}

std::vector<std::vector<Estimate>> InteractionContrasts(
    const ScoreTable& scores, const ArmSpace& arms, const WeightingOptions& options) {
  if (!arms.is_factorial()) ThrowUsage("interaction contrasts need a factorial arm space");
  if (scores.size() == 0) ThrowData("no scored units");
  const int rows = arms.respondent_levels(), cols = arms.headline_levels();
  std::vector<std::vector<Estimate>> out(rows, std::vector<Estimate>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::vector<std::pair<int, double>> terms;
      for (int r2 = 0; r2 < rows; ++r2) {
        const double coef = (r2 == r ? 1.0 : 0.0) - 1.0 / rows;
        terms.push_back({arms.IndexOf({r2, c}), coef});
      }
      out[r][c] = LinearCombination(scores, terms, options);
    }
  }
  return out;
}

Estimate UniformCounterfactualValue(const ScoreTable& scores,
                                    const WeightingOptions& options) {
  std::vector<std::pair<int, double>> terms;
  for (int k = 0; k < scores.n_arms; ++k) terms.push_back({k, 1.0 / scores.n_arms});
  return LinearCombination(scores, terms, options);
}

ScoreTable ScoreDataset(const Dataset& assigned, OutcomeMeasure measure,
                        const EstimationConfig& config) {
  const Dataset completed = assigned.Completed();
  if (completed.size() == 0) ThrowData("no completed units to score");
  std::optional<std::vector<double>> censor;
  if (config.censoring != CensorModel::kNone) {
    censor = CensoringWeights(assigned, config.censoring);
  }
  const std::vector<double> y = Responses(completed, measure, config.weights);
  ScoreTable scores;
  if (config.ipw_only) {
    scores = IpwScores(completed, y);
  } else {
    scores = AipwScores(completed, y, FitConditionalMeans(completed, y, config.mu));
  }
  if (config.adaptive != AdaptiveScheme::kNone) {
    scores.adaptive = AdaptiveWeights(scores.propensity, config.adaptive);
  }
  scores.censor = std::move(censor);
  return scores;
}

std::vector<EstimateRow> EstimateTable(const Dataset& assigned,
                                       const EstimationConfig& config) {
  if (config.control_arm < 0 || config.control_arm >= assigned.n_arms()) {
    ThrowUsage("control arm out of range");
  }
  std::vector<EstimateRow> rows;
  for (OutcomeMeasure measure : config.measures) {
    const ScoreTable scores = ScoreDataset(assigned, measure, config);
    const std::string name = OutcomeMeasureName(measure);
    for (int k = 0; k < assigned.n_arms(); ++k) {
      rows.push_back({name, assigned.arms.name(k), "mean", MeanResponse(scores, k)});
    }
    for (int k = 0; k < assigned.n_arms(); ++k) {
      if (k == config.control_arm) continue;
      rows.push_back({name, assigned.arms.name(k), "effect",
                      Contrast(scores, k, config.control_arm)});
    }
  }
  return rows;
}

std::string EstimateCsvHeader() {
  return "measure,arm,kind,estimate,se,z,p,ci_lo,ci_hi,n";
}

std::string EstimateCsvFields(const EstimateRow& row) {
  const Estimate& e = row.estimate;
  std::ostringstream out;
  out << row.measure << ',' << row.arm << ',' << row.kind << ',' << FormatDouble(e.value)
      << ',' << FormatDouble(e.std_error) << ',' << FormatDouble(e.z) << ','
      << FormatDouble(e.p_two_sided) << ',' << FormatDouble(e.ci_lo) << ','
      << FormatDouble(e.ci_hi) << ',' << e.n;
  return out.str();
}

std::string EstimateTableCsv(const std::vector<EstimateRow>& rows) {
  std::string out = EstimateCsvHeader() + "\n";
  for (const auto& r : rows) out += EstimateCsvFields(r) + "\n";
  return out;
}

std::vector<SweepRow> WeightSweep(const Dataset& assigned,
                                  std::span<const ResponseWeights> grid,
                                  const EstimationConfig& config) {
  std::vector<SweepRow> out;
  for (const ResponseWeights& w : grid) {
    if (!w.InSweepRange()) {
      ThrowUsage("sweep weights outside w_false in [-1,-0.1], w_true in [0.1,1]");
    }
    EstimationConfig point = config;
    point.weights = w;
    point.measures = {OutcomeMeasure::kDiscernment};
    for (auto& row : EstimateTable(assigned, point)) {
      if (row.kind != "effect") continue;
      out.push_back({std::log(-w.w_false / w.w_true), w, std::move(row)});
    }
  }
  return out;
}

std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::string out = "log_ratio,w_false,w_true," + EstimateCsvHeader() + "\n";
  for (const auto& r : rows) {
    out += FormatDouble(r.log_ratio) + "," + FormatDouble(r.weights.w_false) + "," +
           FormatDouble(r.weights.w_true) + "," + EstimateCsvFields(r.row) + "\n";
  }
  return out;
}

}  // namespace adaptex
