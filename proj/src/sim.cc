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

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <sstream>

namespace adaptex {

namespace {

constexpr std::int64_t kStreamIdStride = 1'000'000'000;

double Logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double At(const std::vector<double>& v, int i) {
  return i < static_cast<int>(v.size()) ? v[i] : 0.0;
}

double Uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::vector<double> DrawFeatures(const DgpSpec& dgp, Rng& rng) {
  std::normal_distribution<double> normal;
  const double shared = std::sqrt(dgp.feature_correlation);
  const double own = std::sqrt(1.0 - dgp.feature_correlation);
  const double z0 = normal(rng);
  std::vector<double> x(dgp.n_features);
  for (double& v : x) v = shared * z0 + own * normal(rng);
  return x;
}

// Quantile `u` of Beta(k p, k (1 - p)), or p itself without mixing.
double UnitShare(const DgpSpec& dgp, double p, double u) {
  if (dgp.unit_concentration <= 0) return p;
  const double k = dgp.unit_concentration;
  return boost::math::ibeta_inv(k * p, k * (1.0 - p), u);
}

std::pair<double, double> ChannelProbabilities(double q, double tilt) {
  const double m = std::min(q, 1.0 - q);
  return {q + tilt * m, q - tilt * m};
}

// Fills one phase of the grid; `u` holds 8 uniforms in grid order.
void FillPhase(ChannelDetail& detail, Phase phase, double q_false, double q_true,
               double tilt, const std::array<double, 8>& u) {
  int n = 0;
  for (StimulusType type : {StimulusType::kFalse, StimulusType::kTrue}) {
    const auto [timeline, messenger] =
        ChannelProbabilities(type == StimulusType::kFalse ? q_false : q_true, tilt);
    for (int s = 0; s < kStimuliPerType; ++s) {
      detail[ChannelCell(phase, type, s, Channel::kTimeline)] = u[n++] < timeline;
      detail[ChannelCell(phase, type, s, Channel::kMessenger)] = u[n++] < messenger;
    }
  }
}

std::array<double, 8> Uniforms8(Rng& rng) {
  std::array<double, 8> u;
  for (double& v : u) v = Uniform01(rng);
  return u;
}

// E[P(any channel)] for one stimulus when q ~ Beta(k p, k (1 - p)):
//   1 - E[(1 - q)^2] + tilt^2 E[min(q, 1 - q)^2].
double AnyChannelMean(double p, double k, double tilt) {
  if (k <= 0) {
    const double m = std::min(p, 1.0 - p);
    return 1.0 - (1.0 - p) * (1.0 - p) + tilt * tilt * m * m;
  }
  const double a = k * p;
  const double b = k * (1.0 - p);
  const double norm = k * (k + 1.0);
  const double second_lower = a * (a + 1.0) / norm;  // E[q^2]
  const double second_upper = b * (b + 1.0) / norm;  // E[(1 - q)^2]
  const double min_sq = second_lower * boost::math::ibeta(a + 2.0, b, 0.5) +
                        second_upper * boost::math::ibetac(a, b + 2.0, 0.5);
  return 1.0 - second_upper + tilt * tilt * min_sq;
}

void CheckLength(const std::vector<double>& v, int max, const char* name) {
  if (static_cast<int>(v.size()) > max) {
    ThrowUsage(std::string("dgp.") + name + " has " + std::to_string(v.size()) +
               " entries but at most " + std::to_string(max) + " are allowed");
  }
}

}  // namespace

void DgpSpec::Validate() const {
  if (n_features < 0) ThrowUsage("dgp.n_features must be >= 0");
  if (!(feature_correlation >= 0 && feature_correlation < 1)) {
    ThrowUsage("dgp.feature_correlation must be in [0, 1)");
  }
  if (respondent_levels < 1 || headline_levels < 1) {
    ThrowUsage("dgp levels must be >= 1");
  }
  if (respondent_levels * headline_levels < 2) ThrowUsage("dgp needs at least two cells");
  CheckLength(false_slope, n_features, "false_slope");
  CheckLength(true_slope, n_features, "true_slope");
  CheckLength(respondent_false, respondent_levels, "respondent_false");
  CheckLength(respondent_true, respondent_levels, "respondent_true");
  CheckLength(respondent_false_x0, respondent_levels, "respondent_false_x0");
  CheckLength(respondent_true_x0, respondent_levels, "respondent_true_x0");
  CheckLength(headline_false, headline_levels, "headline_false");
  CheckLength(headline_true, headline_levels, "headline_true");
  if (n_features == 0 && (!respondent_false_x0.empty() || !respondent_true_x0.empty() ||
                          attrition_slope_x0 != 0)) {
    ThrowUsage("dgp terms in x0 need at least one feature");
  }
  if (!std::isfinite(unit_concentration)) ThrowUsage("dgp.unit_concentration must be finite");
  if (!(channel_tilt >= 0 && channel_tilt <= 1)) {
    ThrowUsage("dgp.channel_tilt must be in [0, 1]");
  }
  if (!(attrition_rate >= 0 && attrition_rate < 1)) {
    ThrowUsage("dgp.attrition_rate must be in [0, 1)");
  }
}

CovariateSchema DgpSpec::Schema() const {
  CovariateSchema schema;
  for (int j = 0; j < n_features; ++j) {
    CovariateSpec c;
    c.name = "x" + std::to_string(j + 1);
    schema.covariates.push_back(c);
  }
  schema.include_pretest = pretest_feature;
  return schema;
}

DgpSpec DgpSpec::Calibrated() {
  DgpSpec d;
  d.false_slope = {0.30, -0.20, 0.10, 0.0};
  d.true_slope = {0.15, 0.10, 0.0, -0.10};
  d.respondent_false = {0, -0.12, -0.18, -0.10, -0.06, -0.14, -0.04, -0.08};
  d.respondent_true = {0, 0.02, -0.03, 0.04, 0.0, 0.03, -0.02, 0.01};
  d.headline_false = {0, -0.10, -0.15, -0.06, -0.03};
  d.headline_true = {0, 0.01, -0.04, 0.02, 0.0};
  d.respondent_false_x0 = {0, 0.10, -0.15, 0.05, -0.10, 0.12, -0.05, 0.0};
  d.respondent_true_x0 = {0, 0.0, 0.02, -0.02, 0.0, 0.01, 0.0, 0.0};
  return d;
}

DgpSpec DgpSpec::Null(int n_features) {
  DgpSpec d;
  d.n_features = n_features;
  d.false_slope.assign(n_features, 0.2);
  d.true_slope.assign(n_features, 0.1);
  return d;
}

ShareProbabilities CellProbabilities(const DgpSpec& dgp, std::span<const double> x,
                                     int respondent, int headline) {
  if (respondent < 0 || respondent >= dgp.respondent_levels || headline < 0 ||
      headline >= dgp.headline_levels) {
    ThrowData("cell outside the dgp factorial");
  }
  if (static_cast<int>(x.size()) < dgp.n_features) ThrowData("too few features for dgp");
  double zf = dgp.false_intercept + At(dgp.respondent_false, respondent) +
              At(dgp.headline_false, headline);
  double zt = dgp.true_intercept + At(dgp.respondent_true, respondent) +
              At(dgp.headline_true, headline);
  for (int j = 0; j < dgp.n_features; ++j) {
    zf += At(dgp.false_slope, j) * x[j];
    zt += At(dgp.true_slope, j) * x[j];
  }
  if (dgp.n_features > 0) {
    zf += At(dgp.respondent_false_x0, respondent) * x[0];
    zt += At(dgp.respondent_true_x0, respondent) * x[0];
  }
  return {Logistic(zf), Logistic(zt)};
}

double OracleMean(const DgpSpec& dgp, std::span<const double> x, int respondent,
                  int headline, OutcomeMeasure measure, const ResponseWeights& weights) {
  const ShareProbabilities p = CellProbabilities(dgp, x, respondent, headline);
  switch (measure) {
    case OutcomeMeasure::kDiscernment:
      return 2.0 * kStimuliPerType *
             (weights.w_false * p.false_share + weights.w_true * p.true_share);
    case OutcomeMeasure::kFalseCount:
      return p.false_share;
    case OutcomeMeasure::kTrueCount:
      return p.true_share;
    case OutcomeMeasure::kFalseAny:
      return AnyChannelMean(p.false_share, dgp.unit_concentration, dgp.channel_tilt);
    case OutcomeMeasure::kTrueAny:
      return AnyChannelMean(p.true_share, dgp.unit_concentration, dgp.channel_tilt);
  }
  ThrowData("unknown outcome measure");
}

CovariateContext PopulationUnit::Context(const DgpSpec& dgp) const {
  CovariateContext c;
  c.features = x;
  const OutcomeRecord pre = OutcomeRecord::FromDetail(pretest, false);
  c.pretest_false_stratum = pre.m_pre;
  c.pretest_true_stratum = pre.t_pre;
  if (dgp.pretest_feature) {
    c.features.push_back(pre.m_pre);
    c.features.push_back(pre.t_pre);
  }
  return c;
}

std::vector<PopulationUnit> GeneratePopulation(const DgpSpec& dgp, std::int64_t n,
                                               std::uint64_t stream) {
  dgp.Validate();
  if (n < 0) ThrowUsage("population size must be >= 0");
  std::vector<PopulationUnit> units(n);
  const double keep_logit = dgp.attrition_rate > 0
                                ? std::log((1.0 - dgp.attrition_rate) / dgp.attrition_rate)
                                : 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    PopulationUnit& u = units[i];
    Rng rng(DeriveSeed(dgp.seed, stream, static_cast<std::uint64_t>(i)));
    u.unit_id = static_cast<std::int64_t>(stream) * kStreamIdStride + i + 1;
    u.x = DrawFeatures(dgp, rng);
    u.latent_false = Uniform01(rng);
    u.latent_true = Uniform01(rng);
    const ShareProbabilities p = CellProbabilities(dgp, u.x, 0, 0);
    FillPhase(u.pretest, Phase::kPre, UnitShare(dgp, p.false_share, u.latent_false),
              UnitShare(dgp, p.true_share, u.latent_true), dgp.channel_tilt, Uniforms8(rng));
    const double stay = Uniform01(rng);
    if (dgp.attrition_rate > 0) {
      const double slope = dgp.n_features > 0 ? dgp.attrition_slope_x0 * u.x[0] : 0.0;
      u.completes = stay < Logistic(keep_logit + slope);
    }
    u.outcome_seed = rng();
  }
  return units;
}

ChannelDetail DrawPosttest(const DgpSpec& dgp, const PopulationUnit& unit,
                           int respondent, int headline) {
  const ShareProbabilities p = CellProbabilities(dgp, unit.x, respondent, headline);
  Rng rng(unit.outcome_seed);
  ChannelDetail detail{};
  FillPhase(detail, Phase::kPost, UnitShare(dgp, p.false_share, unit.latent_false),
            UnitShare(dgp, p.true_share, unit.latent_true), dgp.channel_tilt,
            Uniforms8(rng));
  return detail;
}

double PopulationMean(const DgpSpec& dgp, int respondent, int headline,
                      OutcomeMeasure measure, const ResponseWeights& weights,
                      int n_draws, std::uint64_t stream) {
  if (n_draws < 1) ThrowUsage("n_draws must be >= 1");
  Rng rng(DeriveSeed(stream, 0x9e11));
  double sum = 0;
  for (int i = 0; i < n_draws; ++i) {
    const std::vector<double> x = DrawFeatures(dgp, rng);
    sum += OracleMean(dgp, x, respondent, headline, measure, weights);
  }
  return sum / n_draws;
}

Design Design::Learning(const DgpSpec& dgp, BanditConfig bandit, BatchSchedule schedule) {
  Design d;
  d.space = dgp.Arms();
  for (const Arm& a : d.space.arms()) d.cells.push_back(a);
  d.bandit = std::move(bandit);
  d.schedule = schedule;
  return d;
}

Design Design::Fixed(ArmSpace space, std::vector<double> probabilities) {
  Design d;
  for (const Arm& a : space.arms()) d.cells.push_back(a);
  d.space = std::move(space);
  d.bandit.mode = AssignmentMode::kFixed;
  d.bandit.fixed_probabilities = std::move(probabilities);
  d.bandit.probability_floor = 0;
  d.schedule = {std::numeric_limits<int>::max(), 1, 0};
  return d;
}

Design Design::Evaluation(int headline_a, int headline_b, int respondent_a,
                          int respondent_b, std::shared_ptr<const Policy> targeted,
                          ArmSpace policy_arms) {
  if (!targeted) ThrowUsage("evaluation design needs a targeted policy");
  if (targeted->n_arms() != policy_arms.size()) {
    ThrowUsage("targeted policy does not match its arm space");
  }
  int sentinel = 0;
  for (const Arm& a : policy_arms.arms()) {
    sentinel = std::max(sentinel, a.respondent_level + 1);
  }
  sentinel = std::max({sentinel, respondent_a + 1, respondent_b + 1});
  const std::vector<std::pair<std::string, Arm>> arms = {
      {"control", {0, 0}},
      {"headline_" + std::to_string(headline_a), {0, headline_a}},
      {"headline_" + std::to_string(headline_b), {0, headline_b}},
      {"respondent_" + std::to_string(respondent_a), {respondent_a, 0}},
      {"respondent_" + std::to_string(respondent_b), {respondent_b, 0}},
      {"targeted", {sentinel, 0}},
  };
  Design d = Fixed(ArmSpace::Flat(arms), std::vector<double>(arms.size(), 1.0 / 6.0));
  d.cells.back() = std::nullopt;
  d.targeted = std::move(targeted);
  d.policy_arms = std::move(policy_arms);
  return d;
}

Arm ResolveCell(const Design& design, int arm, std::span<const double> x) {
  const auto& cell = design.cells.at(arm);
  if (cell) return *cell;
  return design.policy_arms.arm(design.targeted->Assign(x));
}

SimulationResult SimulateExperiment(const DgpSpec& dgp, const Design& design,
                                    std::int64_t n, std::uint64_t population_stream) {
  if (static_cast<int>(design.cells.size()) != design.space.size()) {
    ThrowUsage("design cells do not match its arm space");
  }
  SimulationResult result;
  result.population = GeneratePopulation(dgp, n, population_stream);

  ExperimentConfig config;
  config.arms = design.space;
  config.schema = dgp.Schema();
  config.schedule = design.schedule;
  config.bandit = design.bandit;
  config.objective = design.objective;
  std::ostringstream log;
  Experiment experiment(config, &log);

  result.realized_cells.reserve(n);
  for (const PopulationUnit& unit : result.population) {
    const CovariateContext context = unit.Context(dgp);
    const AssignmentEvent event = experiment.Assign(unit.unit_id, context);
    const Arm cell = ResolveCell(design, design.space.IndexOf(event.arm), context.features);
    result.realized_cells.push_back(cell);
    ChannelDetail detail = DrawPosttest(dgp, unit, cell.respondent_level, cell.headline_level);
    for (int i = 0; i < kChannelDetailSize / 2; ++i) detail[i] = unit.pretest[i];
    if (!unit.completes) {
      for (int i = kChannelDetailSize / 2; i < kChannelDetailSize; ++i) detail[i] = 0;
    }
    OutcomeRecord outcome = OutcomeRecord::FromDetail(detail, unit.completes);
    experiment.RecordOutcome(unit.unit_id, outcome);
  }
  experiment.Close();
  result.dataset = experiment.Export();
  result.posterior_updates = experiment.posterior_updates();
  result.event_log = log.str();
  return result;
}

RegretReport MakeRegretReport(const SimulationResult& result, const DgpSpec& dgp,
                              const Design& design) {
  const auto& units = result.dataset.units;
  if (units.size() != result.population.size() ||
      units.size() != result.realized_cells.size()) {
    ThrowData("simulation result does not match its population");
  }
  RegretReport report;
  if (units.empty()) return report;
  const int k = design.space.size();
  std::vector<double> share_sum, share_n;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const PopulationUnit& pop = result.population[i];
    if (pop.unit_id != units[i].unit_id) ThrowData("simulation result is out of order");
    const std::vector<double>& features = units[i].context.features;
    const Arm& realized = result.realized_cells[i];
    report.in_experiment_mean +=
        OracleMean(dgp, pop.x, realized.respondent_level, realized.headline_level,
                   OutcomeMeasure::kDiscernment, design.objective);
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    double uniform = 0;
    for (int w = 0; w < k; ++w) {
      const Arm cell = ResolveCell(design, w, features);
      const double v = OracleMean(dgp, pop.x, cell.respondent_level, cell.headline_level,
                                  OutcomeMeasure::kDiscernment, design.objective);
      uniform += v / k;
      if (v > best_value) {
        best_value = v;
        best = w;
      }
    }
    report.uniform_counterfactual_true += uniform;
    const int b = units[i].batch;
    if (b >= static_cast<int>(share_sum.size())) {
      share_sum.resize(b + 1, 0.0);
      share_n.resize(b + 1, 0.0);
    }
    share_sum[b] += units[i].propensities[best];
    share_n[b] += 1;
  }
  report.in_experiment_mean /= units.size();
  report.uniform_counterfactual_true /= units.size();
  for (std::size_t b = 0; b < share_sum.size(); ++b) {
    report.best_arm_share_by_batch.push_back(share_n[b] > 0 ? share_sum[b] / share_n[b]
                                                            : 0.0);
  }
  return report;
}

namespace {

ArmSpace CoverageSpace(const std::vector<Arm>& cells) {
  std::vector<std::pair<std::string, Arm>> arms;
  for (const Arm& a : cells) {
    arms.push_back({"r" + std::to_string(a.respondent_level) + "_h" +
                        std::to_string(a.headline_level),
                    a});
  }
  return ArmSpace::Flat(std::move(arms));
}

struct Tally {
  std::int64_t n = 0;
  std::int64_t covered = 0;
  double width = 0;
  double bias = 0;

  void Add(const Estimate& e, double truth) {
    ++n;
    if (e.ci_lo <= truth && truth <= e.ci_hi) ++covered;
    width += e.ci_hi - e.ci_lo;
    bias += e.value - truth;
  }
};

}  // namespace

std::vector<CoverageRow> CoverageExperiment(const DgpSpec& dgp, const CoverageConfig& config) {
  dgp.Validate();
  if (config.n_reps < 1) ThrowUsage("coverage n_reps must be >= 1");
  if (config.n_per_rep < 2) ThrowUsage("coverage n_per_rep must be >= 2");
  if (config.cells.size() < 2) ThrowUsage("coverage needs at least two cells");
  bool want_uniform = false, want_aipw = false, want_naive = false;
  for (const std::string& name : config.estimators) {
    if (name == "aipw_uniform") {
      want_uniform = true;
    } else if (name == "aipw_stabilized_blts") {
      want_aipw = true;
    } else if (name == "naive_blts") {
      want_naive = true;
    } else {
      ThrowUsage("unknown coverage estimator: " + name);
    }
  }
  const ArmSpace space = CoverageSpace(config.cells);
  const int k = space.size();
  std::vector<double> truth(k);
  for (int w = 0; w < k; ++w) {
    truth[w] = PopulationMean(dgp, config.cells[w].respondent_level,
                              config.cells[w].headline_level, config.measure,
                              config.weights, 200000);
  }

  EstimationConfig uniform_est;
  uniform_est.measures = {config.measure};
  uniform_est.weights = config.weights;
  EstimationConfig adaptive_est = uniform_est;
  adaptive_est.mu.mode = FitMode::kHistorical;
  adaptive_est.adaptive = AdaptiveScheme::kStabilizedVariance;

  Tally uniform_tally, aipw_tally, naive_tally;
  for (int rep = 0; rep < config.n_reps; ++rep) {
    DgpSpec rep_dgp = dgp;
    rep_dgp.seed = DeriveSeed(config.seed, static_cast<std::uint64_t>(rep), 1);
    if (want_uniform) {
      Design design = Design::Fixed(space, std::vector<double>(k, 1.0 / k));
      design.bandit.seed = DeriveSeed(config.seed, static_cast<std::uint64_t>(rep), 2);
      const SimulationResult sim = SimulateExperiment(rep_dgp, design, config.n_per_rep);
      const ScoreTable scores = ScoreDataset(sim.dataset, config.measure, uniform_est);
      for (int w = 0; w < k; ++w) uniform_tally.Add(MeanResponse(scores, w), truth[w]);
    }
    if (want_aipw || want_naive) {
      Design design;
      design.space = space;
      for (const Arm& a : space.arms()) design.cells.push_back(a);
      design.bandit = config.bandit;
      design.bandit.mode = AssignmentMode::kThompson;
      design.bandit.seed = DeriveSeed(config.seed, static_cast<std::uint64_t>(rep), 3);
      design.schedule = config.schedule;
      design.objective = config.weights;
      const SimulationResult sim =
          SimulateExperiment(rep_dgp, design, config.n_per_rep, 1);
      if (want_aipw) {
        const ScoreTable scores = ScoreDataset(sim.dataset, config.measure, adaptive_est);
        for (int w = 0; w < k; ++w) aipw_tally.Add(MeanResponse(scores, w), truth[w]);
      }
      if (want_naive) {
        const Dataset completed = sim.dataset.Completed();
        const std::vector<double> y = Responses(completed, config.measure, config.weights);
        for (int w = 0; w < k; ++w) {
          std::vector<double> arm_y;
          for (std::size_t i = 0; i < completed.size(); ++i) {
            if (completed.units[i].arm == w) arm_y.push_back(y[i]);
          }
          if (arm_y.size() < 2) {
            ++naive_tally.n;
            continue;
          }
          const std::vector<double> ones(arm_y.size(), 1.0);
          naive_tally.Add(HajekMean(arm_y, ones), truth[w]);
        }
      }
    }
  }

  std::vector<CoverageRow> rows;
  auto emit = [&](const std::string& name, const Tally& t) {
    CoverageRow row;
    row.estimator = name;
    row.n_reps = config.n_reps;
    row.n_intervals = t.n;
    if (t.n > 0) {
      row.coverage = static_cast<double>(t.covered) / t.n;
      row.mean_width = t.width / t.n;
      row.mean_bias = t.bias / t.n;
    }
    rows.push_back(row);
  };
  if (want_uniform) emit("aipw_uniform", uniform_tally);
  if (want_aipw) emit("aipw_stabilized_blts", aipw_tally);
  if (want_naive) emit("naive_blts", naive_tally);
  return rows;
}

std::string CoverageCsv(const std::vector<CoverageRow>& rows) {
  std::string out = "estimator,n_reps,n_intervals,coverage,mean_width,mean_bias\n";
  for (const CoverageRow& r : rows) {
    out += r.estimator + "," + std::to_string(r.n_reps) + "," +
           std::to_string(r.n_intervals) + "," + FormatDouble(r.coverage) + "," +
           FormatDouble(r.mean_width) + "," + FormatDouble(r.mean_bias) + "\n";
  }
  return out;
}

PipelineResult RunPipeline(const DgpSpec& dgp, const PipelineConfig& config) {
  PipelineResult result;
  const Design learning = Design::Learning(dgp, config.bandit, config.schedule);
  result.learning = SimulateExperiment(dgp, learning, config.learning_n, 0);

  const Dataset completed = result.learning.dataset.Completed();
  if (completed.size() == 0) ThrowData("learning stage produced no completed units");
  const std::vector<double> y =
      Responses(completed, OutcomeMeasure::kDiscernment, learning.objective);
  std::shared_ptr<const ArmPredictor> model =
      FitArmPredictor(MakeTrainingSet(completed, y), config.policy_learner);
  std::vector<int> subset;
  for (int r : config.policy_respondent_levels) {
    const int index = learning.space.IndexOf({r, 0});
    if (index < 0) ThrowUsage("policy respondent level outside the learning arms");
    subset.push_back(index);
  }
  result.targeted = std::make_shared<const Policy>(
      LearnGreedyPolicy(model, subset, learning.space.size()));

  Design evaluation =
      Design::Evaluation(config.headline_a, config.headline_b, config.respondent_a,
                         config.respondent_b, result.targeted, learning.space);
  evaluation.bandit.seed = DeriveSeed(config.bandit.seed, 0xe7a1);
  result.evaluation = SimulateExperiment(dgp, evaluation, config.evaluation_n, 1);

  result.on_policy =
      OnPolicyShare(result.learning.dataset, *result.targeted, learning.space, true);
  result.evaluation_estimates =
      EstimateTable(result.evaluation.dataset, config.evaluation_estimation);
  const ScoreTable learning_scores = ScoreDataset(
      result.learning.dataset, OutcomeMeasure::kDiscernment, config.learning_estimation);
  result.uniform_counterfactual = UniformCounterfactualValue(learning_scores);
  return result;
}

}  // namespace adaptex
