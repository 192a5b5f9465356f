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

#include "adaptex/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "adaptex/config.h"
#include "adaptex/dataset.h"
#include "adaptex/estimators.h"
#include "adaptex/experiment.h"
#include "adaptex/policy.h"
#include "adaptex/service.h"
#include "adaptex/sim.h"
#include "json.hpp"

namespace adaptex {

using nlohmann::json;

namespace {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel LogLevelFromEnv() {
  const char* v = std::getenv("ADAPTEX_LOG_LEVEL");
  if (!v) return LogLevel::kWarn;
  const std::string s(v);
  if (s == "error") return LogLevel::kError;
  if (s == "info") return LogLevel::kInfo;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

struct Context {
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  LogLevel level = LogLevel::kWarn;

  void Log(LogLevel at, const std::string& message) const {
    if (at <= level) *err << message << '\n';
  }

  const json& Section(const char* key) const {
    static const json kEmpty = json::object();
    return config.contains(key) ? config[key] : kEmpty;
  }

  std::uint64_t RequireSeed() const {
    if (!seed) ThrowUsage("a seed is required (--seed or config key 'seed')");
    return *seed;
  }

  std::string Path(const std::string& name) const { return (out_dir / name).string(); }

  void Write(const std::string& name, const std::string& contents) const {
    WriteFileAtomically(Path(name), contents);
    Log(LogLevel::kInfo, "wrote " + Path(name));
  }

  std::string InputPath(const char* key) const {
    if (!config.contains(key) || !config[key].is_string()) {
      ThrowUsage(std::string("config key '") + key + "' (input path) is required");
    }
    const std::string path = config[key].get<std::string>();
    if (!std::filesystem::exists(path)) ThrowUsage("input file does not exist: " + path);
    return path;
  }
};

std::string DatasetCsv(const Dataset& data) {
  std::ostringstream s;
  WriteDatasetCsv(data, s);
  return s.str();
}

std::string BatchShareCsv(const std::vector<BatchShare>& rows) {
  std::string out = "batch,n,share\n";
  for (const BatchShare& r : rows) {
    out += (r.batch < 0 ? std::string("all") : std::to_string(r.batch)) + "," +
           std::to_string(r.n) + "," + FormatDouble(r.share) + "\n";
  }
  return out;
}

json EstimateJson(const Estimate& e) {
  return {{"estimate", e.value}, {"se", e.std_error}, {"ci_lo", e.ci_lo},
          {"ci_hi", e.ci_hi},    {"n", e.n}};
}

int CmdSimulate(const Context& ctx) {
  const std::uint64_t seed = ctx.RequireSeed();
  DgpSpec dgp = DgpFromJson(ctx.Section("dgp"));
  dgp.seed = DeriveSeed(seed, 1);
  BanditConfig bandit = BanditFromJson(ctx.Section("bandit"));
  bandit.seed = DeriveSeed(seed, 2);
  const BatchSchedule schedule = ScheduleFromJson(ctx.Section("schedule"));
  const ResponseWeights objective = WeightsFromJson(ctx.Section("objective"));
  const json& sim = ctx.Section("simulate");
  const std::string design = sim.value("design", "pipeline");

  if (design == "pipeline") {
    PipelineConfig pc;
    pc.learning_n = sim.value("n", pc.learning_n);
    pc.evaluation_n = sim.value("evaluation_n", pc.evaluation_n);
    pc.bandit = bandit;
    pc.schedule = schedule;
    pc.policy_respondent_levels =
        sim.value("policy_respondent_levels", pc.policy_respondent_levels);
    pc.policy_learner = LearnerFromJson(sim.value("policy_learner", json::object()));
    pc.policy_learner.seed = DeriveSeed(seed, 3);
    pc.headline_a = sim.value("headline_a", pc.headline_a);
    pc.headline_b = sim.value("headline_b", pc.headline_b);
    pc.respondent_a = sim.value("respondent_a", pc.respondent_a);
    pc.respondent_b = sim.value("respondent_b", pc.respondent_b);
    pc.learning_estimation =
        EstimationFromJson(sim.value("learning_estimation", json::object()));
    pc.evaluation_estimation = EstimationFromJson(ctx.Section("estimation"));
    const PipelineResult r = RunPipeline(dgp, pc);
    ctx.Write("learning_log.jsonl", r.learning.event_log);
    ctx.Write("learning.csv", DatasetCsv(r.learning.dataset));
    ctx.Write("evaluation_log.jsonl", r.evaluation.event_log);
    ctx.Write("evaluation.csv", DatasetCsv(r.evaluation.dataset));
    ctx.Write("targeted_policy.json", r.targeted->ToJson().dump(2) + "\n");
    ctx.Write("on_policy.csv", BatchShareCsv(r.on_policy));
    ctx.Write("evaluation_estimates.csv", EstimateTableCsv(r.evaluation_estimates));
    const json summary = {{"learning_units", r.learning.dataset.size()},
                          {"evaluation_units", r.evaluation.dataset.size()},
                          {"posterior_updates", r.learning.posterior_updates},
                          {"uniform_counterfactual", EstimateJson(r.uniform_counterfactual)}};
    ctx.Write("summary.json", summary.dump(2) + "\n");
    return 0;
  }

  Design d;
  if (design == "learning") {
    d = Design::Learning(dgp, bandit, schedule);
  } else if (design == "uniform") {
    const ArmSpace arms = dgp.Arms();
    d = Design::Fixed(arms, std::vector<double>(arms.size(), 1.0 / arms.size()));
    d.bandit.seed = bandit.seed;
  } else {
    ThrowUsage("unknown simulate.design: " + design);
  }
  d.objective = objective;
  const std::int64_t n = sim.value("n", std::int64_t{4761});
  const SimulationResult r = SimulateExperiment(dgp, d, n);
  const RegretReport regret = MakeRegretReport(r, dgp, d);
  ctx.Write("log.jsonl", r.event_log);
  ctx.Write("dataset.csv", DatasetCsv(r.dataset));
  const json report = {{"units", r.dataset.size()},
                       {"posterior_updates", r.posterior_updates},
                       {"in_experiment_mean", regret.in_experiment_mean},
                       {"uniform_counterfactual_true", regret.uniform_counterfactual_true},
                       {"best_arm_share_by_batch", regret.best_arm_share_by_batch}};
  ctx.Write("regret.json", report.dump(2) + "\n");
  return 0;
}

int CmdEstimate(const Context& ctx) {
  const Dataset data = LoadDatasetCsv(ctx.InputPath("dataset"));
  const EstimationConfig config = EstimationFromJson(ctx.Section("estimation"));
  ctx.Write("estimates.csv", EstimateTableCsv(EstimateTable(data, config)));
  return 0;
}

int CmdSweep(const Context& ctx) {
  const Dataset data = LoadDatasetCsv(ctx.InputPath("dataset"));
  const EstimationConfig config = EstimationFromJson(ctx.Section("estimation"));
  const json& sweep = ctx.Section("sweep");
  const auto wf = sweep.value("w_false", std::vector<double>{-1.0, -0.75, -0.5, -0.25, -0.1});
  const auto wt = sweep.value("w_true", std::vector<double>{0.1, 0.25, 0.5, 0.75, 1.0});
  std::vector<ResponseWeights> grid;
  for (double f : wf) {
    for (double t : wt) grid.push_back({f, t});
  }
  ctx.Write("sweep.csv", SweepCsv(WeightSweep(data, grid, config)));
  return 0;
}

int CmdPolicy(const Context& ctx) {
  const Dataset learning = LoadDatasetCsv(ctx.InputPath("dataset"));
  const json& pj = ctx.Section("policy");
  const EstimationConfig estimation = EstimationFromJson(ctx.Section("estimation"));
  LearnerOptions learner = LearnerFromJson(pj.value("learner", json::object()));
  if (ctx.seed) learner.seed = DeriveSeed(*ctx.seed, 3);
  const std::string kind = pj.value("kind", "greedy");

  std::optional<Policy> policy;
  if (kind == "greedy") {
    std::vector<int> subset = pj.value("arm_subset", std::vector<int>{});
    if (subset.empty()) {
      for (int k = 0; k < learning.n_arms(); ++k) subset.push_back(k);
    }
    const Dataset completed = learning.Completed();
    if (completed.size() == 0) ThrowData("dataset has no completed units");
    const std::vector<double> y =
        Responses(completed, OutcomeMeasure::kDiscernment, estimation.weights);
    std::shared_ptr<const ArmPredictor> model =
        FitArmPredictor(MakeTrainingSet(completed, y), learner);
    policy = LearnGreedyPolicy(model, subset, learning.n_arms());
  } else if (kind == "restricted") {
    const auto arms = pj.value("arms", std::vector<int>{});
    if (arms.size() != 2) ThrowUsage("policy.arms must list two arm indices");
    RestrictedPolicyOptions options;
    options.measure = ParseOutcomeMeasure(pj.value("measure", std::string("false_any")));
    if (pj.contains("lower_is_better")) {
      options.lower_is_better = pj["lower_is_better"].get<bool>();
    }
    options.scoring = estimation;
    options.cate = learner;
    policy = LearnRestrictedPolicy(learning, arms[0], arms[1], options);
  } else {
    ThrowUsage("unknown policy.kind: " + kind);
  }
  ctx.Write("policy.json", policy->ToJson().dump(2) + "\n");

  const PolicyApplication applied = ApplyPolicy(*policy, learning);
  json report = {{"kind", kind}, {"learning_shares", json::object()}};
  for (int k = 0; k < learning.n_arms(); ++k) {
    report["learning_shares"][learning.arms.name(k)] = applied.shares[k];
  }
  if (pj.contains("evaluation_dataset")) {
    const std::string path = pj["evaluation_dataset"].get<std::string>();
    if (!std::filesystem::exists(path)) ThrowUsage("input file does not exist: " + path);
    const Dataset eval = LoadDatasetCsv(path);
    if (!(eval.arms == learning.arms)) ThrowData("evaluation dataset has different arms");
    const OutcomeMeasure measure = kind == "restricted"
                                       ? ParseOutcomeMeasure(pj.value("measure", std::string("false_any")))
                                       : OutcomeMeasure::kDiscernment;
    const ScoreTable scores = ScoreDataset(eval, measure, estimation);
    const Dataset scored = eval.Completed();
    const PolicyApplication on_eval = ApplyPolicy(*policy, scored);
    report["value"] = EstimateJson(EvaluateAssignments(scores, on_eval.assignments));
    report["measure"] = OutcomeMeasureName(measure);
    json constants = json::object();
    for (int k = 0; k < eval.n_arms(); ++k) {
      const std::vector<int> all_k(scored.size(), k);
      constants[eval.arms.name(k)] = {
          {"value", EstimateJson(MeanResponse(scores, k))},
          {"overlap", PolicyOverlap(on_eval.assignments, all_k)}};
    }
    report["constant_arms"] = constants;
  }
  if (kind == "greedy") {
    std::string csv = BatchShareCsv(OnPolicyShare(learning, *policy, learning.arms, true));
    ctx.Write("on_policy.csv", csv);
  }
  ctx.Write("policy_report.json", report.dump(2) + "\n");
  return 0;
}

int CmdRate(const Context& ctx) {
  const Dataset data = LoadDatasetCsv(ctx.InputPath("dataset"));
  const json& rj = ctx.Section("rate");
  if (!rj.contains("policy")) ThrowUsage("config key 'rate.policy' is required");
  const std::string policy_path = rj["policy"].get<std::string>();
  if (!std::filesystem::exists(policy_path)) {
    ThrowUsage("input file does not exist: " + policy_path);
  }
  const json pj = json::parse(ReadFile(policy_path), nullptr, false);
  if (pj.is_discarded()) ThrowData("policy file is not JSON: " + policy_path);
  const Policy policy = Policy::FromJson(pj);
  if (policy.kind() != Policy::Kind::kRestricted) {
    ThrowUsage("rate needs a restricted policy");
  }
  if (policy.n_arms() != data.n_arms()) ThrowData("policy does not match the dataset arms");
  const EstimationConfig estimation = EstimationFromJson(ctx.Section("estimation"));
  const OutcomeMeasure measure = estimation.measures.front();
  const ScoreTable scores = ScoreDataset(data, measure, estimation);
  const Dataset scored = data.Completed();
  const std::vector<double> priorities = RestrictedPriorities(policy, scored);
  TocOptions options = TocFromJson(rj);
  options.seed = ctx.seed ? DeriveSeed(*ctx.seed, 4) : 0;
  // Benefit is oriented so that larger TOC values favor the prioritized units.
  int first = policy.first_arm(), second = policy.second_arm();
  if (policy.lower_is_better()) std::swap(first, second);
  const TocCurve curve = TocRate(scores, first, second, priorities, options);
  ctx.Write("toc.csv", TocCsv(curve));
  const json summary = {{"measure", OutcomeMeasureName(measure)},
                        {"weighting", RateWeightingName(curve.weighting)},
                        {"constant_priorities", curve.constant_priorities},
                        {"rate", EstimateJson(curve.rate)}};
  ctx.Write("rate.json", summary.dump(2) + "\n");
  return 0;
}

int CmdCoverage(const Context& ctx) {
  const std::uint64_t seed = ctx.RequireSeed();
  DgpSpec dgp = DgpFromJson(ctx.Section("dgp"));
  CoverageConfig config = CoverageFromJson(ctx.Section("coverage"));
  config.bandit = BanditFromJson(ctx.Section("bandit"));
  config.weights = WeightsFromJson(ctx.Section("objective"));
  config.seed = seed;
  ctx.Write("coverage.csv", CoverageCsv(CoverageExperiment(dgp, config)));
  return 0;
}

int CmdServe(const Context& ctx) {
  const json& sj = ctx.Section("serve");
  ExperimentConfig config;
  config.arms = ArmSpaceFromJson(sj.value("arms", json{{"factorial", {8, 5}}}));
  config.schema = SchemaFromJson(sj.value("schema", json::object()));
  config.schedule = ScheduleFromJson(ctx.Section("schedule"));
  config.bandit = BanditFromJson(ctx.Section("bandit"));
  config.bandit.seed = ctx.RequireSeed();
  config.objective = WeightsFromJson(ctx.Section("objective"));
  const std::string log_path = sj.value("log", ctx.Path("events.jsonl"));

  std::unique_ptr<Experiment> experiment;
  std::ofstream sink;
  if (std::filesystem::exists(log_path)) {
    // Replayed lines are rewritten to a fresh file that then replaces the log;
    // the open stream keeps appending to it after the rename.
    std::istringstream previous(ReadFile(log_path));
    const std::string rewrite = log_path + ".tmp";
    sink.open(rewrite, std::ios::trunc);
    experiment = Experiment::Replay(config, previous, true, &sink);
    std::filesystem::rename(rewrite, log_path);
    ctx.Log(LogLevel::kInfo, "replayed " + log_path);
  } else {
    sink.open(log_path, std::ios::trunc);
    experiment = std::make_unique<Experiment>(config, &sink);
  }
  if (!sink) ThrowUsage("cannot open event log: " + log_path);
  const std::string host = sj.value("host", std::string("127.0.0.1"));
  const int port = sj.value("port", 8080);
  ctx.Log(LogLevel::kInfo, "serving on " + host + ":" + std::to_string(port));
  Serve(*experiment, host, port);
  return 0;
}

int ErrorLine(std::ostream& err, ErrorKind kind, const std::string& message) {
  const char* name = kind == ErrorKind::kUsage  ? "usage"
                     : kind == ErrorKind::kData ? "data"
                                                : "internal";
  err << json{{"error", name}, {"message", message}}.dump() << '\n';
  return static_cast<int>(kind);
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive experimentation engine: simulate, serve, estimate and evaluate "
               "policies for multi-arm survey experiments."};
  app.require_subcommand(1);
  app.footer(ConfigKeysHelp() +
             "\nEnvironment: ADAPTEX_LOG_LEVEL = error | warn | info | debug.\n"
             "Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error.");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate an experiment from a DGP"},
      {"serve", "run the HTTP assignment service"},
      {"estimate", "estimate table from a dataset"},
      {"policy", "learn a targeting policy"},
      {"rate", "TOC curve and RATE for a restricted policy"},
      {"sweep", "discernment weight sweep"},
      {"coverage", "confidence-interval coverage study"},
  };
  for (const auto& [name, doc] : commands) {
    CLI::App* sub = app.add_subcommand(name, doc);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->footer(ConfigKeysHelp());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    return ErrorLine(err, ErrorKind::kUsage, e.what());
  }

  const CLI::App* sub = app.get_subcommands().front();
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  ctx.level = LogLevelFromEnv();
  try {
    if (!config_path.empty()) ctx.config = LoadConfigFile(config_path);
    if (ctx.config.contains("seed")) ctx.seed = ctx.config["seed"].get<std::uint64_t>();
    if (seed) ctx.seed = seed;
    if (ctx.config.contains("out")) ctx.out_dir = ctx.config["out"].get<std::string>();
    if (!out_dir.empty()) ctx.out_dir = out_dir;
    std::filesystem::create_directories(ctx.out_dir);

    const std::string name = sub->get_name();
    if (name == "simulate") return CmdSimulate(ctx);
    if (name == "serve") return CmdServe(ctx);
    if (name == "estimate") return CmdEstimate(ctx);
    if (name == "policy") return CmdPolicy(ctx);
    if (name == "rate") return CmdRate(ctx);
    if (name == "sweep") return CmdSweep(ctx);
    if (name == "coverage") return CmdCoverage(ctx);
    return ErrorLine(err, ErrorKind::kUsage, "unknown subcommand " + name);
  } catch (const Error& e) {
    return ErrorLine(err, e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return ErrorLine(err, ErrorKind::kUsage, std::string("config: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return ErrorLine(err, ErrorKind::kData, e.what());
  } catch (const std::exception& e) {
    return ErrorLine(err, ErrorKind::kInternal, e.what());
  }
}

}  // namespace adaptex
