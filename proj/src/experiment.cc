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

#include "adaptex/experiment.h"

#include <istream>
#include <ostream>

#include "json.hpp"

namespace adaptex {

using nlohmann::json;

void BatchSchedule::Validate() const {
  if (first_batch_size < 1 || subsequent_batch_size < 1) {
    ThrowUsage("schedule batch sizes must be >= 1");
  }
  if (max_units < 0) ThrowUsage("schedule.max_units must be >= 0");
}

int BatchSchedule::BatchOf(std::int64_t position) const {
  if (position < first_batch_size) return 0;
  return 1 + static_cast<int>((position - first_batch_size) / subsequent_batch_size);
}

std::int64_t BatchSchedule::BatchStart(int batch) const {
  if (batch <= 0) return 0;
  return first_batch_size + static_cast<std::int64_t>(batch - 1) * subsequent_batch_size;
}

void ExperimentConfig::Validate() const {
  if (arms.size() < 2) ThrowUsage("experiment needs at least two arms");
  schedule.Validate();
  bandit.Validate(arms.size());
  objective.Validate();
}

namespace {

json ContextToJson(const CovariateContext& c) {
  return json{{"features", c.features},
              {"pretest_false_stratum", c.pretest_false_stratum},
              {"pretest_true_stratum", c.pretest_true_stratum}};
}

CovariateContext ContextFromJson(const json& j) {
  CovariateContext c;
  c.features = j.at("features").get<std::vector<double>>();
  c.pretest_false_stratum = j.at("pretest_false_stratum").get<int>();
  c.pretest_true_stratum = j.at("pretest_true_stratum").get<int>();
  return c;
}

json OutcomeToJson(const OutcomeRecord& o) {
  json j{{"M_pre", o.m_pre},   {"T_pre", o.t_pre},        {"M_post", o.m_post},
         {"T_post", o.t_post}, {"completed", o.completed}};
  if (o.channel_detail) {
    j["channel_detail"] = std::vector<int>(o.channel_detail->begin(),
                                           o.channel_detail->end());
  } else {
    j["channel_detail"] = nullptr;
  }
  return j;
}

OutcomeRecord OutcomeFromJson(const json& j) {
  OutcomeRecord o;
  o.m_pre = j.at("M_pre").get<int>();
  o.t_pre = j.at("T_pre").get<int>();
  o.m_post = j.at("M_post").get<int>();
  o.t_post = j.at("T_post").get<int>();
  o.completed = j.at("completed").get<bool>();
  if (j.contains("channel_detail") && !j["channel_detail"].is_null()) {
    const auto cells = j["channel_detail"].get<std::vector<int>>();
    if (cells.size() != kChannelDetailSize) ThrowData("channel_detail must have 16 cells");
    ChannelDetail d{};
    for (int i = 0; i < kChannelDetailSize; ++i) {
      d[i] = static_cast<std::uint8_t>(cells[i]);
    }
    o.channel_detail = d;
  }
  return o;
}

}  // namespace

std::string AssignmentEventToJson(const AssignmentEvent& e) {
  json j{{"type", "assignment"},
         {"unit_id", e.unit_id},
         {"timestamp", e.timestamp},
         {"batch_index", e.batch_index},
         {"context", ContextToJson(e.context)},
         {"probabilities", e.probabilities},
         {"arm",
          {{"respondent_level", e.arm.respondent_level},
           {"headline_level", e.arm.headline_level}}},
         {"rng_counter", e.rng_counter}};
  return j.dump();
}

std::string OutcomeEventToJson(std::int64_t unit_id, const OutcomeRecord& outcome) {
  json j{{"type", "outcome"}, {"unit_id", unit_id}, {"outcome", OutcomeToJson(outcome)}};
  return j.dump();
}

Experiment::Experiment(ExperimentConfig config, std::ostream* log_sink,
                       Clock clock)
    : config_(std::move(config)), log_sink_(log_sink), clock_(std::move(clock)) {
  config_.Validate();
  posterior_ = std::make_shared<const PosteriorState>(InitState(
      config_.bandit, config_.arms.size(), config_.schema.FeatureCount()));
}

std::vector<double> Experiment::ProbabilitiesLocked(
    const CovariateContext& context) const {
  const int k = config_.arms.size();
  if (config_.bandit.mode == AssignmentMode::kThompson && batch_ == 0) {
    return std::vector<double>(k, 1.0 / k);
  }
  // Keyed on the context so equal contexts in one batch get equal vectors.
  return AssignmentProbabilities(*posterior_, context.features, config_.bandit,
                                 HashFeatures(context.features));
}

void Experiment::AppendLocked(const std::string& line) {
  if (log_sink_) {
    *log_sink_ << line << '\n';
    log_sink_->flush();
  }
}

AssignmentEvent Experiment::Assign(std::int64_t unit_id,
                                   const CovariateContext& context) {
  std::lock_guard lock(mu_);
  if (!open_) ThrowData("experiment is closed");
  if (static_cast<int>(context.features.size()) != config_.schema.FeatureCount()) {
    ThrowData("context does not match the covariate schema");
  }
  if (assignments_.count(unit_id)) {
    ThrowData("unit " + std::to_string(unit_id) + " already assigned");
  }
  if (config_.auto_advance &&
      n_assigned_ >= config_.schedule.BatchStart(batch_ + 1)) {
    AdvanceLocked(false);
  }

  AssignmentEvent e;
  e.unit_id = unit_id;
  e.timestamp = clock_ ? clock_() : n_assigned_;
  e.batch_index = batch_;
  e.context = context;
  e.probabilities = ProbabilitiesLocked(context);
  e.rng_counter = static_cast<std::uint64_t>(n_assigned_);
  Rng rng(DeriveSeed(config_.bandit.seed, 0xa551, e.rng_counter));
  e.arm = config_.arms.arm(DrawAssignment(e.probabilities, rng));

  AppendLocked(AssignmentEventToJson(e));
  ApplyAssignmentLocked(e);
  return e;
}

void Experiment::ApplyAssignmentLocked(const AssignmentEvent& e) {
  assignments_.emplace(e.unit_id, e);
  ++n_assigned_;
  if (config_.schedule.max_units > 0 && n_assigned_ >= config_.schedule.max_units) {
    open_ = false;
  }
}

AssignmentEvent Experiment::AssignRaw(std::int64_t unit_id,
                                      const RawCovariates& raw, int m_pre,
                                      int t_pre) {
  return Assign(unit_id, EncodeContext(raw, config_.schema, m_pre, t_pre));
}

void Experiment::RecordOutcome(std::int64_t unit_id, const OutcomeRecord& outcome) {
  outcome.Validate();
  std::lock_guard lock(mu_);
  auto it = assignments_.find(unit_id);
  if (it == assignments_.end()) {
    ThrowData("unknown unit " + std::to_string(unit_id));
  }
  if (outcomes_.count(unit_id)) {
    ThrowData("duplicate outcome for unit " + std::to_string(unit_id));
  }
  AppendLocked(OutcomeEventToJson(unit_id, outcome));
  outcomes_.emplace(unit_id, outcome);
  if (outcome.completed) ++n_completed_;
}

int Experiment::AdvanceBatch(bool force) {
  std::lock_guard lock(mu_);
  return AdvanceLocked(force);
}

int Experiment::AdvanceLocked(bool force) {
  if (!force && n_assigned_ < config_.schedule.BatchStart(batch_ + 1)) {
    ThrowData("batch " + std::to_string(batch_) + " is not full; pass force");
  }
  if (config_.bandit.mode == AssignmentMode::kThompson) {
    std::vector<Observation> history;
    for (const auto& [id, outcome] : outcomes_) {
      if (!outcome.completed) continue;
      const AssignmentEvent& a = assignments_.at(id);
      const int arm = config_.arms.IndexOf(a.arm);
      history.push_back({a.context.features, arm,
                         Discernment(outcome, config_.objective, Phase::kPost),
                         a.probabilities[arm]});
    }
    posterior_ = std::make_shared<const PosteriorState>(
        UpdatePosterior(*posterior_, history, config_.bandit));
    ++updates_;
  }
  ++batch_;
  json j{{"type", "advance"}, {"batch_index", batch_}, {"forced", force}};
  AppendLocked(j.dump());
  return batch_;
}

void Experiment::Close() {
  std::lock_guard lock(mu_);
  open_ = false;
}

bool Experiment::is_open() const {
  std::lock_guard lock(mu_);
  return open_;
}

ExperimentSnapshot Experiment::Snapshot() const {
  std::lock_guard lock(mu_);
  return {batch_, n_assigned_, n_completed_};
}

std::shared_ptr<const PosteriorState> Experiment::posterior() const {
  std::lock_guard lock(mu_);
  return posterior_;
}

int Experiment::posterior_updates() const {
  std::lock_guard lock(mu_);
  return updates_;
}

Dataset Experiment::Export(const ExportFilter& filter) const {
  std::lock_guard lock(mu_);
  Dataset data;
  data.arms = config_.arms;
  data.feature_names = config_.schema.FeatureNames();
  for (const auto& [id, a] : assignments_) {
    if (filter.batch && a.batch_index != *filter.batch) continue;
    UnitRecord u;
    u.unit_id = id;
    u.batch = a.batch_index;
    u.arm = config_.arms.IndexOf(a.arm);
    u.propensities = a.probabilities;
    u.context = a.context;
    auto it = outcomes_.find(id);
    if (it != outcomes_.end()) {
      u.outcome = it->second;
    } else {
      u.outcome.completed = false;
      u.outcome.m_pre = a.context.pretest_false_stratum;
      u.outcome.t_pre = a.context.pretest_true_stratum;
    }
    if (filter.completed_only && !u.outcome.completed) continue;
    data.units.push_back(std::move(u));
  }
  return data;
}

std::unique_ptr<Experiment> Experiment::Replay(ExperimentConfig config,
                                               std::istream& log, bool verify,
                                               std::ostream* log_sink) {
  auto exp = std::make_unique<Experiment>(std::move(config), log_sink);
  std::string line;
  int line_no = 0;
  while (std::getline(log, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("type")) {
      ThrowData("event log line " + std::to_string(line_no) + " is not an event");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "assignment") {
      AssignmentEvent e;
      e.unit_id = j.at("unit_id").get<std::int64_t>();
      e.timestamp = j.at("timestamp").get<std::int64_t>();
      e.batch_index = j.at("batch_index").get<int>();
      e.context = ContextFromJson(j.at("context"));
      e.probabilities = j.at("probabilities").get<std::vector<double>>();
      e.arm = {j.at("arm").at("respondent_level").get<int>(),
               j.at("arm").at("headline_level").get<int>()};
      e.rng_counter = j.at("rng_counter").get<std::uint64_t>();
      std::lock_guard lock(exp->mu_);
      if (e.batch_index != exp->batch_) {
        ThrowData("event log line " + std::to_string(line_no) +
                  ": assignment batch does not match replayed batch");
      }
      if (verify && exp->ProbabilitiesLocked(e.context) != e.probabilities) {
        ThrowData("event log line " + std::to_string(line_no) +
                  ": probabilities differ on replay");
      }
      exp->AppendLocked(line);
      exp->ApplyAssignmentLocked(e);
    } else if (type == "outcome") {
      exp->RecordOutcome(j.at("unit_id").get<std::int64_t>(),
                         OutcomeFromJson(j.at("outcome")));
    } else if (type == "advance") {
      exp->AdvanceBatch(j.value("forced", true));
    } else {
      ThrowData("event log line " + std::to_string(line_no) + ": unknown type");
    }
  }
  return exp;
}

}  // namespace adaptex
