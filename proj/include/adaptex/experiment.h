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

#ifndef ADAPTEX_EXPERIMENT_H_
#define ADAPTEX_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adaptex/bandit.h"
#include "adaptex/dataset.h"
#include "adaptex/model.h"

namespace adaptex {

struct BatchSchedule {
  int first_batch_size = 2300;
  int subsequent_batch_size = 800;
  std::int64_t max_units = 0;  // 0 = unbounded

  void Validate() const;
  // Batch that the unit with 0-based arrival position `position` falls in.
  int BatchOf(std::int64_t position) const;
  // Number of units assigned before batch `batch` opens.
  std::int64_t BatchStart(int batch) const;
};

struct ExperimentConfig {
  ArmSpace arms;
  CovariateSchema schema;
  BatchSchedule schedule;
  BanditConfig bandit;
  // Weights of the response the bandit optimizes.
  ResponseWeights objective;
  // Advance automatically once the open batch reaches its scheduled size.
  bool auto_advance = true;

  void Validate() const;
};

struct AssignmentEvent {
  std::int64_t unit_id = 0;
  std::int64_t timestamp = 0;
  int batch_index = 0;
  CovariateContext context;
  std::vector<double> probabilities;
  Arm arm;
  std::uint64_t rng_counter = 0;

  friend bool operator==(const AssignmentEvent&, const AssignmentEvent&) = default;
};

struct ExperimentSnapshot {
  int batch = 0;
  std::int64_t n_assigned = 0;
  std::int64_t n_completed = 0;
};

struct ExportFilter {
  bool completed_only = false;
  std::optional<int> batch;
};

// Thread-safe assignment service over a single experiment. Every mutation is
// appended to the JSONL event log before the call returns; the log alone is
// enough to rebuild the experiment with Replay().
class Experiment {
 public:
  using Clock = std::function<std::int64_t()>;

  // `log_sink` may be null. The default clock is logical (arrival counter),
  // which keeps simulated logs byte-reproducible.
  explicit Experiment(ExperimentConfig config, std::ostream* log_sink = nullptr,
                      Clock clock = nullptr);

  AssignmentEvent Assign(std::int64_t unit_id, const CovariateContext& context);
  AssignmentEvent AssignRaw(std::int64_t unit_id, const RawCovariates& raw,
                            int m_pre, int t_pre);

  void RecordOutcome(std::int64_t unit_id, const OutcomeRecord& outcome);

  // Refits the posterior on every completed outcome to date and opens the
  // next batch. Throws when the open batch is not full and `force` is false.
  int AdvanceBatch(bool force = false);

  void Close();
  bool is_open() const;

  ExperimentSnapshot Snapshot() const;
  std::shared_ptr<const PosteriorState> posterior() const;
  int posterior_updates() const;

  Dataset Export(const ExportFilter& filter = {}) const;
  const ExperimentConfig& config() const { return config_; }

  // Rebuilds an experiment from its log. With `verify`, every logged
  // probability vector is recomputed and must match bit-for-bit.
  static std::unique_ptr<Experiment> Replay(ExperimentConfig config,
                                            std::istream& log, bool verify = true,
                                            std::ostream* log_sink = nullptr);

 private:
  std::vector<double> ProbabilitiesLocked(const CovariateContext& context) const;
  int AdvanceLocked(bool force);
  void AppendLocked(const std::string& line);
  void ApplyAssignmentLocked(const AssignmentEvent& event);

  ExperimentConfig config_;
  std::ostream* log_sink_;
  Clock clock_;

  mutable std::mutex mu_;
  bool open_ = true;
  int batch_ = 0;
  int updates_ = 0;
  std::int64_t n_assigned_ = 0;
  std::int64_t n_completed_ = 0;
  std::shared_ptr<const PosteriorState> posterior_;
  std::map<std::int64_t, AssignmentEvent> assignments_;
  std::map<std::int64_t, OutcomeRecord> outcomes_;
};

// JSON encodings of the event-log lines.
std::string AssignmentEventToJson(const AssignmentEvent& event);
std::string OutcomeEventToJson(std::int64_t unit_id, const OutcomeRecord& outcome);

}  // namespace adaptex

#endif  // ADAPTEX_EXPERIMENT_H_
