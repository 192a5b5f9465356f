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

#ifndef ADAPTEX_MODEL_H_
#define ADAPTEX_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace adaptex {

// One treatment condition. Level 0 on either factor is the control level.
struct Arm {
  int respondent_level = 0;
  int headline_level = 0;

  friend bool operator==(const Arm&, const Arm&) = default;
};

// Ordered list of arms. Arm indices are positions in this list, and every
// (respondent_level, headline_level) pair is unique within a space.
class ArmSpace {
 public:
  ArmSpace() = default;

  // Full cross product, index = respondent * headline_levels + headline.
  static ArmSpace Factorial(int respondent_levels, int headline_levels);
  static ArmSpace Flat(std::vector<std::pair<std::string, Arm>> arms);

  int size() const { return static_cast<int>(arms_.size()); }
  const Arm& arm(int index) const { return arms_.at(index); }
  const std::string& name(int index) const { return names_.at(index); }
  const std::vector<Arm>& arms() const { return arms_; }

  // -1 when absent.
  int IndexOf(const Arm& arm) const;
  int IndexOfName(const std::string& name) const;

  bool is_factorial() const { return factorial_; }
  int respondent_levels() const { return respondent_levels_; }
  int headline_levels() const { return headline_levels_; }

  friend bool operator==(const ArmSpace& a, const ArmSpace& b) {
    return a.arms_ == b.arms_ && a.names_ == b.names_;
  }

 private:
  std::vector<Arm> arms_;
  std::vector<std::string> names_;
  bool factorial_ = false;
  int respondent_levels_ = 0;
  int headline_levels_ = 0;
};

enum class Phase { kPre = 0, kPost = 1 };
enum class StimulusType { kFalse = 0, kTrue = 1 };
enum class Channel { kTimeline = 0, kMessenger = 1 };

inline constexpr int kStimuliPerType = 2;
inline constexpr int kChannelDetailSize = 16;

// Flat index into the 16-cell grid: phase, stimulus type, stimulus, channel.
constexpr int ChannelCell(Phase phase, StimulusType type, int stimulus,
                          Channel channel) {
  return static_cast<int>(phase) * 8 + static_cast<int>(type) * 4 +
         stimulus * 2 + static_cast<int>(channel);
}

using ChannelDetail = std::array<std::uint8_t, kChannelDetailSize>;

struct OutcomeRecord {
  int m_pre = 0;
  int t_pre = 0;
  int m_post = 0;
  int t_post = 0;
  std::optional<ChannelDetail> channel_detail;
  bool completed = true;

  // Throws on counts outside 0..4 or counts inconsistent with the grid.
  void Validate() const;

  // Fills the counts from the grid (posttest counts zeroed when censored).
  static OutcomeRecord FromDetail(const ChannelDetail& detail, bool completed);

  friend bool operator==(const OutcomeRecord&, const OutcomeRecord&) = default;
};

struct ResponseWeights {
  double w_false = -1.0;
  double w_true = 0.5;

  // Sweep bounds: w_false in [-1, -0.1], w_true in [0.1, 1].
  bool InSweepRange() const;
  void Validate() const;
};

// w_false * M + w_true * T for the chosen phase.
double Discernment(const OutcomeRecord& record, const ResponseWeights& weights,
                   Phase phase = Phase::kPost);
double Discernment(int false_shares, int true_shares,
                   const ResponseWeights& weights = {});

struct ChannelResponses {
  double false_any = 0;
  double false_messenger = 0;
  double false_timeline = 0;
  double true_any = 0;
  double true_messenger = 0;
  double true_timeline = 0;
};

// Proportions over the two stimuli of each type. Throws when the record
// carries only coarse counts.
ChannelResponses ComputeChannelResponses(const OutcomeRecord& record,
                                         Phase phase = Phase::kPost);

enum class CovariateKind { kContinuous, kCategorical, kIndex };

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::kContinuous;
  int levels = 0;          // categorical only: codes 0..levels-1
  bool skippable = false;  // adds a 0/1 skip flag slot
  double center = 0.0;     // continuous standardization, frozen once fitted
  double scale = 1.0;
};

struct CovariateSchema {
  std::vector<CovariateSpec> covariates;
  // Appends the pretest false/true counts as two feature slots.
  bool include_pretest = false;

  int FeatureCount() const;
  std::vector<std::string> FeatureNames() const;
};

struct CovariateContext {
  std::vector<double> features;
  int pretest_false_stratum = 0;
  int pretest_true_stratum = 0;

  friend bool operator==(const CovariateContext&,
                         const CovariateContext&) = default;
};

// nullopt marks a skipped answer.
using RawCovariates = std::map<std::string, std::optional<double>>;

// Feature layout: value slots in schema order (one-hot for categoricals),
// then one flag per skippable covariate, then the pretest slots if enabled.
CovariateContext EncodeContext(const RawCovariates& raw,
                               const CovariateSchema& schema, int m_pre = 0,
                               int t_pre = 0);

// Sets center/scale of continuous covariates from non-skipped values.
CovariateSchema FitStandardization(CovariateSchema schema,
                                   const std::vector<RawCovariates>& rows);

}  // namespace adaptex

#endif  // ADAPTEX_MODEL_H_
