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

#include "adaptex/model.h"

#include <cmath>
#include <set>

#include "adaptex/common.h"

namespace adaptex {

ArmSpace ArmSpace::Factorial(int respondent_levels, int headline_levels) {
  if (respondent_levels < 1 || headline_levels < 1) {
    ThrowUsage("factorial arm space needs at least one level per factor");
  }
  ArmSpace space;
  space.factorial_ = true;
  space.respondent_levels_ = respondent_levels;
  space.headline_levels_ = headline_levels;
  for (int r = 0; r < respondent_levels; ++r) {
    for (int h = 0; h < headline_levels; ++h) {
      space.arms_.push_back({r, h});
      space.names_.push_back("r" + std::to_string(r) + "_h" + std::to_string(h));
    }
  }
  return space;
}

ArmSpace ArmSpace::Flat(std::vector<std::pair<std::string, Arm>> arms) {
  ArmSpace space;
  std::set<std::pair<int, int>> seen;
  std::set<std::string> names;
  for (auto& [name, arm] : arms) {
    if (arm.respondent_level < 0 || arm.headline_level < 0) {
      ThrowUsage("arm '" + name + "' has a negative level");
    }
    if (!seen.insert({arm.respondent_level, arm.headline_level}).second) {
      ThrowUsage("arm '" + name + "' duplicates the levels of another arm");
    }
    if (name.empty() || name.find(',') != std::string::npos ||
        !names.insert(name).second) {
      ThrowUsage("arm names must be unique, nonempty and comma-free: '" +
                 name + "'");
    }
    space.arms_.push_back(arm);
    space.names_.push_back(std::move(name));
  }
  return space;
}

int ArmSpace::IndexOf(const Arm& arm) const {
  for (int i = 0; i < size(); ++i) {
    if (arms_[i] == arm) return i;
  }
  return -1;
}

int ArmSpace::IndexOfName(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (names_[i] == name) return i;
  }
  return -1;
}

namespace {

bool CountInRange(int c) { return c >= 0 && c <= 4; }

int SumCells(const ChannelDetail& d, Phase phase, StimulusType type) {
  int sum = 0;
  for (int s = 0; s < kStimuliPerType; ++s) {
    sum += d[ChannelCell(phase, type, s, Channel::kTimeline)];
    sum += d[ChannelCell(phase, type, s, Channel::kMessenger)];
  }
  return sum;
}

}  // namespace

void OutcomeRecord::Validate() const {
  for (int c : {m_pre, t_pre, m_post, t_post}) {
    if (!CountInRange(c)) ThrowData("share count outside 0..4");
  }
  if (!channel_detail) return;
  const ChannelDetail& d = *channel_detail;
  for (auto cell : d) {
    if (cell > 1) ThrowData("channel detail cell is not 0/1");
  }
  if (SumCells(d, Phase::kPre, StimulusType::kFalse) != m_pre ||
      SumCells(d, Phase::kPre, StimulusType::kTrue) != t_pre) {
    ThrowData("pretest counts disagree with channel detail");
  }
  if (completed && (SumCells(d, Phase::kPost, StimulusType::kFalse) != m_post ||
                    SumCells(d, Phase::kPost, StimulusType::kTrue) != t_post)) {
    ThrowData("posttest counts disagree with channel detail");
  }
}

OutcomeRecord OutcomeRecord::FromDetail(const ChannelDetail& detail,
                                        bool completed) {
  OutcomeRecord r;
  r.channel_detail = detail;
  r.completed = completed;
  r.m_pre = SumCells(detail, Phase::kPre, StimulusType::kFalse);
  r.t_pre = SumCells(detail, Phase::kPre, StimulusType::kTrue);
  if (completed) {
    r.m_post = SumCells(detail, Phase::kPost, StimulusType::kFalse);
    r.t_post = SumCells(detail, Phase::kPost, StimulusType::kTrue);
  } else {
    for (int i = 8; i < kChannelDetailSize; ++i) (*r.channel_detail)[i] = 0;
  }
  return r;
}

bool ResponseWeights::InSweepRange() const {
  return w_false >= -1.0 && w_false <= -0.1 && w_true >= 0.1 && w_true <= 1.0;
}

void ResponseWeights::Validate() const {
  if (!(w_false < 0.0) || !(w_true > 0.0)) {
    ThrowUsage("response weights need w_false < 0 < w_true");
  }
}

double Discernment(int false_shares, int true_shares,
                   const ResponseWeights& weights) {
  return weights.w_false * false_shares + weights.w_true * true_shares;
}

double Discernment(const OutcomeRecord& record, const ResponseWeights& weights,
                   Phase phase) {
  return phase == Phase::kPre
             ? Discernment(record.m_pre, record.t_pre, weights)
             : Discernment(record.m_post, record.t_post, weights);
}

ChannelResponses ComputeChannelResponses(const OutcomeRecord& record,
                                         Phase phase) {
  if (!record.channel_detail) {
    ThrowData("record has coarse counts only; channel detail missing");
  }
  const ChannelDetail& d = *record.channel_detail;
  auto tally = [&](StimulusType type, double& any, double& messenger,
                   double& timeline) {
    int n_any = 0, n_msg = 0, n_tl = 0;
    for (int s = 0; s < kStimuliPerType; ++s) {
      const bool tl = d[ChannelCell(phase, type, s, Channel::kTimeline)];
      const bool msg = d[ChannelCell(phase, type, s, Channel::kMessenger)];
      n_tl += tl;
      n_msg += msg;
      n_any += (tl || msg);
    }
    any = n_any / double(kStimuliPerType);
    messenger = n_msg / double(kStimuliPerType);
    timeline = n_tl / double(kStimuliPerType);
  };
  ChannelResponses out;
  tally(StimulusType::kFalse, out.false_any, out.false_messenger,
        out.false_timeline);
  tally(StimulusType::kTrue, out.true_any, out.true_messenger,
        out.true_timeline);
  return out;
}

int CovariateSchema::FeatureCount() const {
  int n = 0;
  for (const auto& c : covariates) {
    n += c.kind == CovariateKind::kCategorical ? c.levels : 1;
    n += c.skippable ? 1 : 0;
  }
  return n + (include_pretest ? 2 : 0);
}

std::vector<std::string> CovariateSchema::FeatureNames() const {
  std::vector<std::string> names;
  for (const auto& c : covariates) {
    if (c.kind == CovariateKind::kCategorical) {
      for (int l = 0; l < c.levels; ++l) {
        names.push_back(c.name + "=" + std::to_string(l));
      }
    } else {
      names.push_back(c.name);
    }
  }
  for (const auto& c : covariates) {
    if (c.skippable) names.push_back(c.name + "_skipped");
  }
  if (include_pretest) {
    names.push_back("pretest_false");
    names.push_back("pretest_true");
  }
  return names;
}

CovariateContext EncodeContext(const RawCovariates& raw,
                               const CovariateSchema& schema, int m_pre,
                               int t_pre) {
  for (const auto& [name, value] : raw) {
    bool known = false;
    for (const auto& c : schema.covariates) known = known || c.name == name;
    if (!known) ThrowData("unknown covariate '" + name + "'");
  }
  if (!CountInRange(m_pre) || !CountInRange(t_pre)) {
    ThrowData("pretest stratum outside 0..4");
  }

  CovariateContext ctx;
  ctx.pretest_false_stratum = m_pre;
  ctx.pretest_true_stratum = t_pre;
  ctx.features.reserve(schema.FeatureCount());
  std::vector<double> flags;

  for (const auto& c : schema.covariates) {
    auto it = raw.find(c.name);
    const bool skipped = it == raw.end() || !it->second.has_value();
    if (skipped && !c.skippable) {
      ThrowData("covariate '" + c.name + "' is required");
    }
    const double v = skipped ? 0.0 : *it->second;
    if (!std::isfinite(v)) ThrowData("covariate '" + c.name + "' not finite");
    switch (c.kind) {
      case CovariateKind::kContinuous:
        ctx.features.push_back(skipped ? 0.0 : (v - c.center) / c.scale);
        break;
      case CovariateKind::kIndex:
        ctx.features.push_back(v);
        break;
      case CovariateKind::kCategorical: {
        const int code = static_cast<int>(v);
        if (!skipped && (code != v || code < 0 || code >= c.levels)) {
          ThrowData("categorical code out of range for '" + c.name + "'");
        }
        for (int l = 0; l < c.levels; ++l) {
          ctx.features.push_back(!skipped && l == code ? 1.0 : 0.0);
        }
        break;
      }
    }
    if (c.skippable) flags.push_back(skipped ? 1.0 : 0.0);
  }
  ctx.features.insert(ctx.features.end(), flags.begin(), flags.end());
  if (schema.include_pretest) {
    ctx.features.push_back(m_pre);
    ctx.features.push_back(t_pre);
  }
  return ctx;
}

CovariateSchema FitStandardization(CovariateSchema schema,
                                   const std::vector<RawCovariates>& rows) {
  for (auto& c : schema.covariates) {
    if (c.kind != CovariateKind::kContinuous) continue;
    double sum = 0, sum_sq = 0;
    int n = 0;
    for (const auto& row : rows) {
      auto it = row.find(c.name);
      if (it == row.end() || !it->second) continue;
      sum += *it->second;
      sum_sq += *it->second * *it->second;
      ++n;
    }
    if (n == 0) continue;
    c.center = sum / n;
    const double var = n > 1 ? (sum_sq - n * c.center * c.center) / (n - 1) : 0;
    c.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return schema;
}

}  // namespace adaptex
