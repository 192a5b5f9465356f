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

#ifndef ADAPTEX_DATASET_H_
#define ADAPTEX_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adaptex/model.h"

namespace adaptex {

struct UnitRecord {
  std::int64_t unit_id = 0;
  int batch = 0;
  int arm = 0;
  // Assignment probability of every arm, as logged at assignment time.
  std::vector<double> propensities;
  OutcomeRecord outcome;
  CovariateContext context;

  double realized_propensity() const { return propensities.at(arm); }
  friend bool operator==(const UnitRecord&, const UnitRecord&) = default;
};

struct Dataset {
  ArmSpace arms;
  std::vector<std::string> feature_names;
  std::vector<UnitRecord> units;

  int n_arms() const { return arms.size(); }
  int n_features() const { return static_cast<int>(feature_names.size()); }
  std::size_t size() const { return units.size(); }

  // Units with an observed posttest.
  Dataset Completed() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Shortest decimal string that parses back to the same double.
std::string FormatDouble(double v);
double ParseDouble(const std::string& s);

// Column order:
//   unit_id, batch, arm_respondent, arm_headline,
//   one propensity column per arm named e:<arm name>:<respondent>:<headline>,
//   M_pre, T_pre, M_post, T_post,
//   16 channel-detail columns <phase>_<false|true>_s<1|2>_<timeline|messenger>,
//   completed, then one column per feature named x:<feature name>.
// Posttest fields of censored units are written as NA.
void WriteDatasetCsv(const Dataset& data, std::ostream& out);
Dataset ReadDatasetCsv(std::istream& in);

Dataset LoadDatasetCsv(const std::string& path);
void SaveDatasetCsv(const Dataset& data, const std::string& path);

// Writes through a temporary file and renames it into place.
void WriteFileAtomically(const std::string& path, const std::string& contents);
std::string ReadFile(const std::string& path);

}  // namespace adaptex

#endif  // ADAPTEX_DATASET_H_
