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

#ifndef ADAPTEX_CONFIG_H_
#define ADAPTEX_CONFIG_H_

#include <string>
#include <vector>

#include "adaptex/bandit.h"
#include "adaptex/estimators.h"
#include "adaptex/experiment.h"
#include "adaptex/model.h"
#include "adaptex/policy.h"
#include "adaptex/regression.h"
#include "adaptex/sim.h"
#include "json.hpp"

namespace adaptex {

struct ConfigKey {
  std::string path;  // dotted; arrays are leaves
  std::string doc;
};

// Every key accepted in a run configuration.
const std::vector<ConfigKey>& ConfigKeys();
std::string ConfigKeysHelp();

// Throws a usage error naming the first key that is not documented.
void CheckConfigKeys(const nlohmann::json& config);

nlohmann::json LoadConfigFile(const std::string& path);

// Section parsers. Missing keys keep their defaults.
DgpSpec DgpFromJson(const nlohmann::json& j);
BanditConfig BanditFromJson(const nlohmann::json& j);
BatchSchedule ScheduleFromJson(const nlohmann::json& j);
ResponseWeights WeightsFromJson(const nlohmann::json& j);
LearnerOptions LearnerFromJson(const nlohmann::json& j);
EstimationConfig EstimationFromJson(const nlohmann::json& j);
TocOptions TocFromJson(const nlohmann::json& j);
CoverageConfig CoverageFromJson(const nlohmann::json& j);

// {"factorial": [R, H]} or {"flat": [{"name": s, "respondent_level": r,
// "headline_level": h}, ...]}
ArmSpace ArmSpaceFromJson(const nlohmann::json& j);
// {"covariates": [{"name", "kind", "levels", "skippable", "center",
// "scale"}, ...], "include_pretest": bool}
CovariateSchema SchemaFromJson(const nlohmann::json& j);

}  // namespace adaptex

#endif  // ADAPTEX_CONFIG_H_
