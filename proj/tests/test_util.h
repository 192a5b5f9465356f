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

#ifndef ADAPTEX_TESTS_TEST_UTIL_H_
#define ADAPTEX_TESTS_TEST_UTIL_H_

#include <random>
#include <string>
#include <vector>

#include "adaptex/common.h"
#include "adaptex/dataset.h"
#include "adaptex/model.h"

namespace adaptex::testing {

// Coarse-count unit without channel detail.
inline UnitRecord MakeUnit(std::int64_t id, int arm, std::vector<double> propensities,
                           std::vector<double> features, int m_post, int t_post,
                           int batch = 0, bool completed = true) {
  UnitRecord u;
  u.unit_id = id;
  u.batch = batch;
  u.arm = arm;
  u.propensities = std::move(propensities);
  u.context.features = std::move(features);
  u.outcome.completed = completed;
  if (completed) {
    u.outcome.m_post = m_post;
    u.outcome.t_post = t_post;
  }
  return u;
}

inline Dataset FlatDataset(int n_arms, int n_features) {
  Dataset d;
  std::vector<std::pair<std::string, Arm>> arms;
  for (int k = 0; k < n_arms; ++k) arms.push_back({"a" + std::to_string(k), {k, 0}});
  d.arms = ArmSpace::Flat(arms);
  for (int j = 0; j < n_features; ++j) d.feature_names.push_back("x" + std::to_string(j));
  return d;
}

// Two arms at probability 1/2 each, standard-normal features. Arm 0 lowers
// the false-share probability by 0.075 when x0 > 0 and raises it by 0.075
// otherwise, so its discernment effect is +0.3 or -0.3 by the sign of x0.
inline Dataset SignEffectDataset(int n, std::uint64_t seed, int n_features = 2) {
  Dataset d = FlatDataset(2, n_features);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(n_features);
    for (double& v : x) v = normal(rng);
    const int arm = coin(rng);
    const double shift = x[0] > 0 ? -0.075 : 0.075;
    std::binomial_distribution<int> m(4, arm == 0 ? 0.1 + shift : 0.1);
    d.units.push_back(MakeUnit(i + 1, arm, {0.5, 0.5}, x, m(rng), 0));
  }
  return d;
}

// True discernment value of sending `first` to arm 0 in the generator above.
inline double SignEffectValue(double x0, bool first) {
  return -0.4 + (first ? (x0 > 0 ? 0.3 : -0.3) : 0.0);
}

inline std::string TestDataPath(const std::string& name) {
  return std::string(ADAPTEX_TEST_DATA_DIR) + "/" + name;
}

}  // namespace adaptex::testing

#endif  // ADAPTEX_TESTS_TEST_UTIL_H_
