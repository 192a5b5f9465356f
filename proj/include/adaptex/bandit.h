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

#ifndef ADAPTEX_BANDIT_H_
#define ADAPTEX_BANDIT_H_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptex/common.h"

namespace adaptex {

enum class AssignmentMode {
  kThompson,  // balanced linear Thompson sampling
  kUniform,   // baseline: 1/K everywhere
  kFixed,     // fixed probability vector (evaluation-stage designs)
};

struct BanditConfig {
  AssignmentMode mode = AssignmentMode::kThompson;
  // Variance of the near-flat prior on intercept and main effects.
  double prior_var_main = 1e6;
  // Ridge penalty lambda on covariate-by-arm interactions (prior variance
  // 1/lambda).
  double ridge_penalty_interactions = 1.0;
  int n_posterior_draws = 1000;
  double probability_floor = 1.0 / 400.0;
  std::uint64_t seed = 0;
  // Noise variance used before any residuals are available.
  double initial_noise_var = 1.0;
  // When set, noise variance is held fixed instead of re-estimated.
  std::optional<double> fixed_noise_var;
  // kFixed only.
  std::vector<double> fixed_probabilities;

  // Throws on lambda <= 0, floor * n_arms > 1 or a malformed fixed vector.
  void Validate(int n_arms) const;
};

// Column layout of the linear model:
//   [intercept | arm 1..K-1 | features 1..p | features x arm, one block of p
//   per arm 1..K-1]
struct DesignLayout {
  int n_arms = 0;
  int n_features = 0;

  int dim() const { return 1 + (n_arms - 1) + n_features + n_features * (n_arms - 1); }
  int arm_offset() const { return 1; }
  int feature_offset() const { return n_arms; }
  int interaction_offset(int arm) const {
    return n_arms + n_features + (arm - 1) * n_features;
  }

  Eigen::VectorXd Row(std::span<const double> features, int arm) const;
  // K x dim matrix whose rows map coefficients to each arm's predicted mean.
  Eigen::MatrixXd ArmMap(std::span<const double> features) const;
};

struct PosteriorState {
  int n_arms = 0;
  int n_features = 0;
  Eigen::VectorXd coef_mean;
  Eigen::MatrixXd coef_cov;
  double noise_var = 1.0;
  std::int64_t n_observed = 0;
  int batch_index = 0;

  DesignLayout layout() const { return {n_arms, n_features}; }

  // Field order: header, n_arms, n_features, n_observed, batch_index,
  // noise_var, coef_mean (dim values), coef_cov (dim*dim, row-major).
  // Reals are written as C99 hex floats so the round trip is exact.
  std::string Serialize() const;
  static PosteriorState Deserialize(const std::string& text);

  friend bool operator==(const PosteriorState& a, const PosteriorState& b) {
    return a.n_arms == b.n_arms && a.n_features == b.n_features &&
           a.coef_mean == b.coef_mean && a.coef_cov == b.coef_cov &&
           a.noise_var == b.noise_var && a.n_observed == b.n_observed &&
           a.batch_index == b.batch_index;
  }
};

struct Observation {
  std::vector<double> features;
  int arm = 0;
  double response = 0;
  double propensity = 1;  // realized-arm probability at assignment time
};

PosteriorState InitState(const BanditConfig& config, int n_arms, int n_features);

// Refits the posterior from the prior on every observation in `history`
// (refit-from-scratch) with balance weights 1/propensity normalized to mean
// one. Returns a state with batch_index = previous.batch_index + 1.
PosteriorState UpdatePosterior(const PosteriorState& previous,
                               std::span<const Observation> history,
                               const BanditConfig& config);

// Monte-Carlo probability that each arm has the highest mean, floored.
// `stream` selects the random stream; equal (seed, batch, stream) triples give
// equal outputs.
std::vector<double> AssignmentProbabilities(const PosteriorState& state,
                                            std::span<const double> features,
                                            const BanditConfig& config,
                                            std::uint64_t stream);

// Raw argmax frequencies before flooring.
std::vector<double> ProbabilityOfBest(const PosteriorState& state,
                                      std::span<const double> features,
                                      int n_draws, Rng& rng);

std::vector<double> ApplyFloor(std::span<const double> probs, double floor);

int DrawAssignment(std::span<const double> probs, Rng& rng);

// Stable 64-bit hash of a feature vector's bit patterns.
std::uint64_t HashFeatures(std::span<const double> features);

}  // namespace adaptex

#endif  // ADAPTEX_BANDIT_H_
