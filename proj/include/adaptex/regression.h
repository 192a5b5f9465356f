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

#ifndef ADAPTEX_REGRESSION_H_
#define ADAPTEX_REGRESSION_H_

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace adaptex {

// Rows are units, columns are features.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MuMethod { kRidge, kKnn, kForest };

MuMethod ParseMuMethod(const std::string& name);
std::string MuMethodName(MuMethod method);

struct LearnerOptions {
  MuMethod method = MuMethod::kRidge;
  double ridge_lambda = 1.0;  // interaction / slope penalty
  int knn_k = 20;
  int forest_trees = 100;
  int forest_min_leaf = 5;
  double forest_sample_fraction = 0.5;
  int forest_max_depth = 12;
  std::uint64_t seed = 0;
};

// Predicts the conditional mean of the outcome for (features, arm).
class ArmPredictor {
 public:
  virtual ~ArmPredictor() = default;
  virtual double Predict(std::span<const double> features, int arm) const = 0;
  // Throws for learners that cannot be checkpointed.
  virtual nlohmann::json ToJson() const = 0;
};

struct ArmTrainingSet {
  FeatureMatrix x;
  std::vector<int> arm;
  std::vector<double> y;
  int n_arms = 0;
};

std::unique_ptr<ArmPredictor> FitArmPredictor(const ArmTrainingSet& data,
                                              const LearnerOptions& options);
std::unique_ptr<ArmPredictor> ArmPredictorFromJson(const nlohmann::json& j);

// Single-outcome regression used for CATE fits.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double Predict(std::span<const double> features) const = 0;
  virtual nlohmann::json ToJson() const = 0;
};

std::unique_ptr<Regressor> FitRegressor(const FeatureMatrix& x,
                                        std::span<const double> y,
                                        const LearnerOptions& options);
std::unique_ptr<Regressor> RegressorFromJson(const nlohmann::json& j);

// Honest regression forest: each tree draws a subsample, grows its splits on
// one half and estimates leaf means on the other half.
class HonestForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;
  };
  using Tree = std::vector<Node>;

  static HonestForest Fit(const FeatureMatrix& x, std::span<const double> y,
                          const LearnerOptions& options);
  double Predict(std::span<const double> features) const;

  nlohmann::json ToJson() const;
  static HonestForest FromJson(const nlohmann::json& j);

 private:
  std::vector<Tree> trees_;
  double fallback_ = 0;
};

// L2-penalized logistic regression (intercept unpenalized), Newton-Raphson.
struct LogisticFit {
  Eigen::VectorXd coef;  // [intercept, x...]
  double Probability(std::span<const double> features) const;
};

LogisticFit FitLogistic(const FeatureMatrix& x, std::span<const int> labels,
                        double penalty, int max_iter = 50);

}  // namespace adaptex

#endif  // ADAPTEX_REGRESSION_H_
