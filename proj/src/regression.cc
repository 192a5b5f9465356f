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

#include "adaptex/regression.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adaptex/bandit.h"
#include "adaptex/common.h"

namespace adaptex {

using nlohmann::json;

MuMethod ParseMuMethod(const std::string& name) {
  if (name == "ridge") return MuMethod::kRidge;
  if (name == "knn") return MuMethod::kKnn;
  if (name == "forest" || name == "honest-tree-ensemble") return MuMethod::kForest;
  ThrowUsage("unknown conditional-mean method '" + name + "'");
}

std::string MuMethodName(MuMethod method) {
  switch (method) {
    case MuMethod::kRidge: return "ridge";
    case MuMethod::kKnn: return "knn";
    case MuMethod::kForest: return "forest";
  }
  return "ridge";
}

namespace {

constexpr double kMainPenalty = 1e-6;

Eigen::VectorXd SolvePenalized(const Eigen::MatrixXd& xtx,
                               const Eigen::VectorXd& penalty,
                               const Eigen::VectorXd& xty) {
  Eigen::MatrixXd a = xtx;
  a.diagonal() += penalty;
  return a.ldlt().solve(xty);
}

class RidgeArmPredictor : public ArmPredictor {
 public:
  RidgeArmPredictor(DesignLayout layout, Eigen::VectorXd coef)
      : layout_(layout), coef_(std::move(coef)) {}

  double Predict(std::span<const double> features, int arm) const override {
    double v = coef_[0];
    for (int j = 0; j < layout_.n_features; ++j) {
      v += coef_[layout_.feature_offset() + j] * features[j];
    }
    if (arm > 0) {
      v += coef_[layout_.arm_offset() + arm - 1];
      const int off = layout_.interaction_offset(arm);
      for (int j = 0; j < layout_.n_features; ++j) v += coef_[off + j] * features[j];
    }
    return v;
  }

  json ToJson() const override {
    return {{"kind", "ridge"},
            {"n_arms", layout_.n_arms},
            {"n_features", layout_.n_features},
            {"coef", std::vector<double>(coef_.data(), coef_.data() + coef_.size())}};
  }

 private:
  DesignLayout layout_;
  Eigen::VectorXd coef_;
};

std::unique_ptr<ArmPredictor> FitRidgeArms(const ArmTrainingSet& data,
                                           const LearnerOptions& options) {
  const DesignLayout layout{data.n_arms, static_cast<int>(data.x.cols())};
  const int d = layout.dim();
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const Eigen::VectorXd row = layout.Row(
        std::span<const double>(data.x.row(i).data(), data.x.cols()), data.arm[i]);
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
    xty += row * data.y[i];
  }
  xtx = xtx.selfadjointView<Eigen::Lower>();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d, options.ridge_lambda);
  penalty[0] = 0.0;
  for (int k = 1; k < layout.n_arms; ++k) penalty[layout.arm_offset() + k - 1] = kMainPenalty;
  for (int j = 0; j < layout.n_features; ++j) penalty[layout.feature_offset() + j] = kMainPenalty;
  if (data.y.empty()) penalty[0] = 1.0;
  return std::make_unique<RidgeArmPredictor>(layout, SolvePenalized(xtx, penalty, xty));
}

class KnnArmPredictor : public ArmPredictor {
 public:
  KnnArmPredictor(const ArmTrainingSet& data, int k) : data_(data), k_(k) {
    global_mean_ = data.y.empty()
                       ? 0.0
                       : std::accumulate(data.y.begin(), data.y.end(), 0.0) / data.y.size();
  }

  double Predict(std::span<const double> features, int arm) const override {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < data_.y.size(); ++i) {
      if (data_.arm[i] != arm) continue;
      double d2 = 0;
      for (int j = 0; j < data_.x.cols(); ++j) {
        const double diff = data_.x(i, j) - features[j];
        d2 += diff * diff;
      }
      dist.push_back({d2, i});
    }
    if (dist.empty()) return global_mean_;
    const std::size_t k = std::min<std::size_t>(k_, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += data_.y[dist[i].second];
    return sum / k;
  }

  json ToJson() const override {
    ThrowUsage("knn conditional-mean models cannot be checkpointed");
  }

 private:
  ArmTrainingSet data_;
  int k_;
  double global_mean_;
};

class ForestArmPredictor : public ArmPredictor {
 public:
  ForestArmPredictor(std::vector<HonestForest> forests) : forests_(std::move(forests)) {}

  double Predict(std::span<const double> features, int arm) const override {
    return forests_.at(arm).Predict(features);
  }

  json ToJson() const override {
    json arr = json::array();
    for (const auto& f : forests_) arr.push_back(f.ToJson());
    return {{"kind", "forest"}, {"arms", arr}};
  }

 private:
  std::vector<HonestForest> forests_;
};

std::unique_ptr<ArmPredictor> FitForestArms(const ArmTrainingSet& data,
                                            const LearnerOptions& options) {
  const double global =
      data.y.empty() ? 0.0
                     : std::accumulate(data.y.begin(), data.y.end(), 0.0) / data.y.size();
  std::vector<HonestForest> forests;
  for (int k = 0; k < data.n_arms; ++k) {
    std::vector<int> rows;
    for (std::size_t i = 0; i < data.y.size(); ++i) {
      if (data.arm[i] == k) rows.push_back(static_cast<int>(i));
    }
    FeatureMatrix x(rows.size(), data.x.cols());
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(i) = data.x.row(rows[i]);
      y[i] = data.y[rows[i]];
    }
    LearnerOptions arm_options = options;
    arm_options.seed = DeriveSeed(options.seed, 0xf0, static_cast<std::uint64_t>(k));
    if (rows.empty()) {
      FeatureMatrix one(1, data.x.cols());
      one.setZero();
      std::vector<double> g{global};
      forests.push_back(HonestForest::Fit(one, g, arm_options));
    } else {
      forests.push_back(HonestForest::Fit(x, y, arm_options));
    }
  }
  return std::make_unique<ForestArmPredictor>(std::move(forests));
}

class RidgeRegressor : public Regressor {
 public:
  explicit RidgeRegressor(Eigen::VectorXd coef) : coef_(std::move(coef)) {}
  double Predict(std::span<const double> features) const override {
    double v = coef_[0];
    for (std::size_t j = 0; j < features.size(); ++j) v += coef_[j + 1] * features[j];
    return v;
  }
  json ToJson() const override {
    return {{"kind", "ridge"},
            {"coef", std::vector<double>(coef_.data(), coef_.data() + coef_.size())}};
  }

 private:
  Eigen::VectorXd coef_;
};

class ForestRegressor : public Regressor {
 public:
  explicit ForestRegressor(HonestForest forest) : forest_(std::move(forest)) {}
  double Predict(std::span<const double> features) const override {
    return forest_.Predict(features);
  }
  json ToJson() const override { return {{"kind", "forest"}, {"forest", forest_.ToJson()}}; }

 private:
  HonestForest forest_;
};

// Sum of squares reduction search over one node.
struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double gain = 0;
};

SplitChoice BestSplit(const FeatureMatrix& x, std::span<const double> y,
                      const std::vector<int>& rows, const std::vector<int>& features,
                      int min_leaf) {
  SplitChoice best;
  const int n = static_cast<int>(rows.size());
  double total = 0;
  for (int r : rows) total += y[r];
  std::vector<int> order(rows);
  for (int f : features) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
    });
    double left = 0;
    for (int i = 0; i < n - 1; ++i) {
      left += y[order[i]];
      const int nl = i + 1, nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double xa = x(order[i], f), xb = x(order[i + 1], f);
      if (xa == xb) continue;
      const double right = total - left;
      const double gain = left * left / nl + right * right / nr - total * total / n;
      if (gain > best.gain + 1e-12) {
        best = {f, 0.5 * (xa + xb), gain};
      }
    }
  }
  return best;
}

void Grow(const FeatureMatrix& x, std::span<const double> y, std::vector<int> rows,
          int depth, const LearnerOptions& options, Rng& rng,
          HonestForest::Tree& tree, int node) {
  const int p = static_cast<int>(x.cols());
  if (static_cast<int>(rows.size()) >= 2 * options.forest_min_leaf &&
      depth < options.forest_max_depth && p > 0) {
    std::vector<int> features(p);
    std::iota(features.begin(), features.end(), 0);
    const int mtry = p <= 20 ? p : static_cast<int>(std::ceil(std::sqrt(p))) + 20;
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(std::min(p, mtry));
    const SplitChoice split = BestSplit(x, y, rows, features, options.forest_min_leaf);
    if (split.feature >= 0) {
      std::vector<int> left, right;
      for (int r : rows) (x(r, split.feature) <= split.threshold ? left : right).push_back(r);
      tree[node].feature = split.feature;
      tree[node].threshold = split.threshold;
      tree[node].left = static_cast<int>(tree.size());
      tree.emplace_back();
      tree[node].right = static_cast<int>(tree.size());
      tree.emplace_back();
      const int l = tree[node].left, r = tree[node].right;
      Grow(x, y, std::move(left), depth + 1, options, rng, tree, l);
      Grow(x, y, std::move(right), depth + 1, options, rng, tree, r);
      return;
    }
  }
  tree[node].feature = -1;
}

int Descend(const HonestForest::Tree& tree, std::span<const double> features) {
  int node = 0;
  while (tree[node].feature >= 0) {
    node = features[tree[node].feature] <= tree[node].threshold ? tree[node].left
                                                                 : tree[node].right;
  }
  return node;
}

}  // namespace

std::unique_ptr<ArmPredictor> FitArmPredictor(const ArmTrainingSet& data,
                                              const LearnerOptions& options) {
  if (data.n_arms < 1) ThrowUsage("arm predictor needs at least one arm");
  switch (options.method) {
    case MuMethod::kRidge: return FitRidgeArms(data, options);
    case MuMethod::kKnn: return std::make_unique<KnnArmPredictor>(data, options.knn_k);
    case MuMethod::kForest: return FitForestArms(data, options);
  }
  return nullptr;
}

std::unique_ptr<ArmPredictor> ArmPredictorFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ridge") {
    const auto coef = j.at("coef").get<std::vector<double>>();
    DesignLayout layout{j.at("n_arms").get<int>(), j.at("n_features").get<int>()};
    if (static_cast<int>(coef.size()) != layout.dim()) ThrowData("ridge checkpoint dimension mismatch");
    return std::make_unique<RidgeArmPredictor>(
        layout, Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size()));
  }
  if (kind == "forest") {
    std::vector<HonestForest> forests;
    for (const auto& f : j.at("arms")) forests.push_back(HonestForest::FromJson(f));
    return std::make_unique<ForestArmPredictor>(std::move(forests));
  }
  ThrowData("unknown arm predictor kind '" + kind + "'");
}

std::unique_ptr<Regressor> FitRegressor(const FeatureMatrix& x,
                                        std::span<const double> y,
                                        const LearnerOptions& options) {
  if (options.method == MuMethod::kForest) {
    return std::make_unique<ForestRegressor>(HonestForest::Fit(x, y, options));
  }
  if (options.method != MuMethod::kRidge) {
    ThrowUsage("CATE regressor must be ridge or forest");
  }
  const int p = static_cast<int>(x.cols());
  Eigen::MatrixXd design(x.rows(), p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, options.ridge_lambda);
  penalty[0] = 0.0;
  if (y.empty()) penalty[0] = 1.0;
  return std::make_unique<RidgeRegressor>(
      SolvePenalized(design.transpose() * design, penalty, design.transpose() * yv));
}

std::unique_ptr<Regressor> RegressorFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ridge") {
    const auto coef = j.at("coef").get<std::vector<double>>();
    return std::make_unique<RidgeRegressor>(
        Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size()));
  }
  if (kind == "forest") {
    return std::make_unique<ForestRegressor>(HonestForest::FromJson(j.at("forest")));
  }
  ThrowData("unknown regressor kind '" + kind + "'");
}

HonestForest HonestForest::Fit(const FeatureMatrix& x, std::span<const double> y,
                               const LearnerOptions& options) {
  HonestForest forest;
  const int n = static_cast<int>(y.size());
  if (n == 0) ThrowData("forest needs at least one training row");
  forest.fallback_ = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const int sample = std::max(2, static_cast<int>(options.forest_sample_fraction * n));
  if (n < 4 * options.forest_min_leaf || sample > n) {
    forest.trees_.push_back({Node{-1, 0, -1, -1, forest.fallback_}});
    return forest;
  }
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < options.forest_trees; ++t) {
    Rng rng(DeriveSeed(options.seed, 0x7e3e, static_cast<std::uint64_t>(t)));
    for (int i = 0; i < sample; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    std::vector<int> grow(all.begin(), all.begin() + sample / 2);
    std::vector<int> estimate(all.begin() + sample / 2, all.begin() + sample);
    std::sort(grow.begin(), grow.end());
    std::sort(estimate.begin(), estimate.end());

    Tree tree(1);
    Grow(x, y, grow, 0, options, rng, tree, 0);
    std::vector<double> sum(tree.size(), 0.0);
    std::vector<int> count(tree.size(), 0);
    for (int r : estimate) {
      const int leaf = Descend(tree, std::span<const double>(x.row(r).data(), x.cols()));
      sum[leaf] += y[r];
      ++count[leaf];
    }
    for (std::size_t i = 0; i < tree.size(); ++i) {
      tree[i].value = count[i] > 0 ? sum[i] / count[i] : std::nan("");
    }
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

double HonestForest::Predict(std::span<const double> features) const {
  double sum = 0;
  int used = 0;
  for (const auto& tree : trees_) {
    const double v = tree[Descend(tree, features)].value;
    if (std::isnan(v)) continue;
    sum += v;
    ++used;
  }
  return used > 0 ? sum / used : fallback_;
}

json HonestForest::ToJson() const {
  json trees = json::array();
  for (const auto& tree : trees_) {
    json nodes = json::array();
    for (const auto& n : tree) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right,
                       std::isnan(n.value) ? json(nullptr) : json(n.value)});
    }
    trees.push_back(nodes);
  }
  return {{"fallback", fallback_}, {"trees", trees}};
}

HonestForest HonestForest::FromJson(const json& j) {
  HonestForest f;
  f.fallback_ = j.at("fallback").get<double>();
  for (const auto& t : j.at("trees")) {
    Tree tree;
    for (const auto& n : t) {
      tree.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(),
                      n[3].get<int>(), n[4].is_null() ? std::nan("") : n[4].get<double>()});
    }
    f.trees_.push_back(std::move(tree));
  }
  return f;
}

double LogisticFit::Probability(std::span<const double> features) const {
  double eta = coef[0];
  for (std::size_t j = 0; j < features.size(); ++j) eta += coef[j + 1] * features[j];
  return 1.0 / (1.0 + std::exp(-eta));
}

LogisticFit FitLogistic(const FeatureMatrix& x, std::span<const int> labels,
                        double penalty, int max_iter) {
  const int n = static_cast<int>(labels.size());
  const int d = static_cast<int>(x.cols()) + 1;
  Eigen::MatrixXd design(n, d);
  design.col(0).setOnes();
  design.rightCols(d - 1) = x;
  Eigen::VectorXd yv(n);
  for (int i = 0; i < n; ++i) yv[i] = labels[i];
  Eigen::VectorXd pen = Eigen::VectorXd::Constant(d, penalty);
  pen[0] = 0.0;

  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(d);
  const double rate = yv.mean();
  if (rate > 0 && rate < 1) fit.coef[0] = std::log(rate / (1 - rate));
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = design * fit.coef;
    const Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse().matrix();
    const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).max(1e-10).matrix();
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += pen;
    const Eigen::VectorXd grad =
        design.transpose() * (yv - p) - pen.cwiseProduct(fit.coef);
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    fit.coef += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  return fit;
}

}  // namespace adaptex
