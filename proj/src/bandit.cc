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

#include "adaptex/bandit.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace adaptex {

void BanditConfig::Validate(int n_arms) const {
  if (n_arms < 2) ThrowUsage("bandit needs at least two arms");
  if (!(ridge_penalty_interactions > 0.0)) {
    ThrowUsage("bandit.ridge_penalty_interactions must be positive");
  }
  if (!(prior_var_main > 0.0)) ThrowUsage("bandit.prior_var_main must be positive");
  if (!(probability_floor >= 0.0) || probability_floor * n_arms > 1.0 + 1e-12) {
    ThrowUsage("bandit.probability_floor times the number of arms exceeds 1");
  }
  if (n_posterior_draws < 1) ThrowUsage("bandit.n_posterior_draws must be >= 1");
  if (!(initial_noise_var > 0.0)) ThrowUsage("bandit.initial_noise_var must be positive");
  if (fixed_noise_var && !(*fixed_noise_var > 0.0)) {
    ThrowUsage("bandit.fixed_noise_var must be positive");
  }
  if (mode == AssignmentMode::kFixed) {
    if (static_cast<int>(fixed_probabilities.size()) != n_arms) {
      ThrowUsage("bandit.fixed_probabilities must have one entry per arm");
    }
    double sum = 0;
    for (double p : fixed_probabilities) {
      if (!(p > 0.0)) ThrowUsage("bandit.fixed_probabilities must be positive");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) ThrowUsage("bandit.fixed_probabilities must sum to 1");
  }
}

Eigen::VectorXd DesignLayout::Row(std::span<const double> features,
                                  int arm) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(dim());
  row[0] = 1.0;
  for (int j = 0; j < n_features; ++j) row[feature_offset() + j] = features[j];
  if (arm > 0) {
    row[arm_offset() + arm - 1] = 1.0;
    const int off = interaction_offset(arm);
    for (int j = 0; j < n_features; ++j) row[off + j] = features[j];
  }
  return row;
}

Eigen::MatrixXd DesignLayout::ArmMap(std::span<const double> features) const {
  Eigen::MatrixXd map(n_arms, dim());
  for (int k = 0; k < n_arms; ++k) map.row(k) = Row(features, k).transpose();
  return map;
}

namespace {

// Exchangeable across arms: every pairwise arm contrast gets the same prior
// variance, so the prior favors no arm.
Eigen::MatrixXd PriorCovariance(const BanditConfig& config, int n_arms,
                                int n_features) {
  const DesignLayout layout{n_arms, n_features};
  const int d = layout.dim();
  const double v = config.prior_var_main;
  const double vi = 1.0 / config.ridge_penalty_interactions;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  cov(0, 0) = v;
  for (int a = 1; a < n_arms; ++a) {
    for (int b = 1; b < n_arms; ++b) {
      cov(layout.arm_offset() + a - 1, layout.arm_offset() + b - 1) =
          a == b ? v : v / 2;
    }
  }
  for (int j = 0; j < n_features; ++j) {
    cov(layout.feature_offset() + j, layout.feature_offset() + j) = v;
    for (int a = 1; a < n_arms; ++a) {
      for (int b = 1; b < n_arms; ++b) {
        cov(layout.interaction_offset(a) + j, layout.interaction_offset(b) + j) =
            a == b ? vi : vi / 2;
      }
    }
  }
  return cov;
}

// Nonzero column indices of a design row.
void RowSupport(const DesignLayout& layout, std::span<const double> features,
                int arm, std::vector<int>& idx, std::vector<double>& val) {
  idx.clear();
  val.clear();
  idx.push_back(0);
  val.push_back(1.0);
  if (arm > 0) {
    idx.push_back(layout.arm_offset() + arm - 1);
    val.push_back(1.0);
  }
  for (int j = 0; j < layout.n_features; ++j) {
    idx.push_back(layout.feature_offset() + j);
    val.push_back(features[j]);
  }
  if (arm > 0) {
    for (int j = 0; j < layout.n_features; ++j) {
      idx.push_back(layout.interaction_offset(arm) + j);
      val.push_back(features[j]);
    }
  }
}

struct Fit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Fit SolvePosterior(const Eigen::MatrixXd& prior_precision,
                   const Eigen::MatrixXd& xtwx, const Eigen::VectorXd& xtwy,
                   double noise_var) {
  Eigen::MatrixXd precision = prior_precision + xtwx / noise_var;
  precision = 0.5 * (precision + precision.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kInternal, "posterior precision is not positive definite");
  }
  Fit fit;
  const int d = static_cast<int>(precision.rows());
  fit.cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
  fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
  fit.mean = llt.solve(xtwy / noise_var);
  return fit;
}

}  // namespace

PosteriorState InitState(const BanditConfig& config, int n_arms,
                         int n_features) {
  config.Validate(n_arms);
  if (n_features < 0) ThrowUsage("negative feature count");
  PosteriorState s;
  s.n_arms = n_arms;
  s.n_features = n_features;
  s.coef_cov = PriorCovariance(config, n_arms, n_features);
  s.coef_mean = Eigen::VectorXd::Zero(s.layout().dim());
  s.noise_var = config.fixed_noise_var.value_or(config.initial_noise_var);
  return s;
}

PosteriorState UpdatePosterior(const PosteriorState& previous,
                               std::span<const Observation> history,
                               const BanditConfig& config) {
  const DesignLayout layout = previous.layout();
  const int d = layout.dim();
  const double n = static_cast<double>(history.size());

  double weight_sum = 0;
  for (const auto& obs : history) {
    if (!(obs.propensity > 0.0)) ThrowData("observation propensity must be positive");
    if (!std::isfinite(obs.response)) ThrowData("observation response is not finite");
    if (obs.arm < 0 || obs.arm >= layout.n_arms) ThrowData("observation arm out of range");
    if (static_cast<int>(obs.features.size()) != layout.n_features) {
      ThrowData("observation feature length does not match the posterior");
    }
    weight_sum += 1.0 / obs.propensity;
  }

  PosteriorState next = InitState(config, layout.n_arms, layout.n_features);
  next.batch_index = previous.batch_index + 1;
  next.n_observed = static_cast<std::int64_t>(history.size());
  if (history.empty()) return next;

  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(d);
  std::vector<double> weights;
  weights.reserve(history.size());
  std::vector<int> idx;
  std::vector<double> val;
  for (const auto& obs : history) {
    const double w = (1.0 / obs.propensity) * n / weight_sum;
    weights.push_back(w);
    RowSupport(layout, obs.features, obs.arm, idx, val);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      xtwy[idx[a]] += w * val[a] * obs.response;
      for (std::size_t b = 0; b < idx.size(); ++b) {
        xtwx(idx[a], idx[b]) += w * val[a] * val[b];
      }
    }
  }

  const Eigen::MatrixXd prior_precision = next.coef_cov.llt().solve(
      Eigen::MatrixXd::Identity(d, d));
  double noise_var = config.fixed_noise_var.value_or(previous.noise_var);
  Fit fit = SolvePosterior(prior_precision, xtwx, xtwy, noise_var);

  if (!config.fixed_noise_var) {
    double ssr = 0;
    for (std::size_t i = 0; i < history.size(); ++i) {
      RowSupport(layout, history[i].features, history[i].arm, idx, val);
      double pred = 0;
      for (std::size_t a = 0; a < idx.size(); ++a) pred += val[a] * fit.mean[idx[a]];
      const double r = history[i].response - pred;
      ssr += weights[i] * r * r;
    }
    const double df = (fit.cov * xtwx).trace() / noise_var;
    if (n - df >= 1.0) {
      noise_var = std::max(ssr / (n - df), 1e-6);
      fit = SolvePosterior(prior_precision, xtwx, xtwy, noise_var);
    }
  }

  next.coef_mean = std::move(fit.mean);
  next.coef_cov = std::move(fit.cov);
  next.noise_var = noise_var;
  return next;
}

std::vector<double> ProbabilityOfBest(const PosteriorState& state,
                                      std::span<const double> features,
                                      int n_draws, Rng& rng) {
  if (static_cast<int>(features.size()) != state.n_features) {
    ThrowData("context length does not match the posterior");
  }
  const int k = state.n_arms;
  const Eigen::MatrixXd map = state.layout().ArmMap(features);
  const Eigen::VectorXd mean = map * state.coef_mean;
  Eigen::MatrixXd cov = map * state.coef_cov * map.transpose();
  cov = 0.5 * (cov + cov.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::kInternal, "eigendecomposition of arm covariance failed");
  }
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-8 * scale) {
    ThrowData("posterior covariance is not positive semidefinite");
  }
  const Eigen::MatrixXd root =
      eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();

  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(k, n_draws);
  for (int draw = 0; draw < n_draws; ++draw) {
    for (int i = 0; i < k; ++i) z(i, draw) = normal(rng);
  }
  const Eigen::MatrixXd theta = (root * z).colwise() + mean;
  std::vector<int> wins(k, 0);
  for (int draw = 0; draw < n_draws; ++draw) {
    int best = 0;
    for (int i = 1; i < k; ++i) {
      if (theta(i, draw) > theta(best, draw)) best = i;
    }
    ++wins[best];
  }
  std::vector<double> probs(k);
  for (int i = 0; i < k; ++i) probs[i] = wins[i] / static_cast<double>(n_draws);
  return probs;
}

std::vector<double> AssignmentProbabilities(const PosteriorState& state,
                                            std::span<const double> features,
                                            const BanditConfig& config,
                                            std::uint64_t stream) {
  const int k = state.n_arms;
  switch (config.mode) {
    case AssignmentMode::kUniform:
      return std::vector<double>(k, 1.0 / k);
    case AssignmentMode::kFixed:
      return config.fixed_probabilities;
    case AssignmentMode::kThompson:
      break;
  }
  Rng rng(DeriveSeed(config.seed, static_cast<std::uint64_t>(state.batch_index),
                     stream));
  const auto raw = ProbabilityOfBest(state, features, config.n_posterior_draws, rng);
  return ApplyFloor(raw, config.probability_floor);
}

std::vector<double> ApplyFloor(std::span<const double> probs, double floor) {
  const int k = static_cast<int>(probs.size());
  if (floor * k > 1.0 + 1e-12) ThrowUsage("probability floor times arms exceeds 1");
  std::vector<double> out(probs.begin(), probs.end());
  if (floor <= 0.0) return out;
  std::vector<bool> pinned(k, false);
  for (;;) {
    int n_pinned = 0;
    double free_mass = 0;
    bool changed = false;
    for (int i = 0; i < k; ++i) {
      if (!pinned[i] && out[i] < floor) {
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
    for (int i = 0; i < k; ++i) {
      if (pinned[i]) {
        ++n_pinned;
      } else {
        free_mass += out[i];
      }
    }
    const double target = 1.0 - n_pinned * floor;
    for (int i = 0; i < k; ++i) {
      if (pinned[i]) {
        out[i] = floor;
      } else if (free_mass > 0) {
        out[i] *= target / free_mass;
      }
    }
  }
  return out;
}

int DrawAssignment(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cum = 0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    cum += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cum) return last_positive;
  }
  return last_positive;  // rounding slack in the cumulative sum
}

std::uint64_t HashFeatures(std::span<const double> features) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : features) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = MixSeed(h ^ bits);
  }
  return h;
}

namespace {

std::string Hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

std::string PosteriorState::Serialize() const {
  std::ostringstream out;
  const int d = static_cast<int>(coef_mean.size());
  out << "adaptex-posterior 1\n"
      << "n_arms " << n_arms << "\n"
      << "n_features " << n_features << "\n"
      << "n_observed " << n_observed << "\n"
      << "batch_index " << batch_index << "\n"
      << "noise_var " << Hex(noise_var) << "\n"
      << "coef_mean " << d;
  for (int i = 0; i < d; ++i) out << ' ' << Hex(coef_mean[i]);
  out << "\ncoef_cov " << d << ' ' << d;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out << ' ' << Hex(coef_cov(i, j));
  }
  out << "\n";
  return out.str();
}

PosteriorState PosteriorState::Deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  auto expect = [&](const char* key) {
    if (!(in >> tag) || tag != key) {
      ThrowData(std::string("posterior snapshot: expected '") + key + "'");
    }
  };
  auto real = [&]() {
    std::string tok;
    if (!(in >> tok)) ThrowData("posterior snapshot truncated");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) ThrowData("posterior snapshot: bad real '" + tok + "'");
    return v;
  };
  expect("adaptex-posterior");
  in >> version;
  if (version != 1) ThrowData("posterior snapshot: unsupported version");
  PosteriorState s;
  expect("n_arms");
  in >> s.n_arms;
  expect("n_features");
  in >> s.n_features;
  expect("n_observed");
  in >> s.n_observed;
  expect("batch_index");
  in >> s.batch_index;
  expect("noise_var");
  s.noise_var = real();
  int d = 0, d2 = 0;
  expect("coef_mean");
  in >> d;
  if (!in || d != s.layout().dim()) ThrowData("posterior snapshot: dimension mismatch");
  s.coef_mean.resize(d);
  for (int i = 0; i < d; ++i) s.coef_mean[i] = real();
  expect("coef_cov");
  in >> d >> d2;
  if (!in || d != s.layout().dim() || d2 != d) {
    ThrowData("posterior snapshot: covariance dimension mismatch");
  }
  s.coef_cov.resize(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) s.coef_cov(i, j) = real();
  }
  return s;
}

}  // namespace adaptex
