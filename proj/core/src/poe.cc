// Copyright 2026 The modecompose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modecompose/poe.h"

#include <cmath>
#include <limits>
#include <numbers>

namespace modecompose {

Matrix PerDimLogLik(const std::vector<PrototypeExpert>& pool, const Vector& x_q) {
  Require(!pool.empty(), "per_dim_loglik: empty prototype pool");
  const Eigen::Index d = x_q.size();
  Matrix L(pool.size(), d);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (size_t j = 0; j < pool.size(); ++j) {
    const PrototypeExpert& p = pool[j];
    Require(p.m.size() == d && p.var.size() == d, "per_dim_loglik: dimension mismatch");
    Require((p.var.array() > 0.0).all(), "per_dim_loglik: variances must be positive");
    const Eigen::ArrayXd diff = x_q.array() - p.m.array();
    const Eigen::ArrayXd l =
        -0.5 * (log2pi + p.var.array().log()) - diff.square() / (2.0 * p.var.array());
    L.row(j) = l.max(kLogLikFloor).matrix().transpose();
  }
  return L;
}

double Coverage(std::span<const int> subset, const Matrix& loglik) {
  Require(!subset.empty(), "coverage: empty subset");
  Eigen::RowVectorXd best =
      Eigen::RowVectorXd::Constant(loglik.cols(), -std::numeric_limits<double>::infinity());
  for (int j : subset) {
    Require(j >= 0 && j < loglik.rows(), "coverage: index out of range");
    best = best.cwiseMax(loglik.row(j));
  }
  return best.sum();
}

double MarginalGain(std::span<const int> subset, int j, const Matrix& loglik) {
  Require(j >= 0 && j < loglik.rows(), "marginal_gain: index out of range");
  if (subset.empty()) return loglik.row(j).sum();
  Eigen::RowVectorXd best =
      Eigen::RowVectorXd::Constant(loglik.cols(), -std::numeric_limits<double>::infinity());
  for (int i : subset) best = best.cwiseMax(loglik.row(i));
  // Only dimensions where j beats the current maximum contribute.
  return (loglik.row(j) - best).cwiseMax(0.0).sum();
}

std::vector<int> GreedySelect(const Matrix& loglik, int k) {
  const int m = static_cast<int>(loglik.rows());
  Require(k >= 1, "greedy_select: K must be >= 1");
  Require(k <= m, "greedy_select: K exceeds the pool size");
  std::vector<int> selected;
  std::vector<bool> used(m, false);
  for (int round = 0; round < k; ++round) {
    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      if (used[j]) continue;
      const double gain = MarginalGain(selected, j, loglik);
      if (best < 0 || gain > best_gain) {
        best = j;
        best_gain = gain;
      }
    }
    used[best] = true;
    selected.push_back(best);
  }
  return selected;
}

Matrix CompositionWeights(std::span<const int> selected, const Matrix& loglik, double tau) {
  Require(tau > 0.0, "composition_weights: tau must be positive");
  Require(!selected.empty(), "composition_weights: empty selection");
  const Eigen::Index d = loglik.cols();
  Matrix w(selected.size(), d);
  for (size_t k = 0; k < selected.size(); ++k) {
    Require(selected[k] >= 0 && selected[k] < loglik.rows(), "composition_weights: bad index");
    w.row(k) = loglik.row(selected[k]) / tau;
  }
  const Eigen::RowVectorXd col_max = w.colwise().maxCoeff();
  w.rowwise() -= col_max;
  w = w.array().exp().matrix();
  const Eigen::RowVectorXd col_sum = w.colwise().sum();
  for (Eigen::Index r = 0; r < d; ++r) w.col(r) /= col_sum[r];
  return w;
}

PoeTeacher PoeProduct(const std::vector<PrototypeExpert>& experts, const Matrix& weights) {
  Require(!experts.empty(), "poe_product: no experts");
  Require(weights.rows() == static_cast<Eigen::Index>(experts.size()),
          "poe_product: one weight row per expert required");
  const Eigen::Index d = experts[0].m.size();
  Require(weights.cols() == d, "poe_product: weight dimension mismatch");
  Require((weights.array() >= 0.0).all(), "poe_product: weights must be non-negative");
  Require((weights.colwise().sum().array() <= 1.0 + 1e-9).all(),
          "poe_product: per-dimension weights must sum to at most 1");

  Eigen::ArrayXd precision = Eigen::ArrayXd::Zero(d);
  Eigen::ArrayXd weighted_mean = Eigen::ArrayXd::Zero(d);
  for (size_t k = 0; k < experts.size(); ++k) {
    const PrototypeExpert& e = experts[k];
    Require(e.m.size() == d && e.var.size() == d, "poe_product: dimension mismatch");
    const Eigen::ArrayXd p = weights.row(k).transpose().array() / e.var.array();
    precision += p;
    weighted_mean += p * e.m.array();
  }
  for (Eigen::Index r = 0; r < d; ++r) {
    if (!(precision[r] > 0.0)) {
      throw std::invalid_argument("poe_product: zero total precision in dimension " +
                                  std::to_string(r));
    }
  }
  PoeTeacher t;
  t.mu = (weighted_mean / precision).matrix();
  t.var = precision.inverse().matrix();
  t.weights = weights;
  return t;
}

PoeTeacher ComposeTeacher(const std::vector<PrototypeExpert>& pool, const Vector& x_q,
                          const CompositionConfig& cfg) {
  const Matrix L = PerDimLogLik(pool, x_q);
  const std::vector<int> selected = GreedySelect(L, cfg.k);
  const Matrix w = CompositionWeights(selected, L, cfg.tau);
  std::vector<PrototypeExpert> experts;
  for (int j : selected) experts.push_back(pool[j]);
  PoeTeacher t = PoeProduct(experts, w);
  t.selected = selected;
  return t;
}

}  // namespace modecompose
