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

#include "modecompose/gmm.h"

#include <cmath>
#include <numbers>
#include <set>

namespace modecompose {
namespace {

// Per-component log N(x; mean, diag var) including the weight.
Vector WeightedComponentLogs(const GmmDensity& g, const Vector& x) {
  const int k = static_cast<int>(g.components.size());
  Vector logs(k);
  for (int i = 0; i < k; ++i) {
    const GmmComponent& c = g.components[i];
    const Vector diff = x - c.mean;
    double ll = std::log(c.weight);
    ll -= 0.5 * (diff.array().square() / c.var.array()).sum();
    ll -= 0.5 * (c.var.array() * (2.0 * std::numbers::pi)).log().sum();
    logs[i] = ll;
  }
  return logs;
}

double LogSumExp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

Vector Responsibilities(const GmmDensity& g, const Vector& x) {
  const Vector logs = WeightedComponentLogs(g, x);
  const double lse = LogSumExp(logs);
  return (logs.array() - lse).exp().matrix();
}

}  // namespace

void GmmDensity::Validate() const {
  Require(!components.empty(), "mixture has no components");
  const int d = dim();
  Require(d > 0, "mixture dimension must be positive");
  double total = 0.0;
  for (const GmmComponent& c : components) {
    Require(c.weight > 0.0, "mixture weights must be positive");
    Require(c.mean.size() == d && c.var.size() == d, "component dimension mismatch");
    Require((c.var.array() > 0.0).all(), "component variances must be positive");
    total += c.weight;
  }
  Require(std::abs(total - 1.0) < 1e-9, "mixture weights must sum to one");
  if (class_of) Require(class_of->size() == components.size(), "class_of size mismatch");
}

GmmDensity GmmMarginalParams(const GmmDensity& g, int t, const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  const double sab = std::sqrt(ab);
  GmmDensity out = g;
  for (GmmComponent& c : out.components) {
    c.mean = sab * c.mean;
    c.var = (ab * c.var.array() + (1.0 - ab)).matrix();
  }
  return out;
}

GmmDensity RestrictToConditioning(const GmmDensity& g, const Conditioning& c) {
  if (c.is_null()) return g;
  Require(c.kind() == Conditioning::Kind::kClass, "mixture oracle only knows null and class tokens");
  Require(g.class_of.has_value(), "class-conditional scoring needs a class map");
  GmmDensity out;
  out.class_of.emplace();
  double total = 0.0;
  for (size_t i = 0; i < g.components.size(); ++i) {
    if ((*g.class_of)[i] != c.class_id()) continue;
    out.components.push_back(g.components[i]);
    out.class_of->push_back(c.class_id());
    total += g.components[i].weight;
  }
  if (out.components.empty()) {
    throw std::invalid_argument("no mixture components for " + c.ToString());
  }
  for (GmmComponent& comp : out.components) comp.weight /= total;
  return out;
}

double GmmLogDensity(const GmmDensity& g, const Vector& x) {
  return LogSumExp(WeightedComponentLogs(g, x));
}

Vector GmmGradLogDensity(const GmmDensity& g, const Vector& x) {
  const Vector r = Responsibilities(g, x);
  Vector grad = Vector::Zero(x.size());
  for (size_t i = 0; i < g.components.size(); ++i) {
    const GmmComponent& c = g.components[i];
    grad.array() -= r[i] * (x - c.mean).array() / c.var.array();
  }
  return grad;
}

Vector GmmScore(const GmmDensity& g, const Vector& xt, int t, const NoiseSchedule& s,
                const Conditioning& c) {
  Require(xt.size() == g.dim(), "gmm_score: dimension mismatch");
  return GmmGradLogDensity(GmmMarginalParams(RestrictToConditioning(g, c), t, s), xt);
}

double GmmNoisyLogDensity(const GmmDensity& g, const Vector& xt, int t, const NoiseSchedule& s,
                          const Conditioning& c) {
  return GmmLogDensity(GmmMarginalParams(RestrictToConditioning(g, c), t, s), xt);
}

Vector GmmPosteriorMean(const GmmDensity& g, const Vector& xt, int t, const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  const double sab = std::sqrt(ab);
  const Vector r = Responsibilities(GmmMarginalParams(g, t, s), xt);
  Vector mean = Vector::Zero(xt.size());
  for (size_t i = 0; i < g.components.size(); ++i) {
    const GmmComponent& c = g.components[i];
    // x0 | xt, i is Gaussian with precision 1/var + abar/(1 - abar).
    const Eigen::ArrayXd precision = c.var.array().inverse() + ab / (1.0 - ab);
    const Eigen::ArrayXd num = c.mean.array() / c.var.array() + sab * xt.array() / (1.0 - ab);
    mean += r[i] * (num / precision).matrix();
  }
  return mean;
}

Matrix SampleGmm(const GmmDensity& g, int n, Rng& rng, std::vector<int>* component_out) {
  std::vector<double> weights;
  for (const GmmComponent& c : g.components) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = g.dim();
  Matrix out(n, d);
  if (component_out) component_out->assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const int k = pick(rng);
    const GmmComponent& c = g.components[k];
    for (int j = 0; j < d; ++j) out(i, j) = c.mean[j] + std::sqrt(c.var[j]) * normal(rng);
    if (component_out) (*component_out)[i] = k;
  }
  return out;
}

GmmOracle::GmmOracle(GmmDensity density, NoiseSchedule schedule)
    : density_(std::move(density)), schedule_(std::move(schedule)) {
  density_.Validate();
}

int GmmOracle::num_classes() const {
  if (!density_.class_of) return 0;
  std::set<int> ids(density_.class_of->begin(), density_.class_of->end());
  return static_cast<int>(ids.size());
}

Matrix GmmOracle::EpsBatch(const Matrix& xt, int t, const Conditioning& c) const {
  Require(xt.cols() == dim(), "oracle: dimension mismatch");
  const GmmDensity marginal = GmmMarginalParams(RestrictToConditioning(density_, c), t, schedule_);
  const double sigma = schedule_.sqrt_one_minus_alpha_bar(t);
  Matrix eps(xt.rows(), xt.cols());
  for (int i = 0; i < xt.rows(); ++i) {
    eps.row(i) = -sigma * GmmGradLogDensity(marginal, xt.row(i).transpose()).transpose();
  }
  return eps;
}

}  // namespace modecompose
