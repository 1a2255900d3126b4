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

#include "modecompose/diffusion.h"

#include <cmath>
#include <string>

namespace modecompose {

NoiseSchedule NoiseSchedule::Linear(int num_steps, double beta_start, double beta_end) {
  Require(num_steps >= 2, "linear schedule needs T >= 2");
  Require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "linear schedule needs 0 < beta_start <= beta_end < 1");
  std::vector<double> beta(num_steps);
  for (int i = 0; i < num_steps; ++i) {
    beta[i] = beta_start + (beta_end - beta_start) * i / (num_steps - 1);
  }
  return FromBetas(std::move(beta));
}

NoiseSchedule NoiseSchedule::FromBetas(std::vector<double> betas) {
  Require(!betas.empty(), "schedule needs at least one step");
  std::vector<double> alpha_bar(betas.size());
  double prod = 1.0;
  for (size_t i = 0; i < betas.size(); ++i) {
    Require(betas[i] > 0.0 && betas[i] < 1.0, "beta must lie in (0, 1)");
    if (i > 0) Require(betas[i] >= betas[i - 1], "beta must be non-decreasing");
    prod *= 1.0 - betas[i];
    alpha_bar[i] = prod;
  }
  return NoiseSchedule(std::move(betas), std::move(alpha_bar));
}

NoiseSchedule NoiseSchedule::FromAlphaBars(const std::vector<double>& alpha_bars) {
  Require(!alpha_bars.empty(), "schedule needs at least one step");
  std::vector<double> beta(alpha_bars.size());
  double prev = 1.0;
  for (size_t i = 0; i < alpha_bars.size(); ++i) {
    Require(alpha_bars[i] > 0.0 && alpha_bars[i] <= prev, "alpha_bar must be non-increasing in (0, 1]");
    beta[i] = 1.0 - alpha_bars[i] / prev;
    prev = alpha_bars[i];
  }
  return NoiseSchedule(std::move(beta), alpha_bars);
}

void NoiseSchedule::CheckTimestep(int t) const {
  if (t < 1 || t > num_steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(num_steps()) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  CheckTimestep(t);
  return beta_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  CheckTimestep(t);
  return alpha_bar_[t - 1];
}

double NoiseSchedule::sqrt_alpha_bar(int t) const { return std::sqrt(alpha_bar(t)); }

double NoiseSchedule::sqrt_one_minus_alpha_bar(int t) const {
  return std::sqrt(1.0 - alpha_bar(t));
}

Vector ForwardNoise(const Vector& x0, int t, const Vector& eps, const NoiseSchedule& s) {
  Require(x0.size() == eps.size(), "forward_noise: dimension mismatch");
  return s.sqrt_alpha_bar(t) * x0 + s.sqrt_one_minus_alpha_bar(t) * eps;
}

Vector ScoreFromEps(const Vector& eps_pred, int t, const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  Require(ab < 1.0, "score_from_eps: alpha_bar == 1 leaves zero noise bandwidth");
  return -eps_pred / std::sqrt(1.0 - ab);
}

Vector EpsFromScore(const Vector& score, int t, const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  Require(ab < 1.0, "eps_from_score: alpha_bar == 1 leaves zero noise bandwidth");
  return -std::sqrt(1.0 - ab) * score;
}

Vector TweedieX0(const Vector& xt, const Vector& score, int t, const NoiseSchedule& s) {
  Require(xt.size() == score.size(), "tweedie_x0: dimension mismatch");
  const double ab = s.alpha_bar(t);
  return (xt + (1.0 - ab) * score) / std::sqrt(ab);
}

}  // namespace modecompose
