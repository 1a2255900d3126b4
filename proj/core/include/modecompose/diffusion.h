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

#ifndef MODECOMPOSE_DIFFUSION_H_
#define MODECOMPOSE_DIFFUSION_H_

#include <vector>

#include "modecompose/types.h"

namespace modecompose {

// Discrete-time variance-preserving schedule. Timesteps are 1-indexed,
// t in {1, ..., T}; t = 0 denotes clean data and is never looked up.
class NoiseSchedule {
 public:
  // Linear interpolation of beta over T steps.
  static NoiseSchedule Linear(int num_steps, double beta_start = 1e-4, double beta_end = 0.02);

  // Explicit per-step variances; betas[0] belongs to t = 1.
  static NoiseSchedule FromBetas(std::vector<double> betas);

  // Explicit cumulative products; must be non-increasing within (0, 1].
  // Mostly useful for pinning alpha_bar in tests.
  static NoiseSchedule FromAlphaBars(const std::vector<double>& alpha_bars);

  int num_steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const;
  double alpha_bar(int t) const;
  double sqrt_alpha_bar(int t) const;
  double sqrt_one_minus_alpha_bar(int t) const;

  void CheckTimestep(int t) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  NoiseSchedule(std::vector<double> beta, std::vector<double> alpha_bar)
      : beta_(std::move(beta)), alpha_bar_(std::move(alpha_bar)) {}

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Vector ForwardNoise(const Vector& x0, int t, const Vector& eps, const NoiseSchedule& s);

// -eps / sqrt(1 - abar_t).
Vector ScoreFromEps(const Vector& eps_pred, int t, const NoiseSchedule& s);
Vector EpsFromScore(const Vector& score, int t, const NoiseSchedule& s);

// Posterior mean E[x0 | xt] from the score of the noisy marginal.
Vector TweedieX0(const Vector& xt, const Vector& score, int t, const NoiseSchedule& s);

}  // namespace modecompose

#endif  // MODECOMPOSE_DIFFUSION_H_
