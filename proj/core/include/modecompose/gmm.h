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

#ifndef MODECOMPOSE_GMM_H_
#define MODECOMPOSE_GMM_H_

#include <optional>
#include <vector>

#include "modecompose/random.h"
#include "modecompose/score_model.h"

namespace modecompose {

struct GmmComponent {
  double weight = 1.0;
  Vector mean;
  Vector var;  // diagonal
};

// Diagonal Gaussian mixture. `class_of[i]` optionally tags component i with
// a class id for class-conditional scoring.
struct GmmDensity {
  std::vector<GmmComponent> components;
  std::optional<std::vector<int>> class_of;

  int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }
  // Throws unless weights are positive and sum to one and variances positive.
  void Validate() const;
};

// Closed-form noisy marginal: means sqrt(abar) mu, variances
// abar sigma^2 + 1 - abar, weights unchanged.
GmmDensity GmmMarginalParams(const GmmDensity& g, int t, const NoiseSchedule& s);

// Components selected by the conditioning (all for Null). Weights are
// renormalised over the selection.
GmmDensity RestrictToConditioning(const GmmDensity& g, const Conditioning& c);

// log p(x) of a diagonal mixture.
double GmmLogDensity(const GmmDensity& g, const Vector& x);

// grad log p(x) of a diagonal mixture, log-sum-exp stabilised.
Vector GmmGradLogDensity(const GmmDensity& g, const Vector& x);

// grad_x log p_t(x) for the conditioning-restricted marginal.
Vector GmmScore(const GmmDensity& g, const Vector& xt, int t, const NoiseSchedule& s,
                const Conditioning& c);

double GmmNoisyLogDensity(const GmmDensity& g, const Vector& xt, int t, const NoiseSchedule& s,
                          const Conditioning& c);

// Exact E[x0 | xt] computed from per-component conjugate posteriors; an
// independent route to the Tweedie map.
Vector GmmPosteriorMean(const GmmDensity& g, const Vector& xt, int t, const NoiseSchedule& s);

// Draws n samples; returns component indices in `component_out` if given.
Matrix SampleGmm(const GmmDensity& g, int n, Rng& rng, std::vector<int>* component_out = nullptr);

// ScoreModel backed by the exact mixture.
class GmmOracle final : public ScoreModel {
 public:
  GmmOracle(GmmDensity density, NoiseSchedule schedule);

  const NoiseSchedule& schedule() const override { return schedule_; }
  int dim() const override { return density_.dim(); }
  int num_classes() const override;
  Matrix EpsBatch(const Matrix& xt, int t, const Conditioning& c) const override;

  const GmmDensity& density() const { return density_; }

 private:
  GmmDensity density_;
  NoiseSchedule schedule_;
};

}  // namespace modecompose

#endif  // MODECOMPOSE_GMM_H_
