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

#ifndef MODECOMPOSE_SAMPLER_H_
#define MODECOMPOSE_SAMPLER_H_

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "modecompose/poe.h"
#include "modecompose/score_model.h"

namespace modecompose {

enum class GuidanceMode { kFixed, kVarianceAware };

struct GuidanceConfig {
  double w0 = 1.2;
  double w_max = 2.0;
  GuidanceMode mode = GuidanceMode::kVarianceAware;
  int ddim_steps = 50;
  double eta = 0.0;  // only 0 is supported
  int n_samples = 16;
  // Clamp the predicted clean state to [-1, 1] at every step. Off by default;
  // useful for image data normalised to that range.
  bool clip_x0 = false;
  uint64_t seed = 42;

  void Validate(int num_steps) const;
};

// eps for a batch of states (one per row) at timestep t.
using EpsFn = std::function<Matrix(const Matrix& xt, int t)>;
// Guidance scale at timestep t.
using WeightFn = std::function<double(int t)>;

// Forward-diffused teacher: mean sqrt(abar) mu, var abar var_T + 1 - abar.
std::pair<Vector, Vector> TeacherNoisyParams(const PoeTeacher& teacher, int t,
                                             const NoiseSchedule& s);

// sqrt(1 - abar) (xt - sqrt(abar) mu) / var_t, row-wise.
Matrix TeacherEpsBatch(const PoeTeacher& teacher, const Matrix& xt, int t, const NoiseSchedule& s);
Vector TeacherEps(const PoeTeacher& teacher, const Vector& xt, int t, const NoiseSchedule& s);

// Fixed: w0. Variance-aware: min(w0 * mean(var_t), w_max).
double GuidanceWeight(const PoeTeacher& teacher, int t, const NoiseSchedule& s,
                      const GuidanceConfig& cfg);

// uncond + w (cond - uncond).
Matrix CfgCompose(const Matrix& eps_uncond, const Matrix& eps_cond, double w);
Vector CfgCompose(const Vector& eps_uncond, const Vector& eps_cond, double w);

// Uniform sub-grid of [1, T] with both endpoints, descending.
std::vector<int> DdimTimesteps(int num_steps, int ddim_steps);

// Deterministic DDIM from N(0, I). Sample i starts from the stream
// (seed, i), so the first n samples do not depend on n_samples.
Matrix DdimSample(const EpsFn& eps_uncond, const EpsFn& eps_cond, const WeightFn& weight,
                  const NoiseSchedule& s, int dim, const GuidanceConfig& cfg);

// CFG with the analytic teacher as conditional branch and the model's null
// token as unconditional branch.
Matrix SampleWithTeacher(const ScoreModel& model, const PoeTeacher& teacher,
                         const GuidanceConfig& cfg);

// Plain unconditional sampling with the model's null token.
Matrix SampleUnconditional(const ScoreModel& model, const GuidanceConfig& cfg);

// 10 uniformly spaced timesteps in [50, 500], clipped to the schedule.
std::vector<int> DefaultEvalTimesteps(int num_steps);

// Average ||eps - eps_theta(xt, t, c)||^2 over t_eval and n_eps noise draws
// shared across classes. Indexed by class id.
std::vector<double> ScoreTrainedClasses(const ScoreModel& model, const Vector& x_q,
                                        const std::vector<int>& t_eval, int n_eps, uint64_t seed);

struct TopkChoice {
  std::vector<int> classes;     // best first
  std::vector<double> weights;  // softmax(-loss / tau)
};

// The k lowest-loss classes (ties to the lower id) and their weights.
TopkChoice SelectTopk(const std::vector<double>& losses, int k, double tau_tk);

// k = 1: conditional prediction. k >= 2: uncond + sum_k w_k (cond_k - uncond).
Matrix TopkEpsBatch(const ScoreModel& model, const Matrix& xt, int t, const TopkChoice& choice);

Matrix SampleTopk(const ScoreModel& model, const TopkChoice& choice, const GuidanceConfig& cfg);

// N(x_q, sigma_q^2 I).
PoeTeacher QueryOnlyTeacher(const Vector& x_q, double sigma_q);

}  // namespace modecompose

#endif  // MODECOMPOSE_SAMPLER_H_
