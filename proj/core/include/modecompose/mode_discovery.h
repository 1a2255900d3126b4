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

#ifndef MODECOMPOSE_MODE_DISCOVERY_H_
#define MODECOMPOSE_MODE_DISCOVERY_H_

#include <cstdint>
#include <vector>

#include "modecompose/random.h"
#include "modecompose/score_model.h"

namespace modecompose {

enum class InitStrategy { kQueryCentered, kHybrid };

struct AscentConfig {
  // Inclusive timestep grid [t_start, t_end] with stride t_step.
  int t_start = 50;
  int t_end = 400;
  int t_step = 25;
  int n_per_t = 128;
  int n_iters = 150;
  double base_step = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  InitStrategy init = InitStrategy::kHybrid;
  double query_fraction = 0.5;  // hybrid only
  // Non-positive values select the dimension-scaled defaults
  // 1e-3 * sqrt(d) and 0.05 * sqrt(d).
  double grad_tol = -1.0;
  double merge_tol = -1.0;
  // Converged candidates must end below accept_factor * grad_tol.
  double accept_factor = 10.0;
  int hutchinson_probes = 4;
  double hutchinson_step = 5e-3;
  double var_floor = 1e-4;
  // Hessian diagonal entries above -curvature_floor count as non-concave.
  double curvature_floor = 1e-6;
  uint64_t seed = 42;

  std::vector<int> TimestepGrid() const;
  double GradTol(int dim) const;
  double MergeTol(int dim) const;
  void Validate(int num_steps) const;
};

struct ModeCandidate {
  Vector x_star;  // x_t-space mode
  int t = 0;
  double final_grad_norm = 0.0;
  int iterations_used = 0;
  std::vector<double> grad_norm_trace;  // score norm before each update
};

struct PrototypeExpert {
  Vector m;    // clean-space mean
  Vector var;  // clean-space diagonal variance
  int origin_t = 0;
  double origin_grad_norm = 0.0;
  int nonconcave_dims = 0;
};

struct HutchinsonEstimate {
  Vector cov_t;          // diag of the local covariance at the mode, in x_t space
  Vector hessian_diag;   // raw estimate of diag(grad^2 log p_t)
  int nonconcave_dims = 0;
};

struct DiscoveryDiagnostics {
  struct PerTimestep {
    int t = 0;
    int starts = 0;
    int accepted = 0;
    int survivors = 0;
  };
  std::vector<PerTimestep> per_t;
  int pool_size = 0;  // M
};

struct DiscoveryResult {
  std::vector<PrototypeExpert> pool;
  std::vector<ModeCandidate> modes;  // aligned with pool
  DiscoveryDiagnostics diagnostics;
};

// Query-noised starts (and, for hybrid, N(0, I) starts). Start i draws from
// the stream (seed, t, i).
std::vector<Vector> InitStarts(const Vector& x_q, int t, const AscentConfig& cfg,
                               const NoiseSchedule& s);

// Adam ascent on log p_t using the unconditional score.
ModeCandidate AscendMode(const ScoreModel& model, const Vector& x_init, int t,
                         const AscentConfig& cfg);

// Same update rule for many starts at once; rows are independent.
std::vector<ModeCandidate> AscendModes(const ScoreModel& model, const std::vector<Vector>& starts,
                                       int t, const AscentConfig& cfg);

// Merges same-timestep candidates closer than merge_tol in clean space,
// keeping the lowest final gradient norm. Output sorted by t, then by the
// clean-space mean lexicographically.
std::vector<ModeCandidate> DedupModes(const std::vector<ModeCandidate>& candidates,
                                      double merge_tol, const NoiseSchedule& s);

// Rademacher-probe estimate of diag(H), H = Hessian of log p_t, from central
// differences of the score; returns cov_t = -1 / diag(H).
HutchinsonEstimate HutchinsonDiagCov(const ScoreModel& model, const ModeCandidate& mode,
                                     int n_probes, double fd_step, double curvature_floor,
                                     Rng& rng);

// m = x* / sqrt(abar); var = max((cov_t - (1 - abar)) / abar, var_floor).
PrototypeExpert PullToClean(const ModeCandidate& mode, const Vector& cov_t,
                            const NoiseSchedule& s, double var_floor);

// Init, ascend, filter, dedup, estimate covariance and pull back, over the
// whole timestep grid. Throws if no candidate survives.
DiscoveryResult DiscoverPrototypes(const ScoreModel& model, const Vector& x_q,
                                   const AscentConfig& cfg);

}  // namespace modecompose

#endif  // MODECOMPOSE_MODE_DISCOVERY_H_
