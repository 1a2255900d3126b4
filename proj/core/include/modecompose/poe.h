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

#ifndef MODECOMPOSE_POE_H_
#define MODECOMPOSE_POE_H_

#include <span>
#include <vector>

#include "modecompose/mode_discovery.h"
#include "modecompose/types.h"

namespace modecompose {

// Composed diagonal Gaussian teacher N(mu, diag(var)). `selected` and
// `weights` record where it came from; both are empty for hand-built
// teachers such as the query-only baseline.
struct PoeTeacher {
  Vector mu;
  Vector var;
  std::vector<int> selected;  // pool indices in selection order
  Matrix weights;             // K x d, row k belongs to selected[k]
};

// Log-likelihood values below this are clamped.
inline constexpr double kLogLikFloor = -1e12;

// M x d matrix of log N(x_q[r]; m_j[r], var_j[r]).
Matrix PerDimLogLik(const std::vector<PrototypeExpert>& pool, const Vector& x_q);

// F(S) = sum_r max_{j in S} L(j, r).
double Coverage(std::span<const int> subset, const Matrix& loglik);

// F(S + {j}) - F(S); F(empty) is treated as -infinity per dimension, so the
// gain from the empty set is the singleton value.
double MarginalGain(std::span<const int> subset, int j, const Matrix& loglik);

// Best singleton, then K - 1 rounds of largest marginal gain. Ties go to the
// lowest index.
std::vector<int> GreedySelect(const Matrix& loglik, int k);

// Per-dimension softmax of L(j, r) / tau over the selected rows; K x d.
Matrix CompositionWeights(std::span<const int> selected, const Matrix& loglik, double tau);

// Precision-weighted product of diagonal Gaussians. Row k of `weights`
// belongs to experts[k].
PoeTeacher PoeProduct(const std::vector<PrototypeExpert>& experts, const Matrix& weights);

struct CompositionConfig {
  int k = 3;
  double tau = 0.5;
};

// Log-likelihood, greedy selection, weights and product in one call.
PoeTeacher ComposeTeacher(const std::vector<PrototypeExpert>& pool, const Vector& x_q,
                          const CompositionConfig& cfg);

}  // namespace modecompose

#endif  // MODECOMPOSE_POE_H_
