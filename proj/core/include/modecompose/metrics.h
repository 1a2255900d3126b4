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

#ifndef MODECOMPOSE_METRICS_H_
#define MODECOMPOSE_METRICS_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "modecompose/types.h"

namespace modecompose {

// Maps raw states (one per row) to evaluation features. The default is the
// identity on flattened pixels.
using FeatureTransform = std::function<Matrix(const Matrix&)>;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // Set when either set has an all-zero k-NN radius (duplicates only).
  bool degenerate = false;
};

// Pairwise Euclidean distances, rows of a against rows of b.
Matrix PairwiseDistances(const Matrix& a, const Matrix& b);

// Distance from each row to its k-th nearest other row.
Vector KnnRadii(const Matrix& points, int k);

// k-NN manifold precision and recall. Both sets need at least k + 1 rows.
PrecisionRecall KnnPrecisionRecall(const Matrix& gen, const Matrix& ref, int k = 3);

double F1(double precision, double recall);

// Frechet distance between Gaussian fits (unbiased covariance, +1e-6 on the
// diagonal).
double FrechetGaussian(const Matrix& gen, const Matrix& ref);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample std / sqrt(n); 0 for n < 2
};
MeanSe MeanStandardError(const std::vector<double>& values);

struct ReferenceSplit {
  std::vector<int> queries;         // faithfulness reference
  std::vector<int> generalization;  // disjoint from queries
};

// Draws `n_queries` query rows and `n_ref` further rows from one class's
// held-out members.
ReferenceSplit BuildReferenceSets(const std::vector<int>& class_members, int n_queries, int n_ref,
                                  uint64_t seed);

}  // namespace modecompose

#endif  // MODECOMPOSE_METRICS_H_
