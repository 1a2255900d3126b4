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

#include "modecompose/metrics.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "modecompose/random.h"

namespace modecompose {

Matrix PairwiseDistances(const Matrix& a, const Matrix& b) {
  Require(a.cols() == b.cols(), "pairwise_distances: feature dimension mismatch");
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Matrix d2 = -2.0 * (a * b.transpose());
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  return d2.cwiseMax(0.0).cwiseSqrt();
}

Vector KnnRadii(const Matrix& points, int k) {
  const Eigen::Index n = points.rows();
  Require(k >= 1 && n >= k + 1, "knn: need at least k + 1 points");
  const Matrix d = PairwiseDistances(points, points);
  Vector radii(n);
  std::vector<double> row(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    size_t m = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row[m++] = d(i, j);
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    radii[i] = row[k - 1];
  }
  return radii;
}

namespace {

// Fraction of `probe` rows inside the k-NN ball of at least one `support` row.
double Coverage(const Matrix& probe, const Matrix& support, const Vector& radii) {
  const Matrix d = PairwiseDistances(probe, support);
  int inside = 0;
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    for (Eigen::Index j = 0; j < support.rows(); ++j) {
      if (d(i, j) <= radii[j]) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / probe.rows();
}

}  // namespace

PrecisionRecall KnnPrecisionRecall(const Matrix& gen, const Matrix& ref, int k) {
  Require(gen.cols() == ref.cols(), "knn_precision_recall: feature dimension mismatch");
  const Vector ref_radii = KnnRadii(ref, k);
  const Vector gen_radii = KnnRadii(gen, k);
  PrecisionRecall pr;
  pr.precision = Coverage(gen, ref, ref_radii);
  pr.recall = Coverage(ref, gen, gen_radii);
  pr.degenerate = ref_radii.maxCoeff() == 0.0 || gen_radii.maxCoeff() == 0.0;
  return pr;
}

double F1(double precision, double recall) {
  Require(precision >= 0.0 && precision <= 1.0 && recall >= 0.0 && recall <= 1.0,
          "f1: inputs must lie in [0, 1]");
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

namespace {

void FitGaussian(const Matrix& x, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  cov.diagonal().array() += 1e-6;
}

Eigen::MatrixXd SqrtPsd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("frechet: eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
    throw NumericalError("frechet: covariance is not PSD after regularisation");
  }
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

double FrechetGaussian(const Matrix& gen, const Matrix& ref) {
  Require(gen.rows() >= 2 && ref.rows() >= 2, "frechet: need at least 2 points per set");
  Require(gen.cols() == ref.cols(), "frechet: feature dimension mismatch");
  Eigen::VectorXd m1, m2;
  Eigen::MatrixXd c1, c2;
  FitGaussian(gen, m1, c1);
  FitGaussian(ref, m2, c2);
  // tr((C1 C2)^{1/2}) = tr((C1^{1/2} C2 C1^{1/2})^{1/2}), symmetric form.
  const Eigen::MatrixXd s1 = SqrtPsd(c1);
  Eigen::MatrixXd inner = s1 * c2 * s1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("frechet: eigendecomposition failed");
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double fd = (m1 - m2).squaredNorm() + c1.trace() + c2.trace() - 2.0 * tr_sqrt;
  return std::max(fd, 0.0);
}

MeanSe MeanStandardError(const std::vector<double>& values) {
  MeanSe r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  for (double v : values) r.mean += v;
  r.mean /= n;
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

ReferenceSplit BuildReferenceSets(const std::vector<int>& class_members, int n_queries, int n_ref,
                                  uint64_t seed) {
  Require(n_queries >= 1 && n_ref >= 1, "reference sets: counts must be positive");
  if (static_cast<int>(class_members.size()) < n_queries + n_ref) {
    throw std::invalid_argument("reference sets: class has " +
                                std::to_string(class_members.size()) + " members, need " +
                                std::to_string(n_queries + n_ref));
  }
  std::vector<int> members = class_members;
  std::sort(members.begin(), members.end());
  Rng rng = MakeRng(seed, {0x2ef});
  std::shuffle(members.begin(), members.end(), rng);
  ReferenceSplit split;
  split.queries.assign(members.begin(), members.begin() + n_queries);
  split.generalization.assign(members.begin() + n_queries, members.begin() + n_queries + n_ref);
  return split;
}

}  // namespace modecompose
