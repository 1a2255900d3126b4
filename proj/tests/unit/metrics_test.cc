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
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "modecompose/random.h"

namespace modecompose {
namespace {

Matrix Column(std::initializer_list<double> v) {
  Matrix m(v.size(), 1);
  int i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Direct O(n^2) transcription of the manifold estimate.
PrecisionRecall BruteForce(const Matrix& gen, const Matrix& ref, int k) {
  auto radii = [k](const Matrix& p) {
    std::vector<double> r(p.rows());
    for (int i = 0; i < p.rows(); ++i) {
      std::vector<double> d;
      for (int j = 0; j < p.rows(); ++j)
        if (j != i) d.push_back((p.row(i) - p.row(j)).norm());
      std::sort(d.begin(), d.end());
      r[i] = d[k - 1];
    }
    return r;
  };
  auto covered = [](const Matrix& probe, const Matrix& support, const std::vector<double>& r) {
    int n = 0;
    for (int i = 0; i < probe.rows(); ++i) {
      bool in = false;
      for (int j = 0; j < support.rows() && !in; ++j) in = (probe.row(i) - support.row(j)).norm() <= r[j];
      n += in;
    }
    return static_cast<double>(n) / probe.rows();
  };
  return {covered(gen, ref, radii(ref)), covered(ref, gen, radii(gen)), false};
}

TEST(KnnPrecisionRecall, SixPointHandCase) {
  const Matrix ref = Column({0.0, 1.0, 3.0});
  const Matrix gen = Column({0.5, 1.2, 10.0});
  const PrecisionRecall pr = KnnPrecisionRecall(gen, ref, 1);
  EXPECT_DOUBLE_EQ(pr.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(pr.recall, 1.0);
  EXPECT_NEAR(F1(pr.precision, pr.recall), 0.8, 1e-12);
  EXPECT_FALSE(pr.degenerate);
}

TEST(KnnPrecisionRecall, MatchesBruteForce) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix gen = StandardNormal(30, 4, rng);
    Matrix ref = 1.3 * StandardNormal(25, 4, rng);
    ref.col(0).array() += 0.5;
    const PrecisionRecall a = KnnPrecisionRecall(gen, ref, 3);
    const PrecisionRecall b = BruteForce(gen, ref, 3);
    EXPECT_DOUBLE_EQ(a.precision, b.precision);
    EXPECT_DOUBLE_EQ(a.recall, b.recall);
  }
}

TEST(KnnPrecisionRecall, SymmetryAndIdentity) {
  Rng rng(3);
  const Matrix a = StandardNormal(40, 3, rng);
  const Matrix b = StandardNormal(35, 3, rng) * 2.0;
  const PrecisionRecall ab = KnnPrecisionRecall(a, b);
  const PrecisionRecall ba = KnnPrecisionRecall(b, a);
  EXPECT_DOUBLE_EQ(ab.precision, ba.recall);
  EXPECT_DOUBLE_EQ(ab.recall, ba.precision);
  const PrecisionRecall self = KnnPrecisionRecall(a, a);
  EXPECT_DOUBLE_EQ(self.precision, 1.0);
  EXPECT_DOUBLE_EQ(self.recall, 1.0);
}

TEST(KnnPrecisionRecall, PermutationInvariant) {
  Rng rng(8);
  const Matrix gen = StandardNormal(20, 2, rng);
  const Matrix ref = StandardNormal(20, 2, rng);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(20, 2);
  for (int i = 0; i < 20; ++i) shuffled.row(i) = gen.row(perm[i]);
  const PrecisionRecall a = KnnPrecisionRecall(gen, ref);
  const PrecisionRecall b = KnnPrecisionRecall(shuffled, ref);
  EXPECT_DOUBLE_EQ(a.precision, b.precision);
  EXPECT_DOUBLE_EQ(a.recall, b.recall);
}

TEST(KnnPrecisionRecall, DisjointSetsScoreZero) {
  Rng rng(5);
  Matrix far = StandardNormal(10, 2, rng);
  far.array() += 100.0;
  const PrecisionRecall pr = KnnPrecisionRecall(StandardNormal(10, 2, rng), far);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 0.0);
  EXPECT_EQ(F1(pr.precision, pr.recall), 0.0);
}

TEST(KnnPrecisionRecall, FlagsDuplicateSets) {
  const Matrix dup = Matrix::Zero(5, 2);
  Rng rng(1);
  EXPECT_TRUE(KnnPrecisionRecall(dup, StandardNormal(5, 2, rng)).degenerate);
  EXPECT_THROW(KnnPrecisionRecall(Matrix::Zero(3, 2), Matrix::Zero(5, 2)), std::invalid_argument);
}

TEST(KnnRadii, HandCase) {
  const Vector r = KnnRadii(Column({0.0, 1.0, 3.0, 7.0}), 2);
  EXPECT_DOUBLE_EQ(r[0], 3.0);
  EXPECT_DOUBLE_EQ(r[1], 2.0);
  EXPECT_DOUBLE_EQ(r[2], 3.0);
  EXPECT_DOUBLE_EQ(r[3], 6.0);
}

TEST(F1, HandValuesAndRange) {
  EXPECT_NEAR(F1(0.9, 0.875), 0.8873239, 1e-7);
  EXPECT_DOUBLE_EQ(F1(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(F1(0.0, 0.0), 0.0);
  EXPECT_THROW(F1(1.5, 0.5), std::invalid_argument);
}

TEST(Frechet, HandValues) {
  EXPECT_NEAR(FrechetGaussian(Column({0.0, 2.0}), Column({1.0, 3.0})), 1.0, 1e-9);
  // Different spread only: (sqrt(2) - sqrt(8))^2 = 2.
  EXPECT_NEAR(FrechetGaussian(Column({0.0, 2.0}), Column({-1.0, 3.0})), 2.0, 1e-5);
}

TEST(Frechet, TranslationGivesSquaredShift) {
  Rng rng(2);
  const Matrix a = StandardNormal(50, 4, rng);
  Eigen::RowVectorXd delta(4);
  delta << 1.0, -2.0, 0.5, 0.0;
  const Matrix b = a.rowwise() + delta;
  EXPECT_NEAR(FrechetGaussian(a, b), delta.squaredNorm(), 1e-6);
  EXPECT_NEAR(FrechetGaussian(a, a), 0.0, 1e-6);
}

TEST(Frechet, SymmetricAndNonNegative) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = StandardNormal(30, 5, rng);
    const Matrix b = 1.5 * StandardNormal(40, 5, rng);
    const double ab = FrechetGaussian(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, FrechetGaussian(b, a), 1e-8 * std::max(1.0, ab));
  }
  EXPECT_THROW(FrechetGaussian(Matrix::Zero(1, 2), Matrix::Zero(3, 2)), std::invalid_argument);
}

TEST(Frechet, HandlesRankDeficientSets) {
  // Fewer points than dimensions; the diagonal jitter keeps it finite.
  Rng rng(6);
  const double fd = FrechetGaussian(StandardNormal(4, 20, rng), StandardNormal(5, 20, rng));
  EXPECT_TRUE(std::isfinite(fd));
}

TEST(MeanStandardError, HandCase) {
  const MeanSe r = MeanStandardError({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-14);
  EXPECT_EQ(MeanStandardError({7.0}).se, 0.0);
}

TEST(BuildReferenceSets, DisjointAndDeterministic) {
  std::vector<int> members(50);
  std::iota(members.begin(), members.end(), 100);
  const ReferenceSplit a = BuildReferenceSets(members, 10, 30, 9);
  EXPECT_EQ(a.queries.size(), 10u);
  EXPECT_EQ(a.generalization.size(), 30u);
  std::set<int> all(a.queries.begin(), a.queries.end());
  for (int g : a.generalization) EXPECT_TRUE(all.insert(g).second);
  for (int v : all) EXPECT_TRUE(v >= 100 && v < 150);
  std::vector<int> reversed(members.rbegin(), members.rend());
  const ReferenceSplit b = BuildReferenceSets(reversed, 10, 30, 9);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.generalization, b.generalization);
  EXPECT_THROW(BuildReferenceSets(members, 30, 30, 9), std::invalid_argument);
}

}  // namespace
}  // namespace modecompose
