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

#include "modecompose/sampler.h"

#include <cmath>

#include <gtest/gtest.h>

#include "modecompose/datasets.h"
#include "modecompose/gmm.h"
#include "test_util.h"

namespace modecompose {
namespace {

const NoiseSchedule& Schedule() {
  static const NoiseSchedule s = NoiseSchedule::Linear(1000);
  return s;
}

PoeTeacher Teacher(const Vector& mu, const Vector& var) {
  PoeTeacher t;
  t.mu = mu;
  t.var = var;
  return t;
}

// For Gaussian data every DDIM step with the exact eps is a linear map of
// x_t, so the output variance of a centred start follows a scalar product.
double PredictedDdimVariance(double v, const NoiseSchedule& s, int steps) {
  const std::vector<int> grid = DdimTimesteps(s.num_steps(), steps);
  double scale = 1.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const double ab = s.alpha_bar(grid[i]);
    const double ab_prev = i + 1 < grid.size() ? s.alpha_bar(grid[i + 1]) : 1.0;
    scale *= (std::sqrt(ab_prev * ab) * v + std::sqrt((1.0 - ab_prev) * (1.0 - ab))) /
             (ab * v + 1.0 - ab);
  }
  return scale * scale;
}

TEST(Teacher, NoisyParamsHandCase) {
  const NoiseSchedule s = NoiseSchedule::FromAlphaBars({0.64});
  const auto [mean, var] = TeacherNoisyParams(Teacher(Vector::Constant(1, 1.0), Vector::Constant(1, 0.25)), 1, s);
  EXPECT_NEAR(mean[0], 0.8, 1e-14);
  EXPECT_NEAR(var[0], 0.52, 1e-14);
}

TEST(Teacher, EpsMatchesGaussianOracle) {
  Rng rng(3);
  const Vector mu = StandardNormal(4, rng);
  const Vector var = (0.2 + Vector::NullaryExpr(4, [&] { return Uniform01(rng); }).array()).matrix();
  const GmmOracle oracle(testing::SingleGaussian(mu, var), Schedule());
  const Matrix xt = StandardNormal(5, 4, rng);
  for (int t : {1, 300, 1000}) {
    EXPECT_TRUE(TeacherEpsBatch(Teacher(mu, var), xt, t, Schedule())
                    .isApprox(oracle.EpsBatch(xt, t, Conditioning::Null()), 1e-12));
  }
  EXPECT_TRUE(TeacherEps(Teacher(mu, var), xt.row(0).transpose(), 300, Schedule())
                  .isApprox(oracle.Eps(xt.row(0).transpose(), 300, Conditioning::Null()), 1e-12));
}

TEST(GuidanceWeight, HandExamples) {
  const NoiseSchedule s = NoiseSchedule::FromAlphaBars({0.64});
  GuidanceConfig cfg;
  // mean var_t = 0.64 * 0.25 + 0.36 = 0.52.
  const PoeTeacher t = Teacher(Vector::Zero(2), Vector::Constant(2, 0.25));
  EXPECT_NEAR(GuidanceWeight(t, 1, s, cfg), 1.2 * 0.52, 1e-14);
  // 0.64 * 5 + 0.36 = 3.56 -> capped.
  EXPECT_DOUBLE_EQ(GuidanceWeight(Teacher(Vector::Zero(2), Vector::Constant(2, 5.0)), 1, s, cfg), 2.0);
  cfg.mode = GuidanceMode::kFixed;
  EXPECT_DOUBLE_EQ(GuidanceWeight(t, 1, s, cfg), 1.2);
}

TEST(GuidanceWeight, IsMonotoneInTeacherVariance) {
  GuidanceConfig cfg;
  for (int t : {10, 200, 800}) {
    double prev = 0.0;
    for (double v : {0.01, 0.1, 0.5, 1.0}) {
      const double w = GuidanceWeight(Teacher(Vector::Zero(3), Vector::Constant(3, v)), t, Schedule(), cfg);
      EXPECT_GE(w, prev);
      EXPECT_LE(w, cfg.w_max);
      prev = w;
    }
  }
}

TEST(CfgCompose, Interpolates) {
  Vector u(2), c(2);
  u << 1.0, 0.0;
  c << 3.0, 2.0;
  EXPECT_TRUE(CfgCompose(u, c, 0.0).isApprox(u));
  EXPECT_TRUE(CfgCompose(u, c, 1.0).isApprox(c));
  Vector expected(2);
  expected << 4.0, 3.0;
  EXPECT_TRUE(CfgCompose(u, c, 1.5).isApprox(expected));
  EXPECT_TRUE(CfgCompose(Matrix(u.transpose()), Matrix(c.transpose()), 1.5)
                  .isApprox(Matrix(expected.transpose())));
  EXPECT_THROW(CfgCompose(u, Vector::Zero(3), 1.0), std::invalid_argument);
}

TEST(DdimTimesteps, UniformGridWithEndpoints) {
  const auto g = DdimTimesteps(1000, 50);
  ASSERT_EQ(g.size(), 50u);
  EXPECT_EQ(g.front(), 1000);
  EXPECT_EQ(g.back(), 1);
  for (size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i], g[i - 1]);
  EXPECT_EQ(DdimTimesteps(10, 10), (std::vector<int>{10, 9, 8, 7, 6, 5, 4, 3, 2, 1}));
  EXPECT_EQ(DdimTimesteps(10, 2), (std::vector<int>{10, 1}));
  EXPECT_THROW(DdimTimesteps(10, 1), std::invalid_argument);
  EXPECT_THROW(DdimTimesteps(10, 11), std::invalid_argument);
}

TEST(GuidanceConfig, Validates) {
  GuidanceConfig cfg;
  EXPECT_NO_THROW(cfg.Validate(1000));
  cfg.eta = 0.5;
  EXPECT_THROW(cfg.Validate(1000), std::invalid_argument);
  cfg.eta = 0.0;
  cfg.n_samples = 0;
  EXPECT_THROW(cfg.Validate(1000), std::invalid_argument);
}

TEST(DdimSample, ReproducesGaussianMoments) {
  Vector mu(2), var(2);
  mu << 1.0, -0.5;
  var << 0.3, 0.05;
  const GmmOracle oracle(testing::SingleGaussian(mu, var), Schedule());
  GuidanceConfig cfg;
  cfg.n_samples = 4000;
  const Matrix x = SampleUnconditional(oracle, cfg);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  const Eigen::RowVectorXd v = centered.array().square().colwise().mean();
  for (int r = 0; r < 2; ++r) {
    EXPECT_NEAR(mean[r], mu[r], 4.0 * std::sqrt(var[r] / cfg.n_samples));
    const double predicted = PredictedDdimVariance(var[r], Schedule(), cfg.ddim_steps);
    EXPECT_NEAR(v[r], predicted, 4.0 * predicted * std::sqrt(2.0 / cfg.n_samples));
  }
}

TEST(DdimSample, DiscretisationBiasVanishesWithSteps) {
  for (double v : {0.05, 0.3, 2.0}) {
    EXPECT_NEAR(PredictedDdimVariance(v, Schedule(), 1000), v, 0.02 * v);
    EXPECT_LT(std::abs(PredictedDdimVariance(v, Schedule(), 200) - v),
              std::abs(PredictedDdimVariance(v, Schedule(), 50) - v));
  }
}

TEST(DdimSample, DeterministicAndPrefixStable) {
  const GmmOracle oracle(WorldDensity(ThreeModeWorld()), Schedule());
  GuidanceConfig cfg;
  cfg.n_samples = 8;
  const Matrix a = SampleUnconditional(oracle, cfg);
  EXPECT_EQ(a, SampleUnconditional(oracle, cfg));
  cfg.n_samples = 3;
  EXPECT_EQ(SampleUnconditional(oracle, cfg), a.topRows(3));
  cfg.seed = 7;
  EXPECT_NE(SampleUnconditional(oracle, cfg), a.topRows(3));
}

TEST(DdimSample, ClipKeepsCleanPredictionInRange) {
  const GmmOracle oracle(testing::SingleGaussian(Vector::Constant(2, 3.0), Vector::Constant(2, 0.1)),
                         Schedule());
  GuidanceConfig cfg;
  cfg.n_samples = 16;
  cfg.clip_x0 = true;
  const Matrix x = SampleUnconditional(oracle, cfg);
  EXPECT_LE(x.maxCoeff(), 1.0 + 1e-9);
}

TEST(SampleWithTeacher, UnitWeightSamplesTheTeacher) {
  Vector mu(3), var(3);
  mu << -1.0, 0.0, 2.0;
  var << 0.2, 0.5, 0.1;
  const GmmOracle oracle(WorldDensity(SingleGaussianWorld(Vector::Zero(3), Vector::Ones(3))),
                         Schedule());
  GuidanceConfig cfg;
  cfg.mode = GuidanceMode::kFixed;
  cfg.w0 = 1.0;
  cfg.n_samples = 3000;
  const Matrix x = SampleWithTeacher(oracle, Teacher(mu, var), cfg);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd v = (x.rowwise() - mean).array().square().colwise().mean();
  for (int r = 0; r < 3; ++r) {
    EXPECT_NEAR(mean[r], mu[r], 4.0 * std::sqrt(var[r] / cfg.n_samples));
    const double predicted = PredictedDdimVariance(var[r], Schedule(), cfg.ddim_steps);
    EXPECT_NEAR(v[r], predicted, 4.0 * predicted * std::sqrt(2.0 / cfg.n_samples));
  }
}

TEST(SampleWithTeacher, GuidanceConcentratesNearTeacher) {
  const GmmWorldSpec world = ThreeModeWorld();
  const GmmOracle oracle(WorldDensity(world), Schedule());
  const Vector target = world.components[2].mean;
  const PoeTeacher teacher = Teacher(target, Vector::Constant(2, 0.05));
  GuidanceConfig cfg;
  cfg.n_samples = 200;
  cfg.mode = GuidanceMode::kFixed;
  cfg.w0 = 1.5;
  cfg.w_max = 2.0;
  const Matrix guided = SampleWithTeacher(oracle, teacher, cfg);
  const Matrix free = SampleUnconditional(oracle, cfg);
  auto near = [&](const Matrix& x) {
    int n = 0;
    for (int i = 0; i < x.rows(); ++i) n += (x.row(i).transpose() - target).norm() < 1.0;
    return n;
  };
  EXPECT_GT(near(guided), 190);
  EXPECT_LT(near(free), 120);
}

TEST(Topk, SoftmaxHandCase) {
  const TopkChoice c = SelectTopk({2.0, 1.0, 1.5, 9.0}, 3, 0.5);
  EXPECT_EQ(c.classes, (std::vector<int>{1, 2, 0}));
  ASSERT_EQ(c.weights.size(), 3u);
  EXPECT_NEAR(c.weights[0], 0.665, 1e-3);
  EXPECT_NEAR(c.weights[1], 0.245, 1e-3);
  EXPECT_NEAR(c.weights[2], 0.090, 1e-3);
  const TopkChoice tie = SelectTopk({1.0, 1.0}, 1, 0.5);
  EXPECT_EQ(tie.classes, std::vector<int>{0});
  EXPECT_DOUBLE_EQ(tie.weights[0], 1.0);
  EXPECT_THROW(SelectTopk({1.0}, 2, 0.5), std::invalid_argument);
}

TEST(Topk, EpsCombination) {
  const GmmOracle oracle(WorldDensity(ThreeModeWorld()), Schedule());
  Rng rng(2);
  const Matrix xt = StandardNormal(4, 2, rng);
  TopkChoice one{{2}, {1.0}};
  EXPECT_EQ(TopkEpsBatch(oracle, xt, 100, one), oracle.EpsBatch(xt, 100, Conditioning::Class(2)));
  TopkChoice two{{0, 1}, {0.25, 0.75}};
  const Matrix u = oracle.EpsBatch(xt, 100, Conditioning::Null());
  const Matrix expected = u + 0.25 * (oracle.EpsBatch(xt, 100, Conditioning::Class(0)) - u) +
                          0.75 * (oracle.EpsBatch(xt, 100, Conditioning::Class(1)) - u);
  EXPECT_TRUE(TopkEpsBatch(oracle, xt, 100, two).isApprox(expected, 1e-12));
}

TEST(Topk, OracleClassScoringAndSampling) {
  const GmmWorldSpec world = ThreeModeWorld();
  const GmmOracle oracle(WorldDensity(world), Schedule());
  for (int c = 0; c < 3; ++c) {
    const auto losses =
        ScoreTrainedClasses(oracle, world.components[c].mean, DefaultEvalTimesteps(1000), 8, 5);
    const TopkChoice choice = SelectTopk(losses, 1, 0.5);
    EXPECT_EQ(choice.classes[0], c);
    GuidanceConfig cfg;
    cfg.n_samples = 32;
    const Matrix x = SampleTopk(oracle, choice, cfg);
    for (int i = 0; i < x.rows(); ++i) {
      EXPECT_LT((x.row(i).transpose() - world.components[c].mean).norm(), 1.5);
    }
  }
}

TEST(DefaultEvalTimesteps, SpansFiftyToFiveHundred) {
  const auto ts = DefaultEvalTimesteps(1000);
  ASSERT_EQ(ts.size(), 10u);
  EXPECT_EQ(ts.front(), 50);
  EXPECT_EQ(ts.back(), 500);
  EXPECT_EQ(DefaultEvalTimesteps(120), (std::vector<int>{50, 100, 120}));
}

TEST(QueryOnlyTeacher, IsotropicAroundQuery) {
  const Vector q = Vector::LinSpaced(4, -1.0, 1.0);
  const PoeTeacher t = QueryOnlyTeacher(q, 0.3);
  EXPECT_EQ(t.mu, q);
  EXPECT_TRUE(t.var.isApprox(Vector::Constant(4, 0.09)));
  EXPECT_TRUE(t.selected.empty());
  EXPECT_THROW(QueryOnlyTeacher(q, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace modecompose
