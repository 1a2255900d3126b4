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

#include "modecompose/denoiser.h"

#include <cmath>

#include <gtest/gtest.h>

#include "modecompose/datasets.h"
#include "modecompose/random.h"
#include "test_util.h"

namespace modecompose {
namespace {

DenoiserArch SmallArch(OutputHead head) {
  DenoiserArch a;
  a.dim = 3;
  a.num_classes = 2;
  a.width = 8;
  a.depth = 2;
  a.time_features = 4;
  a.head = head;
  return a;
}

// 0.5 ||out - target||^2 summed over the batch.
double HalfSquaredError(const ToyDenoiser& m, const Matrix& x, std::span<const int> ts,
                        std::span<const int> rows, const Matrix& target) {
  return 0.5 * (m.Forward(x, ts, m.EmbeddingRows(rows), nullptr, nullptr) - target).squaredNorm();
}

class DenoiserGradient : public ::testing::TestWithParam<OutputHead> {};

TEST_P(DenoiserGradient, MatchesCentralDifferences) {
  ToyDenoiser m(SmallArch(GetParam()), NoiseSchedule::Linear(1000), 9);
  Rng rng(4);
  const Matrix x = StandardNormal(5, 3, rng);
  const std::vector<int> ts = {1, 20, 50, 300, 900};
  const std::vector<int> rows = {0, 1, 2, 0, 1};
  const Matrix target = StandardNormal(5, 3, rng);

  ForwardCache cache;
  const Matrix out = m.Forward(x, ts, m.EmbeddingRows(rows), nullptr, &cache);
  std::vector<double> grad(m.params().size(), 0.0);
  Matrix d_cond;
  m.Backward(cache, out - target, nullptr, &grad, nullptr, &d_cond);
  const auto& es = m.params().slots()[m.embedding_slot()];
  for (int i = 0; i < 5; ++i) {
    for (int c = 0; c < es.cols; ++c) grad[es.offset + rows[i] * es.cols + c] += d_cond(i, c);
  }

  auto& p = m.params().values();
  double worst = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    const double h = 1e-6;
    p[i] = keep + h;
    const double up = HalfSquaredError(m, x, ts, rows, target);
    p[i] = keep - h;
    const double down = HalfSquaredError(m, x, ts, rows, target);
    p[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-3, std::abs(fd) + std::abs(grad[i])));
  }
  EXPECT_LT(worst, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Heads, DenoiserGradient,
                         ::testing::Values(OutputHead::kEpsilon, OutputHead::kX0));

TEST(Denoiser, X0HeadConvertsToEps) {
  DenoiserArch a = SmallArch(OutputHead::kX0);
  a.x0_gain_cap = 0.0;
  ToyDenoiser m(a, NoiseSchedule::Linear(1000), 3);
  DenoiserArch eps_arch = a;
  eps_arch.head = OutputHead::kEpsilon;
  const ToyDenoiser raw(eps_arch, NoiseSchedule::Linear(1000), m.params());
  Rng rng(1);
  const Matrix x = StandardNormal(3, 3, rng);
  const std::vector<int> ts = {5, 400, 990};
  const std::vector<int> rows = {2, 2, 2};
  const Matrix f = raw.Forward(x, ts, raw.EmbeddingRows(rows), nullptr, nullptr);
  const Matrix eps = m.Forward(x, ts, m.EmbeddingRows(rows), nullptr, nullptr);
  const NoiseSchedule& s = m.schedule();
  for (int i = 0; i < 3; ++i) {
    const Eigen::RowVectorXd expected =
        (x.row(i) - s.sqrt_alpha_bar(ts[i]) * f.row(i)) / s.sqrt_one_minus_alpha_bar(ts[i]);
    EXPECT_TRUE(eps.row(i).isApprox(expected, 1e-12));
  }
}

TEST(Denoiser, GainCapOnlyActsAtLowNoise) {
  ToyDenoiser m(SmallArch(OutputHead::kX0), NoiseSchedule::Linear(1000), 3);
  const NoiseSchedule& s = m.schedule();
  for (int t : {1, 10, 100, 500, 1000}) {
    const auto [a, b] = m.HeadGains(t);
    const double snr_root = s.sqrt_alpha_bar(t) / s.sqrt_one_minus_alpha_bar(t);
    EXPECT_LE(b, 3.0 + 1e-12);
    if (snr_root <= 3.0) {
      EXPECT_NEAR(a, 1.0 / s.sqrt_one_minus_alpha_bar(t), 1e-12);
      EXPECT_NEAR(b, snr_root, 1e-12);
    }
  }
}

TEST(Denoiser, ScoreContractAndDeterminism) {
  ToyDenoiser m(SmallArch(OutputHead::kX0), NoiseSchedule::Linear(1000), 3);
  Rng rng(8);
  const Matrix x = StandardNormal(4, 3, rng);
  const Matrix e1 = m.EpsBatch(x, 77, Conditioning::Class(1));
  EXPECT_EQ(e1, m.EpsBatch(x, 77, Conditioning::Class(1)));
  EXPECT_TRUE(m.ScoreBatch(x, 77, Conditioning::Class(1))
                  .isApprox(-e1 / m.schedule().sqrt_one_minus_alpha_bar(77), 1e-14));
  EXPECT_NE(e1, m.EpsBatch(x, 77, Conditioning::Null()));
  EXPECT_THROW(m.EpsBatch(x, 77, Conditioning::Class(2)), std::invalid_argument);
  EXPECT_THROW(m.EpsBatch(x, 77, Conditioning::NewConcept()), std::invalid_argument);
}

TEST(Denoiser, SaveLoadRoundTrip) {
  ToyDenoiser m(SmallArch(OutputHead::kX0), NoiseSchedule::Linear(1000), 5);
  const auto dir = testing::TempDir("denoiser_io");
  m.Save(dir / "m.mcpk");
  const ToyDenoiser back = ToyDenoiser::Load(dir / "m.mcpk");
  EXPECT_EQ(back.arch(), m.arch());
  EXPECT_EQ(back.params(), m.params());
  EXPECT_EQ(back.schedule().betas(), m.schedule().betas());
}

TEST(TrainBackbone, OverfitsSinglePair) {
  DenoiserArch a;
  a.dim = 4;
  a.num_classes = 1;
  a.width = 64;
  a.depth = 2;
  a.time_features = 16;
  ToyDenoiser m(a, NoiseSchedule::Linear(1000), 1);
  LabeledDataset data;
  data.x = Matrix(1, 4);
  data.x << 0.5, -0.3, 0.8, -0.9;
  data.labels = {0};
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 2000;
  cfg.null_dropout = 0.0;
  TrainBackbone(m, data, cfg);

  Rng rng(99);
  double mse = 0.0;
  int count = 0;
  for (int t = 1; t <= 1000; t += 9) {
    const Matrix eps = StandardNormal(8, 4, rng);
    const Matrix xt = (m.schedule().sqrt_alpha_bar(t) * data.x.replicate(8, 1) +
                       m.schedule().sqrt_one_minus_alpha_bar(t) * eps);
    mse += (m.EpsBatch(xt, t, Conditioning::Class(0)) - eps).squaredNorm() / eps.size();
    ++count;
  }
  EXPECT_LT(mse / count, 0.05);
}

TEST(TrainBackbone, LossDecreasesAndIsReproducible) {
  const GmmWorldData world = GenGmm2d(ThreeModeWorld(), 100, 3);
  DenoiserArch a;
  a.dim = 2;
  a.num_classes = 3;
  a.width = 32;
  a.depth = 2;
  a.time_features = 8;
  TrainConfig cfg;
  cfg.epochs = 15;
  ToyDenoiser m1(a, NoiseSchedule::Linear(1000), 2);
  ToyDenoiser m2(a, NoiseSchedule::Linear(1000), 2);
  const TrainResult r1 = TrainBackbone(m1, world.data, cfg);
  const TrainResult r2 = TrainBackbone(m2, world.data, cfg);
  EXPECT_LT(r1.epoch_loss.back(), r1.epoch_loss.front());
  EXPECT_EQ(r1.epoch_loss, r2.epoch_loss);
  EXPECT_EQ(m1.params(), m2.params());
}

TEST(TrainBackbone, ObservesEveryRowOncePerEpoch) {
  const GmmWorldData world = GenGmm2d(ThreeModeWorld(), 10, 3);
  DenoiserArch a = SmallArch(OutputHead::kX0);
  a.dim = 2;
  a.num_classes = 3;
  ToyDenoiser model(a, NoiseSchedule::Linear(1000), 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 7;
  std::vector<int> seen(30, 0);
  TrainBackbone(model, world.data, cfg, [&](std::span<const int> rows) {
    for (int r : rows) ++seen[r];
  });
  for (int c : seen) EXPECT_EQ(c, 2);
}

TEST(TrainBackbone, RejectsBadInput) {
  ToyDenoiser m(SmallArch(OutputHead::kX0), NoiseSchedule::Linear(1000), 1);
  LabeledDataset empty;
  empty.x = Matrix(0, 3);
  EXPECT_THROW(TrainBackbone(m, empty, TrainConfig{}), std::invalid_argument);
  LabeledDataset bad;
  bad.x = Matrix::Zero(2, 3);
  bad.labels = {0, 7};
  EXPECT_THROW(TrainBackbone(m, bad, TrainConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace modecompose
