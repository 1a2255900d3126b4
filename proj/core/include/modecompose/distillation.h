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

#ifndef MODECOMPOSE_DISTILLATION_H_
#define MODECOMPOSE_DISTILLATION_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "modecompose/denoiser.h"
#include "modecompose/lora.h"
#include "modecompose/sampler.h"

namespace modecompose {

// The frozen base network with an adapter applied to every linear layer.
// Null uses the base null row, NewConcept the adapter's embedding row and
// Class(c) the base row c. The adapter is active for all three.
class AdaptedDenoiser final : public ScoreModel {
 public:
  AdaptedDenoiser(const ToyDenoiser& base, const LoraAdapter& adapter);

  const NoiseSchedule& schedule() const override { return base_.schedule(); }
  int dim() const override { return base_.dim(); }
  int num_classes() const override { return base_.num_classes(); }
  Matrix EpsBatch(const Matrix& xt, int t, const Conditioning& c) const override;

 private:
  const ToyDenoiser& base_;
  const LoraAdapter& adapter_;
};

struct DistillConfig {
  int pool_size = 256;
  int rank = 8;
  double alpha = 16.0;
  AdamConfig adam{.lr = 1e-3};
  int epochs = 10;
  int batch_size = 16;
  double cfg_dropout = 0.1;
  double embed_init_std = 0.01;
  double grad_clip = 0.0;  // 0 disables
  uint64_t seed = 42;

  void Validate() const;
};

LoraAdapter CreateAdapter(const ToyDenoiser& base, const DistillConfig& cfg);

// Teacher-guided samples used as the distillation target.
Matrix GeneratePool(const ScoreModel& model, const PoeTeacher& teacher, const GuidanceConfig& cfg,
                    int pool_size);

struct DistillResult {
  LoraAdapter adapter;
  std::vector<double> epoch_loss;  // mean per-element eps MSE per epoch
};

// Noise-prediction loss on the pool over (adapter, new embedding) with the
// base frozen; the new token is replaced by Null with probability
// cfg.cfg_dropout per example.
DistillResult Distill(const ToyDenoiser& base, const Matrix& pool, const DistillConfig& cfg);

// Loss and flat adapter gradient (aligned with adapter.params()) for one
// fixed batch; `use_null[i]` selects the null row for example i.
double DistillLossAndGrad(const ToyDenoiser& base, const LoraAdapter& adapter, const Matrix& x0,
                          std::span<const int> t, const Matrix& eps,
                          const std::vector<bool>& use_null, std::vector<double>* grad);

// CFG between the adapted model with NewConcept and with Null at fixed w.
Matrix SampleDistilled(const ToyDenoiser& base, const LoraAdapter& adapter, double w,
                       const GuidanceConfig& cfg);

void SaveAdapter(const std::filesystem::path& path, const LoraAdapter& adapter,
                 const std::string& query_id);
// Returns the adapter; `query_id` receives the stored key if non-null.
LoraAdapter LoadAdapter(const std::filesystem::path& path, std::string* query_id = nullptr);

}  // namespace modecompose

#endif  // MODECOMPOSE_DISTILLATION_H_
