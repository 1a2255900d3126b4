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

#ifndef MODECOMPOSE_DENOISER_H_
#define MODECOMPOSE_DENOISER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "modecompose/lora.h"
#include "modecompose/optim.h"
#include "modecompose/score_model.h"

namespace modecompose {

// What the output layer predicts. kX0 reads the output f as the clean state
// and reports eps = a(t) xt - b(t) f with a = lambda / sqrt(1 - abar),
// b = lambda sqrt(abar / (1 - abar)), lambda = min(1, cap / sqrt(snr)).
// With lambda = 1 this is the exact x0 conversion; the full-rank noise part
// of eps then bypasses the hidden bottleneck. The cap bounds how much an x0
// error is amplified at low noise.
enum class OutputHead { kEpsilon, kX0 };

struct DenoiserArch {
  int dim = 0;          // ambient state dimension
  int num_classes = 0;  // trained classes; the embedding table has one more (null) row
  int width = 256;
  int depth = 3;  // hidden layers
  int time_features = 32;
  OutputHead head = OutputHead::kX0;
  double x0_gain_cap = 3.0;  // <= 0 disables the cap

  bool operator==(const DenoiserArch&) const = default;
};

// Activations kept by Forward for Backward.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input of each linear layer
  std::vector<Matrix> pre_act;      // pre-activation of each hidden layer
  std::vector<Matrix> lora_hidden;  // input * A^T per layer when an adapter is active
  std::vector<int> t;
};

// Fully connected eps-predictor:
//   h0 = silu(W0 [xt, time(t)] + b0 + embed[c]),
//   h_l = silu(W_l h_{l-1} + b_l),
//   out = W_out h_L + b_out, read as eps or as x0 depending on the head.
// The class embedding table has num_classes + 1 rows; the last is the null
// token used for classifier-free dropout.
class ToyDenoiser : public ScoreModel {
 public:
  ToyDenoiser(DenoiserArch arch, NoiseSchedule schedule, uint64_t init_seed);
  ToyDenoiser(DenoiserArch arch, NoiseSchedule schedule, ParameterSet params);

  const NoiseSchedule& schedule() const override { return schedule_; }
  int dim() const override { return arch_.dim; }
  int num_classes() const override { return arch_.num_classes; }
  Matrix EpsBatch(const Matrix& xt, int t, const Conditioning& c) const override;

  const DenoiserArch& arch() const { return arch_; }
  int null_row() const { return arch_.num_classes; }
  // (a, b) with eps = a xt - b out for the x0 head.
  std::pair<double, double> HeadGains(int t) const;
  int num_linear_layers() const { return arch_.depth + 1; }
  // (out, in) per linear layer, input layer first.
  std::vector<std::pair<int, int>> LinearShapes() const;
  size_t ParameterCount() const { return params_.size(); }

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int weight_slot(int layer) const { return weight_slots_.at(layer); }
  int bias_slot(int layer) const { return bias_slots_.at(layer); }
  int embedding_slot() const { return embedding_slot_; }

  // Embedding rows for per-example conditioning; Null maps to null_row().
  Matrix EmbeddingRows(std::span<const int> rows) const;
  int EmbeddingRowFor(const Conditioning& c) const;

  // Per-row timesteps; `cond_embed` (n x width) is added to the first
  // pre-activation. `lora` may be null. `cache` may be null.
  Matrix Forward(const Matrix& xt, std::span<const int> t, const Matrix& cond_embed,
                 const LoraAdapter* lora, ForwardCache* cache) const;

  // Reverse pass for d(loss)/d(output) = d_out. Any of the gradient outputs
  // may be null. `base_grad` and `lora_grad` are flat buffers aligned with
  // params() and lora->params() and are accumulated into. The embedding
  // table gradient is not produced here; `d_cond_embed` receives
  // d(loss)/d(cond_embed) instead.
  void Backward(const ForwardCache& cache, const Matrix& d_out, const LoraAdapter* lora,
                std::vector<double>* base_grad, std::vector<double>* lora_grad,
                Matrix* d_cond_embed) const;

  Matrix TimeFeatures(std::span<const int> t) const;

  void Save(const std::filesystem::path& path) const;
  static ToyDenoiser Load(const std::filesystem::path& path);

 private:
  void IndexSlots();

  DenoiserArch arch_;
  NoiseSchedule schedule_;
  ParameterSet params_;
  std::vector<int> weight_slots_;
  std::vector<int> bias_slots_;
  int embedding_slot_ = -1;
};

struct LabeledDataset {
  Matrix x;                 // one clean sample per row
  std::vector<int> labels;  // contiguous trained-class ids
};

struct TrainConfig {
  AdamConfig adam{.lr = 1e-3};
  int batch_size = 32;
  int epochs = 100;
  double null_dropout = 0.1;
  double grad_clip = 1.0;
  uint64_t seed = 42;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-element eps MSE per epoch
};

// Noise-prediction training with per-example null-token dropout.
// `on_batch` observes the dataset row indices of every mini-batch.
TrainResult TrainBackbone(ToyDenoiser& model, const LabeledDataset& data, const TrainConfig& cfg,
                          const std::function<void(std::span<const int>)>& on_batch = {});

}  // namespace modecompose

#endif  // MODECOMPOSE_DENOISER_H_
