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

#ifndef MODECOMPOSE_LORA_H_
#define MODECOMPOSE_LORA_H_

#include <utility>
#include <vector>

#include "modecompose/optim.h"
#include "modecompose/random.h"

namespace modecompose {

// Low-rank deltas W + (alpha / r) B A for a stack of linear layers, plus the
// new class embedding row that is learned jointly with them. A starts small
// random, B starts at zero, so a fresh adapter is an exact no-op.
class LoraAdapter {
 public:
  // `layer_shapes[l]` is (out, in) of linear layer l.
  static LoraAdapter Create(const std::vector<std::pair<int, int>>& layer_shapes, int embed_dim,
                            int rank, double alpha, double embed_init_std, Rng& rng);
  // Rebuilds an adapter around previously saved parameters.
  static LoraAdapter FromParameters(ParameterSet params, int rank, double alpha);

  int rank() const { return rank_; }
  double alpha() const { return alpha_; }
  double scale() const { return alpha_ / rank_; }
  int num_layers() const { return static_cast<int>(a_slots_.size()); }

  Eigen::Map<const Matrix> A(int layer) const { return params_.Map(a_slots_.at(layer)); }
  Eigen::Map<const Matrix> B(int layer) const { return params_.Map(b_slots_.at(layer)); }
  Eigen::Map<const Matrix> new_embedding() const { return params_.Map(embed_slot_); }

  int a_slot(int layer) const { return a_slots_.at(layer); }
  int b_slot(int layer) const { return b_slots_.at(layer); }
  int embed_slot() const { return embed_slot_; }

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  LoraAdapter() = default;
  void IndexSlots();

  ParameterSet params_;
  int rank_ = 0;
  double alpha_ = 0.0;
  std::vector<int> a_slots_;
  std::vector<int> b_slots_;
  int embed_slot_ = -1;
};

}  // namespace modecompose

#endif  // MODECOMPOSE_LORA_H_
