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

#include "modecompose/lora.h"

#include <cmath>
#include <string>

namespace modecompose {

LoraAdapter LoraAdapter::Create(const std::vector<std::pair<int, int>>& layer_shapes,
                                int embed_dim, int rank, double alpha, double embed_init_std,
                                Rng& rng) {
  Require(rank > 0 && alpha > 0.0, "lora: rank and alpha must be positive");
  Require(embed_dim > 0 && embed_init_std >= 0.0, "lora: bad embedding spec");
  LoraAdapter a;
  a.rank_ = rank;
  a.alpha_ = alpha;
  for (size_t l = 0; l < layer_shapes.size(); ++l) {
    const auto [out, in] = layer_shapes[l];
    a.params_.Add("layer" + std::to_string(l) + ".lora_A", rank, in);
    a.params_.Add("layer" + std::to_string(l) + ".lora_B", out, rank);
  }
  a.params_.Add("new_embedding", 1, embed_dim);
  a.IndexSlots();

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < a.num_layers(); ++l) {
    auto A = a.params_.Map(a.a_slots_[l]);
    const double std_a = 1.0 / std::sqrt(static_cast<double>(A.cols()));
    for (int i = 0; i < A.size(); ++i) A.data()[i] = std_a * normal(rng);
  }
  auto e = a.params_.Map(a.embed_slot_);
  for (int i = 0; i < e.size(); ++i) e.data()[i] = embed_init_std * normal(rng);
  return a;
}

LoraAdapter LoraAdapter::FromParameters(ParameterSet params, int rank, double alpha) {
  Require(rank > 0 && alpha > 0.0, "lora: rank and alpha must be positive");
  LoraAdapter a;
  a.params_ = std::move(params);
  a.rank_ = rank;
  a.alpha_ = alpha;
  a.IndexSlots();
  return a;
}

void LoraAdapter::IndexSlots() {
  a_slots_.clear();
  b_slots_.clear();
  for (int l = 0;; ++l) {
    const int a = params_.Find("layer" + std::to_string(l) + ".lora_A");
    const int b = params_.Find("layer" + std::to_string(l) + ".lora_B");
    if (a < 0 || b < 0) break;
    Require(params_.slots()[a].rows == rank_ && params_.slots()[b].cols == rank_,
            "lora: factor rank mismatch");
    a_slots_.push_back(a);
    b_slots_.push_back(b);
  }
  embed_slot_ = params_.Find("new_embedding");
  Require(!a_slots_.empty() && embed_slot_ >= 0, "lora: missing factor or embedding slots");
}

}  // namespace modecompose
