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

#include "modecompose/optim.h"

#include <cmath>

namespace modecompose {

int ParameterSet::Add(std::string name, int rows, int cols) {
  Require(Find(name) < 0, "duplicate parameter " + name);
  Require(rows > 0 && cols > 0, "parameter " + name + " must be non-empty");
  slots_.push_back(Slot{std::move(name), rows, cols, values_.size()});
  values_.resize(values_.size() + static_cast<size_t>(rows) * cols, 0.0);
  return static_cast<int>(slots_.size()) - 1;
}

int ParameterSet::Find(const std::string& name) const {
  for (size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].name == name) return static_cast<int>(i);
  return -1;
}

Eigen::Map<Matrix> ParameterSet::Map(int slot) {
  const Slot& s = slots_.at(slot);
  return Eigen::Map<Matrix>(values_.data() + s.offset, s.rows, s.cols);
}

Eigen::Map<const Matrix> ParameterSet::Map(int slot) const {
  const Slot& s = slots_.at(slot);
  return Eigen::Map<const Matrix>(values_.data() + s.offset, s.rows, s.cols);
}

Adam::Adam(size_t num_params, AdamConfig config)
    : config_(config), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::Step(std::span<double> params, std::span<const double> grads) {
  Require(params.size() == m_.size() && grads.size() == m_.size(), "adam: size mismatch");
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
    const double update = (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + config_.eps);
    params[i] -= config_.lr * (update + config_.weight_decay * params[i]);
  }
}

double ClipGradNorm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace modecompose
