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

#ifndef MODECOMPOSE_OPTIM_H_
#define MODECOMPOSE_OPTIM_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modecompose/types.h"

namespace modecompose {

// Named dense tensors packed into one flat buffer. Optimisers and
// finite-difference checks work on the flat view; layers map slots.
class ParameterSet {
 public:
  struct Slot {
    std::string name;
    int rows = 0;
    int cols = 0;
    size_t offset = 0;
    bool operator==(const Slot&) const = default;
  };

  int Add(std::string name, int rows, int cols);
  int Find(const std::string& name) const;  // -1 if absent

  Eigen::Map<Matrix> Map(int slot);
  Eigen::Map<const Matrix> Map(int slot) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Slot>& slots() const { return slots_; }
  size_t size() const { return values_.size(); }

  bool operator==(const ParameterSet& other) const = default;

 private:
  std::vector<Slot> slots_;
  std::vector<double> values_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

class Adam {
 public:
  Adam(size_t num_params, AdamConfig config);
  void Step(std::span<double> params, std::span<const double> grads);
  long steps() const { return step_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long step_ = 0;
};

// Rescales `grads` in place so that its L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double ClipGradNorm(std::span<double> grads, double max_norm);

}  // namespace modecompose

#endif  // MODECOMPOSE_OPTIM_H_
