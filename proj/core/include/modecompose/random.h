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

#ifndef MODECOMPOSE_RANDOM_H_
#define MODECOMPOSE_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

#include "modecompose/types.h"

namespace modecompose {

using Rng = std::mt19937_64;

// Mixes a base seed with a path of stream identifiers (timestep, start
// index, sample index, ...) so that independent workers draw from
// independent, schedule-free streams.
uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> path);

inline Rng MakeRng(uint64_t base, std::initializer_list<uint64_t> path) {
  return Rng(DeriveSeed(base, path));
}

Vector StandardNormal(int dim, Rng& rng);
Matrix StandardNormal(int rows, int cols, Rng& rng);

// Uniform integer in [lo, hi].
int UniformInt(int lo, int hi, Rng& rng);
double Uniform01(Rng& rng);

}  // namespace modecompose

#endif  // MODECOMPOSE_RANDOM_H_
