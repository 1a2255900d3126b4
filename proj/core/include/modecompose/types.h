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

#ifndef MODECOMPOSE_TYPES_H_
#define MODECOMPOSE_TYPES_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace modecompose {

// Flattened state in ambient space. Images are row-major with the channel
// index varying fastest.
using Vector = Eigen::VectorXd;

// A batch of states, one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised when an iterate, loss or sample goes non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline bool AllFinite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace modecompose

#endif  // MODECOMPOSE_TYPES_H_
