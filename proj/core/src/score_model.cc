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

#include "modecompose/score_model.h"

#include <cmath>

namespace modecompose {

std::string Conditioning::ToString() const {
  switch (kind_) {
    case Kind::kNull:
      return "null";
    case Kind::kClass:
      return "class:" + std::to_string(class_id_);
    case Kind::kNewConcept:
      return "new";
  }
  return "?";
}

Matrix ScoreModel::ScoreBatch(const Matrix& xt, int t, const Conditioning& c) const {
  const double ab = schedule().alpha_bar(t);
  Require(ab < 1.0, "score undefined at alpha_bar == 1");
  return -EpsBatch(xt, t, c) / std::sqrt(1.0 - ab);
}

Vector ScoreModel::Eps(const Vector& xt, int t, const Conditioning& c) const {
  Matrix batch = xt.transpose();
  return EpsBatch(batch, t, c).row(0).transpose();
}

Vector ScoreModel::Score(const Vector& xt, int t, const Conditioning& c) const {
  Matrix batch = xt.transpose();
  return ScoreBatch(batch, t, c).row(0).transpose();
}

}  // namespace modecompose
