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

#ifndef MODECOMPOSE_SCORE_MODEL_H_
#define MODECOMPOSE_SCORE_MODEL_H_

#include <string>

#include "modecompose/diffusion.h"
#include "modecompose/types.h"

namespace modecompose {

// Null token, a trained class token, or the distilled new-concept token.
class Conditioning {
 public:
  enum class Kind { kNull, kClass, kNewConcept };

  static Conditioning Null() { return Conditioning(Kind::kNull, -1); }
  static Conditioning Class(int id) { return Conditioning(Kind::kClass, id); }
  static Conditioning NewConcept() { return Conditioning(Kind::kNewConcept, -1); }

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::kNull; }
  int class_id() const { return class_id_; }
  std::string ToString() const;

  bool operator==(const Conditioning&) const = default;

 private:
  Conditioning(Kind kind, int class_id) : kind_(kind), class_id_(class_id) {}
  Kind kind_;
  int class_id_;
};

// The noise-prediction contract shared by the exact mixture oracle, the
// trained denoiser and the adapted denoiser. Scores are always derived from
// the eps head, so score = -eps / sqrt(1 - abar_t) holds by construction.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual const NoiseSchedule& schedule() const = 0;
  virtual int dim() const = 0;
  // Number of trained class tokens; 0 for unconditional models.
  virtual int num_classes() const { return 0; }

  // Each row of `xt` is a state; all rows share timestep and conditioning.
  virtual Matrix EpsBatch(const Matrix& xt, int t, const Conditioning& c) const = 0;

  Matrix ScoreBatch(const Matrix& xt, int t, const Conditioning& c) const;
  Vector Eps(const Vector& xt, int t, const Conditioning& c) const;
  Vector Score(const Vector& xt, int t, const Conditioning& c) const;
};

}  // namespace modecompose

#endif  // MODECOMPOSE_SCORE_MODEL_H_
