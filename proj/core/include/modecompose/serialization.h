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

#ifndef MODECOMPOSE_SERIALIZATION_H_
#define MODECOMPOSE_SERIALIZATION_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modecompose/mode_discovery.h"
#include "modecompose/poe.h"

namespace modecompose {

inline constexpr int kPrototypeSchemaVersion = 1;
inline constexpr int kSamplePoolSchemaVersion = 1;

nlohmann::json VectorToJson(const Vector& v);
Vector VectorFromJson(const nlohmann::json& j);

// {"schema": "modecompose.prototypes", "version": 1, "dim": d,
//  "prototypes": [{"id", "origin_t", "grad_norm", "nonconcave_dims", "m", "var"}],
//  "diagnostics": {...}}
nlohmann::json PrototypePoolToJson(const std::vector<PrototypeExpert>& pool,
                                   const DiscoveryDiagnostics* diagnostics = nullptr);
std::vector<PrototypeExpert> PrototypePoolFromJson(const nlohmann::json& j);

// {"schema": "modecompose.teacher", "version": 1, "dim": d, "mu", "var",
//  "provenance": {"selected": [...], "weights": [[...], ...]}}
nlohmann::json TeacherToJson(const PoeTeacher& teacher);
PoeTeacher TeacherFromJson(const nlohmann::json& j);

void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

struct SamplePoolManifest {
  std::string method;
  std::string class_name;
  int class_id = -1;
  std::string query_id;
  uint64_t seed = 0;
  std::string config_hash;
  int dim = 0;
  int count = 0;
  int image_resolution = 0;  // 0 for non-image data
};

// Writes one raw little-endian float64 file per sample (sample_00000.f64,
// ...) and manifest.json into `dir`; optionally a PNG grid.
void SaveSamplePool(const std::filesystem::path& dir, const Matrix& samples,
                    SamplePoolManifest manifest);
Matrix LoadSamplePool(const std::filesystem::path& dir, SamplePoolManifest* manifest = nullptr);

}  // namespace modecompose

#endif  // MODECOMPOSE_SERIALIZATION_H_
