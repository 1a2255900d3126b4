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

#ifndef MODECOMPOSE_CONTAINER_H_
#define MODECOMPOSE_CONTAINER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "modecompose/types.h"

namespace modecompose {

// Binary container used for datasets, backbone checkpoints and adapters.
//
//   offset 0   4 bytes   magic "MCPK"
//   offset 4   u32 LE    format version (kContainerVersion)
//   offset 8   u64 LE    header length H in bytes
//   offset 16  H bytes   UTF-8 JSON header:
//                          {"kind": str, "meta": {...},
//                           "tensors": [{"name", "rows", "cols", "offset"}...],
//                           "payload_bytes": n, "payload_fnv1a64": "0x..."}
//   offset 16+H          payload: float64 little-endian, row-major tensors at
//                        the listed byte offsets relative to payload start.
//
// docs/formats.md carries the same description with per-kind meta keys.
inline constexpr uint32_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
};

struct Container {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  void Add(std::string name, const Eigen::Ref<const Matrix>& m);
  void Add(std::string name, const std::vector<double>& row);
  bool Has(std::string_view name) const;
  const NamedTensor& Get(std::string_view name) const;
  Matrix GetMatrix(std::string_view name) const;
};

// Writes to a sibling temporary file and renames it into place.
void WriteContainer(const std::filesystem::path& path, const Container& c);
Container ReadContainer(const std::filesystem::path& path);

uint64_t Fnv1a64(std::string_view bytes);

// Writes `text` to a sibling temporary file and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view text);
std::string ReadFile(const std::filesystem::path& path);

}  // namespace modecompose

#endif  // MODECOMPOSE_CONTAINER_H_
