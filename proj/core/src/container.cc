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

#include "modecompose/container.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace modecompose {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian; big-endian hosts are not supported");

constexpr char kMagic[4] = {'M', 'C', 'P', 'K'};

template <typename T>
void PutLe(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T GetLe(const std::string& in, size_t pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("container: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  return v;
}

std::string HexU64(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Container::Add(std::string name, const Eigen::Ref<const Matrix>& m) {
  Require(!Has(name), "container: duplicate tensor " + name);
  NamedTensor t{std::move(name), static_cast<int>(m.rows()), static_cast<int>(m.cols()), {}};
  t.data.assign(m.data(), m.data() + m.size());
  tensors.push_back(std::move(t));
}

void Container::Add(std::string name, const std::vector<double>& row) {
  Require(!Has(name), "container: duplicate tensor " + name);
  tensors.push_back(NamedTensor{std::move(name), 1, static_cast<int>(row.size()), row});
}

bool Container::Has(std::string_view name) const {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return true;
  return false;
}

const NamedTensor& Container::Get(std::string_view name) const {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t;
  throw std::runtime_error("container: missing tensor " + std::string(name));
}

Matrix Container::GetMatrix(std::string_view name) const {
  const NamedTensor& t = Get(name);
  return Eigen::Map<const Matrix>(t.data.data(), t.rows, t.cols);
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteContainer(const std::filesystem::path& path, const Container& c) {
  std::string payload;
  nlohmann::json entries = nlohmann::json::array();
  for (const NamedTensor& t : c.tensors) {
    Require(static_cast<size_t>(t.rows) * t.cols == t.data.size(),
            "container: shape mismatch for " + t.name);
    entries.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols},
                       {"offset", payload.size()}});
    payload.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(double));
  }
  nlohmann::json header = {{"kind", c.kind},
                           {"meta", c.meta},
                           {"tensors", entries},
                           {"payload_bytes", payload.size()},
                           {"payload_fnv1a64", HexU64(Fnv1a64(payload))}};
  const std::string header_text = header.dump();

  std::string out(kMagic, 4);
  PutLe<uint32_t>(out, kContainerVersion);
  PutLe<uint64_t>(out, header_text.size());
  out += header_text;
  out += payload;
  WriteFileAtomic(path, out);
}

Container ReadContainer(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error(path.string() + ": not a modecompose container");
  }
  const uint32_t version = GetLe<uint32_t>(bytes, 4);
  if (version != kContainerVersion) {
    throw std::runtime_error(path.string() + ": unsupported container version " +
                             std::to_string(version));
  }
  const uint64_t header_len = GetLe<uint64_t>(bytes, 8);
  if (16 + header_len > bytes.size()) throw std::runtime_error("container: truncated header");
  const nlohmann::json header = nlohmann::json::parse(bytes.substr(16, header_len));
  const std::string_view payload(bytes.data() + 16 + header_len, bytes.size() - 16 - header_len);
  if (payload.size() != header.at("payload_bytes").get<size_t>()) {
    throw std::runtime_error("container: payload size mismatch");
  }
  if (HexU64(Fnv1a64(payload)) != header.at("payload_fnv1a64").get<std::string>()) {
    throw std::runtime_error("container: payload checksum mismatch");
  }

  Container c;
  c.kind = header.at("kind").get<std::string>();
  c.meta = header.at("meta");
  for (const auto& e : header.at("tensors")) {
    NamedTensor t;
    t.name = e.at("name").get<std::string>();
    t.rows = e.at("rows").get<int>();
    t.cols = e.at("cols").get<int>();
    const size_t offset = e.at("offset").get<size_t>();
    const size_t count = static_cast<size_t>(t.rows) * t.cols;
    if (offset + count * sizeof(double) > payload.size()) {
      throw std::runtime_error("container: tensor " + t.name + " out of bounds");
    }
    t.data.resize(count);
    std::memcpy(t.data.data(), payload.data() + offset, count * sizeof(double));
    c.tensors.push_back(std::move(t));
  }
  return c;
}

}  // namespace modecompose
