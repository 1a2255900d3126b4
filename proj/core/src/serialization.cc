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

#include "modecompose/serialization.h"

#include <cstdio>
#include <cstring>

#include "modecompose/container.h"
#include "modecompose/image_io.h"

namespace modecompose {

nlohmann::json VectorToJson(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector VectorFromJson(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json PrototypePoolToJson(const std::vector<PrototypeExpert>& pool,
                                   const DiscoveryDiagnostics* diagnostics) {
  nlohmann::json protos = nlohmann::json::array();
  for (size_t i = 0; i < pool.size(); ++i) {
    const PrototypeExpert& p = pool[i];
    protos.push_back({{"id", i},
                      {"origin_t", p.origin_t},
                      {"grad_norm", p.origin_grad_norm},
                      {"nonconcave_dims", p.nonconcave_dims},
                      {"m", VectorToJson(p.m)},
                      {"var", VectorToJson(p.var)}});
  }
  nlohmann::json j = {{"schema", "modecompose.prototypes"},
                      {"version", kPrototypeSchemaVersion},
                      {"dim", pool.empty() ? 0 : pool[0].m.size()},
                      {"prototypes", protos}};
  if (diagnostics) {
    nlohmann::json per_t = nlohmann::json::array();
    for (const auto& d : diagnostics->per_t) {
      per_t.push_back(
          {{"t", d.t}, {"starts", d.starts}, {"accepted", d.accepted}, {"survivors", d.survivors}});
    }
    j["diagnostics"] = {{"pool_size", diagnostics->pool_size}, {"per_t", per_t}};
  }
  return j;
}

namespace {

void CheckSchema(const nlohmann::json& j, const std::string& schema, int version) {
  if (j.value("schema", "") != schema) {
    throw std::runtime_error("expected a " + schema + " document");
  }
  if (j.at("version").get<int>() != version) {
    throw std::runtime_error(schema + ": unsupported version " + j.at("version").dump());
  }
}

}  // namespace

std::vector<PrototypeExpert> PrototypePoolFromJson(const nlohmann::json& j) {
  CheckSchema(j, "modecompose.prototypes", kPrototypeSchemaVersion);
  std::vector<PrototypeExpert> pool;
  const int dim = j.at("dim").get<int>();
  for (const auto& e : j.at("prototypes")) {
    PrototypeExpert p;
    p.origin_t = e.at("origin_t");
    p.origin_grad_norm = e.at("grad_norm");
    p.nonconcave_dims = e.value("nonconcave_dims", 0);
    p.m = VectorFromJson(e.at("m"));
    p.var = VectorFromJson(e.at("var"));
    Require(p.m.size() == dim && p.var.size() == dim, "prototype pool: dimension mismatch");
    Require((p.var.array() > 0.0).all(), "prototype pool: variances must be positive");
    pool.push_back(std::move(p));
  }
  return pool;
}

nlohmann::json TeacherToJson(const PoeTeacher& teacher) {
  nlohmann::json weights = nlohmann::json::array();
  for (Eigen::Index k = 0; k < teacher.weights.rows(); ++k) {
    weights.push_back(VectorToJson(teacher.weights.row(k).transpose()));
  }
  return {{"schema", "modecompose.teacher"},
          {"version", kPrototypeSchemaVersion},
          {"dim", teacher.mu.size()},
          {"mu", VectorToJson(teacher.mu)},
          {"var", VectorToJson(teacher.var)},
          {"provenance", {{"selected", teacher.selected}, {"weights", weights}}}};
}

PoeTeacher TeacherFromJson(const nlohmann::json& j) {
  CheckSchema(j, "modecompose.teacher", kPrototypeSchemaVersion);
  PoeTeacher t;
  t.mu = VectorFromJson(j.at("mu"));
  t.var = VectorFromJson(j.at("var"));
  Require(t.mu.size() == j.at("dim").get<int>() && t.var.size() == t.mu.size(),
          "teacher: dimension mismatch");
  Require((t.var.array() > 0.0).all(), "teacher: variances must be positive");
  const auto& prov = j.at("provenance");
  t.selected = prov.at("selected").get<std::vector<int>>();
  const auto& w = prov.at("weights");
  t.weights.resize(w.size(), t.mu.size());
  for (size_t k = 0; k < w.size(); ++k) t.weights.row(k) = VectorFromJson(w[k]).transpose();
  return t;
}

void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j) {
  WriteFileAtomic(path, j.dump(2) + "\n");
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  return nlohmann::json::parse(ReadFile(path));
}

void SaveSamplePool(const std::filesystem::path& dir, const Matrix& samples,
                    SamplePoolManifest manifest) {
  std::filesystem::create_directories(dir);
  manifest.dim = static_cast<int>(samples.cols());
  manifest.count = static_cast<int>(samples.rows());
  nlohmann::json files = nlohmann::json::array();
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%05d.f64", static_cast<int>(i));
    const Eigen::RowVectorXd row = samples.row(i);
    WriteFileAtomic(dir / name, std::string_view(reinterpret_cast<const char*>(row.data()),
                                                 row.size() * sizeof(double)));
    files.push_back(name);
  }
  if (manifest.image_resolution > 0) {
    WriteImageGrid(dir / "grid.png", samples, manifest.image_resolution);
  }
  const nlohmann::json j = {{"schema", "modecompose.samples"},
                            {"version", kSamplePoolSchemaVersion},
                            {"method", manifest.method},
                            {"class", manifest.class_name},
                            {"class_id", manifest.class_id},
                            {"query_id", manifest.query_id},
                            {"seed", manifest.seed},
                            {"config_hash", manifest.config_hash},
                            {"dim", manifest.dim},
                            {"count", manifest.count},
                            {"image_resolution", manifest.image_resolution},
                            {"encoding", "float64-le"},
                            {"files", files}};
  WriteJsonFile(dir / "manifest.json", j);
}

Matrix LoadSamplePool(const std::filesystem::path& dir, SamplePoolManifest* manifest) {
  const nlohmann::json j = ReadJsonFile(dir / "manifest.json");
  CheckSchema(j, "modecompose.samples", kSamplePoolSchemaVersion);
  const int dim = j.at("dim");
  const auto files = j.at("files").get<std::vector<std::string>>();
  Matrix out(files.size(), dim);
  for (size_t i = 0; i < files.size(); ++i) {
    const std::string bytes = ReadFile(dir / files[i]);
    if (bytes.size() != dim * sizeof(double)) {
      throw std::runtime_error("sample pool: " + files[i] + " has the wrong size");
    }
    std::memcpy(out.row(i).data(), bytes.data(), bytes.size());
  }
  if (manifest) {
    manifest->method = j.at("method");
    manifest->class_name = j.at("class");
    manifest->class_id = j.at("class_id");
    manifest->query_id = j.at("query_id");
    manifest->seed = j.at("seed");
    manifest->config_hash = j.at("config_hash");
    manifest->dim = dim;
    manifest->count = j.at("count");
    manifest->image_resolution = j.at("image_resolution");
  }
  return out;
}

}  // namespace modecompose
