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

#ifndef MODECOMPOSE_EXPERIMENT_H_
#define MODECOMPOSE_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modecompose/config.h"
#include "modecompose/gmm.h"

namespace modecompose {

// Benchmark data in the shape the orchestrator needs.
struct Benchmark {
  std::string name;
  Matrix x;                        // every row of the benchmark
  int image_resolution = 0;        // 0 for non-image data
  LabeledDataset train;            // backbone training data
  std::vector<int> train_rows;     // row of x behind each training row
  std::vector<bool> held_out_row;  // per row of x
  int num_train_classes = 0;
  std::vector<int> eval_classes;
  std::map<int, std::vector<int>> eval_members;  // class -> rows of x
  std::map<int, std::string> class_names;
  std::optional<GmmDensity> density;  // exact oracle for GMM worlds
};

// Loads cfg.dataset or generates the configured benchmark.
Benchmark LoadBenchmark(const ExperimentConfig& cfg);

// Writes the benchmark's dataset container.
void SaveBenchmarkDataset(const ExperimentConfig& cfg, const std::filesystem::path& path);

struct Backbone {
  std::unique_ptr<GmmOracle> oracle;
  std::unique_ptr<ToyDenoiser> denoiser;
  std::vector<double> train_loss;  // empty unless trained in this call

  const ScoreModel& model() const;
};

// Throws if a training batch touches a held-out row.
TrainResult TrainOnBenchmark(ToyDenoiser& model, const Benchmark& bench, const TrainConfig& cfg);

ToyDenoiser MakeDenoiser(const ExperimentConfig& cfg, const Benchmark& bench);

// Oracle, checkpoint, or a freshly trained denoiser (saved to
// `train_out` when non-empty).
Backbone LoadOrTrainBackbone(const ExperimentConfig& cfg, const Benchmark& bench,
                             const std::filesystem::path& train_out, std::ostream* log);

struct QueryOutcome {
  std::map<std::string, Matrix> samples;      // method -> n_gen x d
  std::map<std::string, std::string> errors;  // method -> message
  std::optional<DiscoveryResult> discovery;
  std::optional<PoeTeacher> teacher;
  std::optional<LoraAdapter> adapter;
  std::vector<double> distill_loss;
  std::vector<int> topk_classes;
};

// Runs every configured method for one query. Stage failures are recorded
// per method instead of thrown.
QueryOutcome RunQuery(const ExperimentConfig& cfg, const Backbone& backbone, const Vector& x_q,
                      uint64_t query_seed);

struct MetricRow {
  std::string dataset;
  std::string method;
  std::string class_name;
  std::string reference_role;  // faithfulness | generalization
  double fd = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int n_gen = 0;
  int n_ref = 0;
  uint64_t seed = 0;
  bool complete = true;
};

struct ExperimentReport {
  std::string config_hash;
  uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::filesystem::path output_dir;
  std::vector<MetricRow> rows;
  std::vector<std::string> failures;
  nlohmann::json diagnostics = nlohmann::json::object();
};

// Metrics for one (method, class): faithfulness and generalization rows.
std::vector<MetricRow> EvaluateSamples(const std::string& dataset, const std::string& method,
                                       const std::string& class_name, const Matrix& generated,
                                       const Matrix& faithfulness_ref,
                                       const Matrix& generalization_ref, int k, uint64_t seed);

// Full sweep; writes config.json, metrics.csv, report.json, summary.md and
// per-query artifacts under the resolved output directory.
ExperimentReport RunExperiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

std::string MetricsToCsv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> MetricsFromCsv(const std::string& text);

// Mean and standard error across classes per (dataset, method, role).
std::string SummaryMarkdown(const std::vector<MetricRow>& rows);

}  // namespace modecompose

#endif  // MODECOMPOSE_EXPERIMENT_H_
