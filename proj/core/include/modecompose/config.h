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

#ifndef MODECOMPOSE_CONFIG_H_
#define MODECOMPOSE_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modecompose/datasets.h"
#include "modecompose/denoiser.h"
#include "modecompose/distillation.h"
#include "modecompose/mode_discovery.h"
#include "modecompose/poe.h"
#include "modecompose/sampler.h"

namespace modecompose {

inline constexpr int kConfigSchemaVersion = 1;

struct BaselineConfig {
  std::vector<int> t_eval = {50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
  int n_eps = 8;
  double tau_tk = 1.0;
  double sigma_q = 0.1;
};

struct ExperimentConfig {
  std::string benchmark = "colormnist";  // colormnist | gmm3 | gmm_hier
  std::string backbone = "trained";      // trained | oracle
  std::string checkpoint;                // trained backbone; empty trains one in-run
  std::string dataset;                   // dataset container; empty generates one
  int num_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  ColorMnistSpec colormnist;
  int gmm_n_per_component = 200;
  int width = 256;
  int depth = 3;
  int time_features = 32;
  OutputHead head = OutputHead::kX0;
  double x0_gain_cap = 3.0;
  TrainConfig train;
  AscentConfig discovery;
  CompositionConfig composition;
  GuidanceConfig guidance;
  DistillConfig distill;
  double lora_w = 0.8;
  BaselineConfig baselines;
  std::vector<std::string> methods = {"poe", "lora", "top1", "top3", "query_only"};
  int queries_per_class = 10;
  int n_ref = 100;
  int knn_k = 3;
  std::vector<int> classes;  // evaluated classes; empty means all
  bool save_samples = true;
  std::string output_dir;  // empty: $MODECOMPOSE_OUT or ./modecompose_out
  uint64_t seed = 42;

  NoiseSchedule Schedule() const { return NoiseSchedule::Linear(num_steps, beta_start, beta_end); }
  void Validate() const;
};

// Copies the global seed into every component seed. Called by the loader
// and by --seed overrides.
void ApplyGlobalSeed(ExperimentConfig& cfg, uint64_t seed);

// Canonical JSON with "schema" and "version" keys. Component seeds are not
// written; they all follow "seed".
nlohmann::json ConfigToJson(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
ExperimentConfig LoadConfig(const std::string& path);

// FNV-1a 64 of the canonical JSON without output_dir, as "0x...".
std::string ConfigHash(const ExperimentConfig& cfg);

// Resolves the output root: explicit value, then $MODECOMPOSE_OUT, then
// ./modecompose_out.
std::string ResolveOutputDir(const std::string& configured);

}  // namespace modecompose

#endif  // MODECOMPOSE_CONFIG_H_
