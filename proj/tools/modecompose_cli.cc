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

// Command-line driver for the modecompose pipeline.

#include <CLI11.hpp>

#include <cstring>
#include <filesystem>
#include <iostream>
#include <optional>

#include "modecompose/config.h"
#include "modecompose/container.h"
#include "modecompose/experiment.h"
#include "modecompose/image_io.h"
#include "modecompose/metrics.h"
#include "modecompose/random.h"
#include "modecompose/serialization.h"

namespace fs = std::filesystem;
using namespace modecompose;

namespace {

struct Common {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Experiment config (JSON)");
  app->add_option("--seed", c.seed, "Override the config seed everywhere");
  app->add_option("--out", c.out, "Output root (default: $MODECOMPOSE_OUT or ./modecompose_out)");
}

ExperimentConfig Resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : LoadConfig(c.config);
  if (c.seed) ApplyGlobalSeed(cfg, *c.seed);
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.output_dir = ResolveOutputDir(cfg.output_dir);
  if (c.config.empty()) ApplyGlobalSeed(cfg, cfg.seed);
  return cfg;
}

fs::path OrDefault(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

struct QuerySpec {
  int class_id = -1;
  int index = 0;
  std::string png;
  std::string f64;
};

void AddQuery(CLI::App* app, QuerySpec& q) {
  app->add_option("--class", q.class_id, "Evaluation class of the query");
  app->add_option("--query-index", q.index, "Query index within the class split");
  app->add_option("--query-png", q.png, "Query image (RGB PNG)");
  app->add_option("--query-f64", q.f64, "Query as raw little-endian float64 values");
}

Vector ResolveQuery(const ExperimentConfig& cfg, const QuerySpec& q) {
  if (!q.png.empty()) {
    int w = 0, h = 0;
    return ReadPngRgb(q.png, &w, &h);
  }
  if (!q.f64.empty()) {
    const std::string bytes = ReadFile(q.f64);
    Require(bytes.size() % sizeof(double) == 0, "query file size is not a multiple of 8");
    Vector v(bytes.size() / sizeof(double));
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
  }
  Require(q.class_id >= 0, "give --class/--query-index, --query-png or --query-f64");
  const Benchmark bench = LoadBenchmark(cfg);
  const ReferenceSplit split = BuildReferenceSets(
      bench.eval_members.at(q.class_id), cfg.queries_per_class, cfg.n_ref,
      DeriveSeed(cfg.seed, {0x5e7, static_cast<uint64_t>(q.class_id)}));
  Require(q.index >= 0 && q.index < cfg.queries_per_class, "query index out of range");
  return bench.x.row(split.queries[q.index]).transpose();
}

Backbone ResolveBackbone(const ExperimentConfig& cfg, const std::string& checkpoint) {
  Backbone b;
  if (cfg.backbone == "oracle") {
    const Benchmark bench = LoadBenchmark(cfg);
    b.oracle = std::make_unique<GmmOracle>(*bench.density, cfg.Schedule());
    return b;
  }
  const std::string path = checkpoint.empty() ? cfg.checkpoint : checkpoint;
  Require(!path.empty(), "a trained backbone is required: pass --checkpoint");
  b.denoiser = std::make_unique<ToyDenoiser>(ToyDenoiser::Load(path));
  return b;
}

int ImageResolution(const ExperimentConfig& cfg, int dim) {
  const int r = cfg.colormnist.resolution;
  return cfg.benchmark == "colormnist" && dim == 3 * r * r ? r : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time concept discovery and product-of-experts composition"};
  app.require_subcommand(1);

  Common common;
  QuerySpec query;
  std::string out_file, checkpoint, prototypes, teacher_path, adapter_path, method, samples_dir,
      metrics_path, dataset_path, benchmark;
  int class_id = -1;
  int n_samples = 0;
  double lora_w = -1.0;

  auto* gen = app.add_subcommand("gen-data", "Generate a benchmark dataset container");
  AddCommon(gen, common);
  gen->add_option("--benchmark", benchmark, "colormnist | gmm3 | gmm_hier");
  gen->add_option("-o,--output", out_file, "Dataset path");

  auto* train = app.add_subcommand("train-backbone", "Train the toy denoiser on the seen split");
  AddCommon(train, common);
  train->add_option("--dataset", dataset_path, "Dataset container (default: generate)");
  train->add_option("-o,--output", out_file, "Checkpoint path");

  auto* discover = app.add_subcommand("discover", "Mode discovery for one query");
  AddCommon(discover, common);
  AddQuery(discover, query);
  discover->add_option("--checkpoint", checkpoint, "Backbone checkpoint");
  discover->add_option("-o,--output", out_file, "Prototype pool JSON");

  auto* compose = app.add_subcommand("compose", "Greedy selection and PoE teacher");
  AddCommon(compose, common);
  AddQuery(compose, query);
  compose->add_option("--prototypes", prototypes, "Prototype pool JSON")->required();
  compose->add_option("-o,--output", out_file, "Teacher JSON");

  auto* sample = app.add_subcommand("sample", "Guided DDIM sampling");
  AddCommon(sample, common);
  AddQuery(sample, query);
  sample->add_option("--method", method, "poe | query_only | top1 | top3 | lora | uncond")->required();
  sample->add_option("--checkpoint", checkpoint, "Backbone checkpoint");
  sample->add_option("--teacher", teacher_path, "Teacher JSON (poe)");
  sample->add_option("--adapter", adapter_path, "Adapter checkpoint (lora)");
  sample->add_option("--n", n_samples, "Number of samples (default: guidance.n_samples)");
  sample->add_option("--w", lora_w, "Guidance scale for lora sampling");
  sample->add_option("-o,--output", out_file, "Sample pool directory");

  auto* distill = app.add_subcommand("distill", "Distill a teacher into a LoRA adapter");
  AddCommon(distill, common);
  distill->add_option("--checkpoint", checkpoint, "Backbone checkpoint");
  distill->add_option("--teacher", teacher_path, "Teacher JSON")->required();
  distill->add_option("-o,--output", out_file, "Adapter checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics of a sample pool against references");
  AddCommon(evaluate, common);
  evaluate->add_option("--samples", samples_dir, "Sample pool directory")->required();
  evaluate->add_option("--class", class_id, "Evaluation class")->required();
  evaluate->add_option("-o,--output", out_file, "CSV file (default: stdout)");

  auto* run = app.add_subcommand("run-experiment", "Full sweep over classes, queries and methods");
  AddCommon(run, common);

  auto* report = app.add_subcommand("report", "Mean and SE table from a metrics CSV");
  report->add_option("--metrics", metrics_path, "metrics.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = Resolve(common);
      if (!benchmark.empty()) cfg.benchmark = benchmark;
      const fs::path path = OrDefault(out_file, fs::path(cfg.output_dir) / (cfg.benchmark + ".mcpk"));
      SaveBenchmarkDataset(cfg, path);
      std::cout << path.string() << "\n";
    } else if (train->parsed()) {
      ExperimentConfig cfg = Resolve(common);
      if (!dataset_path.empty()) cfg.dataset = dataset_path;
      const Benchmark bench = LoadBenchmark(cfg);
      ToyDenoiser model = MakeDenoiser(cfg, bench);
      std::cerr << "parameters: " << model.ParameterCount() << "\n";
      const TrainResult r = TrainOnBenchmark(model, bench, cfg.train);
      for (size_t e = 0; e < r.epoch_loss.size(); ++e) {
        std::cerr << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << "\n";
      }
      const fs::path path = OrDefault(out_file, fs::path(cfg.output_dir) / "backbone.mcpk");
      model.Save(path);
      std::cout << path.string() << "\n";
    } else if (discover->parsed()) {
      const ExperimentConfig cfg = Resolve(common);
      const Backbone b = ResolveBackbone(cfg, checkpoint);
      const DiscoveryResult r = DiscoverPrototypes(b.model(), ResolveQuery(cfg, query), cfg.discovery);
      const fs::path path = OrDefault(out_file, fs::path(cfg.output_dir) / "prototypes.json");
      WriteJsonFile(path, PrototypePoolToJson(r.pool, &r.diagnostics));
      std::cerr << "pool size M = " << r.pool.size() << "\n";
      std::cout << path.string() << "\n";
    } else if (compose->parsed()) {
      const ExperimentConfig cfg = Resolve(common);
      const auto pool = PrototypePoolFromJson(ReadJsonFile(prototypes));
      CompositionConfig comp = cfg.composition;
      comp.k = std::min<int>(comp.k, static_cast<int>(pool.size()));
      const PoeTeacher t = ComposeTeacher(pool, ResolveQuery(cfg, query), comp);
      const fs::path path = OrDefault(out_file, fs::path(cfg.output_dir) / "teacher.json");
      WriteJsonFile(path, TeacherToJson(t));
      std::cout << path.string() << "\n";
    } else if (sample->parsed()) {
      const ExperimentConfig cfg = Resolve(common);
      const Backbone b = ResolveBackbone(cfg, checkpoint);
      GuidanceConfig g = cfg.guidance;
      if (n_samples > 0) g.n_samples = n_samples;
      Matrix x;
      if (method == "poe") {
        Require(!teacher_path.empty(), "--teacher is required for poe");
        x = SampleWithTeacher(b.model(), TeacherFromJson(ReadJsonFile(teacher_path)), g);
      } else if (method == "query_only") {
        x = SampleWithTeacher(b.model(), QueryOnlyTeacher(ResolveQuery(cfg, query), cfg.baselines.sigma_q), g);
      } else if (method == "top1" || method == "top3") {
        const auto losses = ScoreTrainedClasses(b.model(), ResolveQuery(cfg, query),
                                                cfg.baselines.t_eval, cfg.baselines.n_eps, cfg.seed);
        const int k = std::min<int>(method == "top1" ? 1 : 3, static_cast<int>(losses.size()));
        x = SampleTopk(b.model(), SelectTopk(losses, k, cfg.baselines.tau_tk), g);
      } else if (method == "lora") {
        Require(!adapter_path.empty() && b.denoiser, "--adapter and a trained backbone are required for lora");
        const LoraAdapter a = LoadAdapter(adapter_path);
        x = SampleDistilled(*b.denoiser, a, lora_w >= 0.0 ? lora_w : cfg.lora_w, g);
      } else if (method == "uncond") {
        x = SampleUnconditional(b.model(), g);
      } else {
        throw std::invalid_argument("unknown method " + method);
      }
      const fs::path dir = OrDefault(out_file, fs::path(cfg.output_dir) / ("samples_" + method));
      SamplePoolManifest man{method, query.class_id >= 0 ? "class" + std::to_string(query.class_id) : "",
                             query.class_id, "cli", g.seed, ConfigHash(cfg), 0, 0,
                             ImageResolution(cfg, static_cast<int>(x.cols()))};
      SaveSamplePool(dir, x, man);
      std::cout << dir.string() << "\n";
    } else if (distill->parsed()) {
      const ExperimentConfig cfg = Resolve(common);
      const Backbone b = ResolveBackbone(cfg, checkpoint);
      Require(b.denoiser != nullptr, "distillation needs a trained backbone");
      const PoeTeacher t = TeacherFromJson(ReadJsonFile(teacher_path));
      const Matrix pool = GeneratePool(*b.denoiser, t, cfg.guidance, cfg.distill.pool_size);
      const DistillResult r = Distill(*b.denoiser, pool, cfg.distill);
      for (size_t e = 0; e < r.epoch_loss.size(); ++e) {
        std::cerr << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << "\n";
      }
      const fs::path path = OrDefault(out_file, fs::path(cfg.output_dir) / "adapter.mcpk");
      SaveAdapter(path, r.adapter, fs::path(teacher_path).stem().string());
      std::cout << path.string() << "\n";
    } else if (evaluate->parsed()) {
      const ExperimentConfig cfg = Resolve(common);
      SamplePoolManifest man;
      const Matrix gen_x = LoadSamplePool(samples_dir, &man);
      const Benchmark bench = LoadBenchmark(cfg);
      const ReferenceSplit split = BuildReferenceSets(
          bench.eval_members.at(class_id), cfg.queries_per_class, cfg.n_ref,
          DeriveSeed(cfg.seed, {0x5e7, static_cast<uint64_t>(class_id)}));
      auto rows_of = [&](const std::vector<int>& idx) {
        Matrix m(idx.size(), bench.x.cols());
        for (size_t i = 0; i < idx.size(); ++i) m.row(i) = bench.x.row(idx[i]);
        return m;
      };
      const auto rows = EvaluateSamples(bench.name, man.method, bench.class_names.at(class_id), gen_x,
                                        rows_of(split.queries), rows_of(split.generalization),
                                        cfg.knn_k, cfg.seed);
      const std::string csv = MetricsToCsv(rows);
      if (out_file.empty()) {
        std::cout << csv;
      } else {
        WriteFileAtomic(out_file, csv);
        std::cout << out_file << "\n";
      }
    } else if (run->parsed()) {
      const ExperimentConfig cfg = Resolve(common);
      const ExperimentReport r = RunExperiment(cfg, &std::cerr);
      std::cout << SummaryMarkdown(r.rows);
      std::cerr << "wrote " << r.output_dir.string() << " (" << r.rows.size() << " rows, "
                << r.failures.size() << " failures, " << r.wall_seconds << " s)\n";
    } else if (report->parsed()) {
      std::cout << SummaryMarkdown(MetricsFromCsv(ReadFile(metrics_path)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
