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

#include "modecompose/experiment.h"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <set>
#include <sstream>

#include "modecompose/container.h"
#include "modecompose/image_io.h"
#include "modecompose/metrics.h"
#include "modecompose/random.h"
#include "modecompose/serialization.h"

namespace modecompose {
namespace {

GmmWorldSpec WorldFor(const std::string& benchmark) {
  if (benchmark == "gmm3") return ThreeModeWorld();
  if (benchmark == "gmm_hier") return HierarchicalWorld();
  throw std::invalid_argument("unknown GMM benchmark " + benchmark);
}

Benchmark FromColorMnist(const ColorMnistData& data) {
  Benchmark b;
  b.name = "colormnist";
  b.x = data.x;
  b.image_resolution = data.spec.resolution;
  b.held_out_row.resize(data.slot.size());
  for (size_t i = 0; i < data.slot.size(); ++i) {
    b.held_out_row[i] = data.slots[data.slot[i]].held_out;
    if (!b.held_out_row[i]) b.train_rows.push_back(static_cast<int>(i));
  }
  b.train = data.SeenSplit();
  b.num_train_classes = data.num_seen_classes;
  for (int c = 0; c < data.num_ood_classes; ++c) {
    b.eval_classes.push_back(c);
    b.eval_members[c] = data.OodMembers(c);
    b.class_names[c] = data.OodSlot(c).Name();
  }
  return b;
}

Benchmark FromGmm(const std::string& name, const GmmWorldData& data) {
  Benchmark b;
  b.name = name;
  b.x = data.data.x;
  b.train = data.data;
  b.held_out_row.assign(data.data.labels.size(), false);
  for (size_t i = 0; i < data.data.labels.size(); ++i) {
    b.train_rows.push_back(static_cast<int>(i));
    b.eval_members[data.data.labels[i]].push_back(static_cast<int>(i));
  }
  for (const auto& [c, rows] : b.eval_members) {
    b.eval_classes.push_back(c);
    b.class_names[c] = "class" + std::to_string(c);
  }
  b.num_train_classes = static_cast<int>(b.eval_classes.size());
  b.density = data.density;
  return b;
}

Matrix Rows(const Matrix& x, const std::vector<int>& rows) {
  Matrix out(rows.size(), x.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = x.row(rows[i]);
  return out;
}

void Log(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

Benchmark LoadBenchmark(const ExperimentConfig& cfg) {
  if (cfg.benchmark == "colormnist") {
    if (!cfg.dataset.empty()) return FromColorMnist(LoadColorMnist(cfg.dataset));
    return FromColorMnist(GenColorMnist(cfg.colormnist));
  }
  if (!cfg.dataset.empty()) return FromGmm(cfg.benchmark, LoadGmmWorldData(cfg.dataset));
  return FromGmm(cfg.benchmark, GenGmm2d(WorldFor(cfg.benchmark), cfg.gmm_n_per_component, cfg.seed));
}

void SaveBenchmarkDataset(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  if (cfg.benchmark == "colormnist") {
    SaveColorMnist(path, GenColorMnist(cfg.colormnist));
  } else {
    const GmmWorldSpec spec = WorldFor(cfg.benchmark);
    SaveGmmWorld(path, spec, GenGmm2d(spec, cfg.gmm_n_per_component, cfg.seed));
  }
}

const ScoreModel& Backbone::model() const {
  if (oracle) return *oracle;
  if (denoiser) return *denoiser;
  throw std::logic_error("backbone: empty");
}

TrainResult TrainOnBenchmark(ToyDenoiser& model, const Benchmark& bench, const TrainConfig& cfg) {
  return TrainBackbone(model, bench.train, cfg, [&](std::span<const int> rows) {
    for (int r : rows) {
      if (bench.held_out_row.at(bench.train_rows.at(r))) {
        throw std::logic_error("split hygiene: held-out row " + std::to_string(bench.train_rows[r]) +
                               " reached the training stream");
      }
    }
  });
}

ToyDenoiser MakeDenoiser(const ExperimentConfig& cfg, const Benchmark& bench) {
  DenoiserArch arch{static_cast<int>(bench.x.cols()), bench.num_train_classes, cfg.width, cfg.depth,
                    cfg.time_features, cfg.head, cfg.x0_gain_cap};
  return ToyDenoiser(arch, cfg.Schedule(), DeriveSeed(cfg.seed, {0xb0b}));
}

Backbone LoadOrTrainBackbone(const ExperimentConfig& cfg, const Benchmark& bench,
                             const std::filesystem::path& train_out, std::ostream* log) {
  Backbone b;
  if (cfg.backbone == "oracle") {
    Require(bench.density.has_value(), "backbone: the oracle needs a GMM benchmark");
    b.oracle = std::make_unique<GmmOracle>(*bench.density, cfg.Schedule());
    return b;
  }
  if (!cfg.checkpoint.empty()) {
    b.denoiser = std::make_unique<ToyDenoiser>(ToyDenoiser::Load(cfg.checkpoint));
    Require(b.denoiser->dim() == bench.x.cols(), "backbone: checkpoint dimension mismatch");
    Require(b.denoiser->num_classes() == bench.num_train_classes,
            "backbone: checkpoint class count mismatch");
    Log(log, "loaded backbone " + cfg.checkpoint);
    return b;
  }
  b.denoiser = std::make_unique<ToyDenoiser>(MakeDenoiser(cfg, bench));
  Log(log, "training backbone: " + std::to_string(b.denoiser->ParameterCount()) + " parameters, " +
               std::to_string(bench.train.x.rows()) + " examples");
  b.train_loss = TrainOnBenchmark(*b.denoiser, bench, cfg.train).epoch_loss;
  Log(log, "backbone loss " + FormatDouble(b.train_loss.front()) + " -> " +
               FormatDouble(b.train_loss.back()));
  if (!train_out.empty()) b.denoiser->Save(train_out);
  return b;
}

QueryOutcome RunQuery(const ExperimentConfig& cfg, const Backbone& backbone, const Vector& x_q,
                      uint64_t query_seed) {
  const ScoreModel& model = backbone.model();
  const std::set<std::string> methods(cfg.methods.begin(), cfg.methods.end());
  QueryOutcome out;
  GuidanceConfig g = cfg.guidance;
  g.seed = query_seed;

  const bool need_teacher = methods.count("poe") || methods.count("lora");
  std::string teacher_error;
  if (need_teacher) {
    try {
      AscentConfig a = cfg.discovery;
      a.seed = query_seed;
      out.discovery = DiscoverPrototypes(model, x_q, a);
      CompositionConfig comp = cfg.composition;
      comp.k = std::min<int>(comp.k, static_cast<int>(out.discovery->pool.size()));
      out.teacher = ComposeTeacher(out.discovery->pool, x_q, comp);
    } catch (const std::exception& e) {
      teacher_error = std::string("discovery/composition: ") + e.what();
    }
  }
  auto run = [&](const std::string& method, auto&& fn) {
    if (!methods.count(method)) return;
    try {
      out.samples[method] = fn();
    } catch (const std::exception& e) {
      out.errors[method] = e.what();
    }
  };
  run("poe", [&]() -> Matrix {
    if (!out.teacher) throw std::runtime_error(teacher_error);
    return SampleWithTeacher(model, *out.teacher, g);
  });
  run("lora", [&]() -> Matrix {
    if (!out.teacher) throw std::runtime_error(teacher_error);
    if (!backbone.denoiser) throw std::runtime_error("lora: needs a trained denoiser backbone");
    const Matrix pool = GeneratePool(model, *out.teacher, g, cfg.distill.pool_size);
    DistillConfig d = cfg.distill;
    d.seed = query_seed;
    DistillResult r = Distill(*backbone.denoiser, pool, d);
    out.distill_loss = r.epoch_loss;
    out.adapter.emplace(r.adapter);
    return SampleDistilled(*backbone.denoiser, *out.adapter, cfg.lora_w, g);
  });
  std::vector<double> losses;
  auto topk = [&](int k) -> Matrix {
    if (losses.empty()) {
      losses = ScoreTrainedClasses(model, x_q, cfg.baselines.t_eval, cfg.baselines.n_eps, query_seed);
    }
    const TopkChoice choice =
        SelectTopk(losses, std::min<int>(k, static_cast<int>(losses.size())), cfg.baselines.tau_tk);
    if (out.topk_classes.size() < choice.classes.size()) out.topk_classes = choice.classes;
    return SampleTopk(model, choice, g);
  };
  run("top1", [&] { return topk(1); });
  run("top3", [&] { return topk(3); });
  run("query_only", [&] {
    return SampleWithTeacher(model, QueryOnlyTeacher(x_q, cfg.baselines.sigma_q), g);
  });
  return out;
}

std::vector<MetricRow> EvaluateSamples(const std::string& dataset, const std::string& method,
                                       const std::string& class_name, const Matrix& generated,
                                       const Matrix& faithfulness_ref,
                                       const Matrix& generalization_ref, int k, uint64_t seed) {
  std::vector<MetricRow> rows;
  for (const auto& [role, ref] : {std::pair<std::string, const Matrix*>{"faithfulness", &faithfulness_ref},
                                  {"generalization", &generalization_ref}}) {
    MetricRow r{dataset, method, class_name, role};
    r.n_gen = static_cast<int>(generated.rows());
    r.n_ref = static_cast<int>(ref->rows());
    r.seed = seed;
    if (generated.rows() >= k + 1 && ref->rows() >= k + 1) {
      const PrecisionRecall pr = KnnPrecisionRecall(generated, *ref, k);
      r.precision = pr.precision;
      r.recall = pr.recall;
      r.f1 = F1(pr.precision, pr.recall);
      r.fd = FrechetGaussian(generated, *ref);
    } else {
      r.complete = false;
    }
    rows.push_back(r);
  }
  return rows;
}

ExperimentReport RunExperiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config_hash = ConfigHash(cfg);
  report.seed = cfg.seed;
  report.output_dir = ResolveOutputDir(cfg.output_dir);
  const std::filesystem::path out = report.output_dir;
  std::filesystem::create_directories(out);
  WriteJsonFile(out / "config.json", ConfigToJson(cfg));

  const Benchmark bench = LoadBenchmark(cfg);
  const Backbone backbone = LoadOrTrainBackbone(
      cfg, bench, cfg.backbone == "trained" && cfg.checkpoint.empty() ? out / "backbone.mcpk" : "",
      log);
  if (!backbone.train_loss.empty()) report.diagnostics["backbone_loss"] = backbone.train_loss;

  std::vector<int> classes = cfg.classes.empty() ? bench.eval_classes : cfg.classes;
  nlohmann::json query_diag = nlohmann::json::array();
  for (int c : classes) {
    Require(bench.eval_members.count(c) > 0, "experiment: unknown class " + std::to_string(c));
    const std::string& cname = bench.class_names.at(c);
    const ReferenceSplit split = BuildReferenceSets(bench.eval_members.at(c), cfg.queries_per_class,
                                                    cfg.n_ref, DeriveSeed(cfg.seed, {0x5e7, static_cast<uint64_t>(c)}));
    std::map<std::string, std::vector<Matrix>> gens;
    std::map<std::string, bool> failed;
    for (int qi = 0; qi < cfg.queries_per_class; ++qi) {
      const std::string qid = "c" + std::to_string(c) + "_q" + std::to_string(qi);
      const uint64_t qseed = DeriveSeed(cfg.seed, {0x9e1, static_cast<uint64_t>(c), static_cast<uint64_t>(qi)});
      const Vector x_q = bench.x.row(split.queries[qi]).transpose();
      const QueryOutcome q = RunQuery(cfg, backbone, x_q, qseed);
      nlohmann::json qd = {{"query_id", qid}, {"class", cname}, {"row", split.queries[qi]}};
      if (q.discovery) {
        qd["pool_size"] = q.discovery->diagnostics.pool_size;
        WriteJsonFile(out / "prototypes" / (qid + ".json"),
                      PrototypePoolToJson(q.discovery->pool, &q.discovery->diagnostics));
      }
      if (q.teacher) {
        qd["selected"] = q.teacher->selected;
        WriteJsonFile(out / "teachers" / (qid + ".json"), TeacherToJson(*q.teacher));
      }
      if (q.adapter) {
        SaveAdapter(out / "adapters" / (qid + ".mcpk"), *q.adapter, qid);
        qd["distill_loss"] = q.distill_loss;
      }
      if (!q.topk_classes.empty()) qd["topk_classes"] = q.topk_classes;
      for (const std::string& m : cfg.methods) {
        auto it = q.samples.find(m);
        if (it == q.samples.end()) {
          failed[m] = true;
          const std::string msg = qid + " " + m + ": " + q.errors.at(m);
          report.failures.push_back(msg);
          Log(log, "FAILED " + msg);
          continue;
        }
        gens[m].push_back(it->second);
        if (cfg.save_samples) {
          SamplePoolManifest man{m, cname, c, qid, qseed, report.config_hash, 0, 0,
                                 bench.image_resolution};
          SaveSamplePool(out / "samples" / m / cname / qid, it->second, man);
        }
      }
      query_diag.push_back(qd);
      Log(log, "done " + qid + " (" + cname + ")");
    }

    const Matrix faith = Rows(bench.x, split.queries);
    const Matrix general = Rows(bench.x, split.generalization);
    for (const std::string& m : cfg.methods) {
      int n = 0;
      for (const Matrix& g : gens[m]) n += static_cast<int>(g.rows());
      Matrix all(n, bench.x.cols());
      int offset = 0;
      for (const Matrix& g : gens[m]) {
        all.middleRows(offset, g.rows()) = g;
        offset += static_cast<int>(g.rows());
      }
      std::vector<MetricRow> rows =
          EvaluateSamples(bench.name, m, cname, all, faith, general, cfg.knn_k, cfg.seed);
      for (MetricRow& r : rows) {
        if (failed[m]) r.complete = false;
        report.rows.push_back(r);
      }
      if (bench.image_resolution > 0 && n > 0) {
        WriteImageGrid(out / "grids" / (m + "_" + cname + ".png"), all.topRows(std::min(n, 64)),
                       bench.image_resolution);
      }
    }
    if (bench.image_resolution > 0) {
      WriteImageGrid(out / "grids" / ("queries_" + cname + ".png"), faith, bench.image_resolution);
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.diagnostics["queries"] = query_diag;
  WriteFileAtomic(out / "metrics.csv", MetricsToCsv(report.rows));
  WriteFileAtomic(out / "summary.md", SummaryMarkdown(report.rows));
  WriteJsonFile(out / "report.json", {{"config_hash", report.config_hash},
                                      {"seed", report.seed},
                                      {"wall_seconds", report.wall_seconds},
                                      {"rows", report.rows.size()},
                                      {"failures", report.failures},
                                      {"diagnostics", report.diagnostics}});
  return report;
}

std::string MetricsToCsv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << "dataset,method,class,reference_role,fd,precision,recall,f1,n_gen,n_ref,seed,complete\n";
  for (const MetricRow& r : rows) {
    os << r.dataset << ',' << r.method << ',' << r.class_name << ',' << r.reference_role << ','
       << FormatDouble(r.fd) << ',' << FormatDouble(r.precision) << ',' << FormatDouble(r.recall)
       << ',' << FormatDouble(r.f1) << ',' << r.n_gen << ',' << r.n_ref << ',' << r.seed << ','
       << (r.complete ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<MetricRow> MetricsFromCsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (line.rfind("dataset,method,class,reference_role", 0) != 0) {
    throw std::runtime_error("metrics csv: unexpected header");
  }
  std::vector<MetricRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() < 11) throw std::runtime_error("metrics csv: short row: " + line);
    MetricRow r{f[0], f[1], f[2], f[3], std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                std::stod(f[7]), std::stoi(f[8]), std::stoi(f[9]), std::stoull(f[10]),
                f.size() < 12 || f[11] == "1"};
    rows.push_back(r);
  }
  return rows;
}

std::string SummaryMarkdown(const std::vector<MetricRow>& rows) {
  // (dataset, role, method) in first-seen order.
  std::vector<std::tuple<std::string, std::string, std::string>> keys;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const MetricRow*>> groups;
  for (const MetricRow& r : rows) {
    auto key = std::make_tuple(r.dataset, r.reference_role, r.method);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  std::ostringstream os;
  os << "| dataset | reference | method | classes | FD | precision | recall | F1 |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  char buf[64];
  auto cell = [&](const std::vector<const MetricRow*>& g, double MetricRow::*field, double scale) {
    std::vector<double> v;
    for (const MetricRow* r : g)
      if (r->complete) v.push_back(r->*field * scale);
    const MeanSe m = MeanStandardError(v);
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", m.mean, m.se);
    return std::string(buf);
  };
  for (const auto& key : keys) {
    const auto& g = groups[key];
    int complete = 0;
    for (const MetricRow* r : g) complete += r->complete ? 1 : 0;
    os << "| " << std::get<0>(key) << " | " << std::get<1>(key) << " | " << std::get<2>(key) << " | "
       << complete << "/" << g.size() << " | " << cell(g, &MetricRow::fd, 1.0) << " | "
       << cell(g, &MetricRow::precision, 100.0) << " | " << cell(g, &MetricRow::recall, 100.0)
       << " | " << cell(g, &MetricRow::f1, 100.0) << " |\n";
  }
  return os.str();
}

}  // namespace modecompose
