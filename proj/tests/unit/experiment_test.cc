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

#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"

namespace modecompose {
namespace {

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small oracle sweep on the three-mode world.
ExperimentConfig SmallOracleConfig(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.benchmark = "gmm3";
  cfg.backbone = "oracle";
  cfg.gmm_n_per_component = 60;
  cfg.methods = {"poe", "top1", "top3", "query_only"};
  cfg.queries_per_class = 4;  // faithfulness needs knn_k + 1 references
  cfg.n_ref = 20;
  cfg.discovery.n_per_t = 16;
  cfg.guidance.n_samples = 8;
  cfg.guidance.ddim_steps = 20;
  cfg.output_dir = out.string();
  return cfg;
}

TEST(Benchmark, ColorMnistSplitHygiene) {
  ExperimentConfig cfg;
  cfg.colormnist.per_slot = 3;
  const Benchmark b = LoadBenchmark(cfg);
  ASSERT_EQ(b.train.x.rows(), static_cast<int>(b.train_rows.size()));
  for (size_t i = 0; i < b.train_rows.size(); ++i) {
    EXPECT_FALSE(b.held_out_row[b.train_rows[i]]);
    EXPECT_EQ(b.train.x.row(i), b.x.row(b.train_rows[i]));
  }
  std::set<int> train(b.train_rows.begin(), b.train_rows.end());
  for (const auto& [c, rows] : b.eval_members) {
    for (int r : rows) {
      EXPECT_TRUE(b.held_out_row[r]);
      EXPECT_EQ(train.count(r), 0u);
    }
  }
  EXPECT_EQ(b.eval_classes.size(), 15u);
  EXPECT_EQ(b.num_train_classes, 30);
}

TEST(Benchmark, TrainingRejectsLeakedRows) {
  ExperimentConfig cfg;
  cfg.colormnist.per_slot = 2;
  cfg.width = 8;
  cfg.depth = 1;
  cfg.time_features = 4;
  Benchmark b = LoadBenchmark(cfg);
  TrainConfig tc;
  tc.epochs = 1;
  ToyDenoiser clean = MakeDenoiser(cfg, b);
  EXPECT_NO_THROW(TrainOnBenchmark(clean, b, tc));
  // Point one training row at a held-out row of x.
  b.train_rows[0] = b.eval_members.at(0).front();
  ToyDenoiser leaky = MakeDenoiser(cfg, b);
  EXPECT_THROW(TrainOnBenchmark(leaky, b, tc), std::logic_error);
}

TEST(RunQuery, RecordsStageFailuresPerMethod) {
  ExperimentConfig cfg = SmallOracleConfig(testing::TempDir("exp_query"));
  cfg.methods = {"lora", "query_only"};
  const Benchmark b = LoadBenchmark(cfg);
  const Backbone backbone = LoadOrTrainBackbone(cfg, b, "", nullptr);
  const Vector x_q = b.x.row(0).transpose();
  const QueryOutcome q = RunQuery(cfg, backbone, x_q, 7);
  ASSERT_EQ(q.samples.count("query_only"), 1u);
  EXPECT_EQ(q.samples.at("query_only").rows(), cfg.guidance.n_samples);
  // LoRA needs a trained denoiser; the oracle run records the failure.
  EXPECT_EQ(q.samples.count("lora"), 0u);
  ASSERT_EQ(q.errors.count("lora"), 1u);
  EXPECT_NE(q.errors.at("lora").find("denoiser"), std::string::npos);
  EXPECT_TRUE(q.teacher.has_value());
}

TEST(RunQuery, QueryOnlyStaysNearQuery) {
  ExperimentConfig cfg = SmallOracleConfig(testing::TempDir("exp_query_only"));
  cfg.methods = {"query_only"};
  cfg.guidance.n_samples = 64;
  const Benchmark b = LoadBenchmark(cfg);
  const Backbone backbone = LoadOrTrainBackbone(cfg, b, "", nullptr);
  const Vector x_q = b.x.row(0).transpose();
  const Matrix s = RunQuery(cfg, backbone, x_q, 3).samples.at("query_only");
  const Vector mean = s.colwise().mean().transpose();
  EXPECT_LT((mean - x_q).norm(), 1.0);
}

TEST(RunExperiment, RowsAreCompleteAndArtifactsWritten) {
  const auto dir = testing::TempDir("exp_rows");
  const ExperimentConfig cfg = SmallOracleConfig(dir);
  const ExperimentReport r = RunExperiment(cfg);
  EXPECT_TRUE(r.failures.empty());
  ASSERT_EQ(r.rows.size(), 4u * 3u * 2u);
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (const MetricRow& row : r.rows) {
    EXPECT_TRUE(row.complete);
    EXPECT_EQ(row.dataset, "gmm3");
    EXPECT_EQ(row.n_gen, cfg.queries_per_class * cfg.guidance.n_samples);
    EXPECT_EQ(row.n_ref, row.reference_role == "faithfulness" ? cfg.queries_per_class : cfg.n_ref);
    EXPECT_GE(row.fd, 0.0);
    EXPECT_GE(row.f1, 0.0);
    EXPECT_LE(row.f1, 1.0);
    keys.insert({row.method, row.class_name, row.reference_role});
  }
  EXPECT_EQ(keys.size(), r.rows.size());
  for (const char* f : {"config.json", "metrics.csv", "report.json", "summary.md"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "prototypes" / "c0_q0.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "teachers" / "c2_q3.json"));
  EXPECT_TRUE(std::filesystem::is_directory(dir / "samples" / "poe" / "class1"));
  // The CSV parses back to the in-memory rows.
  const std::vector<MetricRow> back = MetricsFromCsv(ReadFile(dir / "metrics.csv"));
  ASSERT_EQ(back.size(), r.rows.size());
  EXPECT_EQ(back[5].method, r.rows[5].method);
  EXPECT_NEAR(back[5].fd, r.rows[5].fd, 1e-9 * std::max(1.0, r.rows[5].fd));
}

TEST(RunExperiment, MetricsAreByteDeterministic) {
  const auto a = testing::TempDir("exp_det_a");
  const auto b = testing::TempDir("exp_det_b");
  RunExperiment(SmallOracleConfig(a));
  RunExperiment(SmallOracleConfig(b));
  EXPECT_EQ(ReadFile(a / "metrics.csv"), ReadFile(b / "metrics.csv"));
  EXPECT_EQ(ReadFile(a / "summary.md"), ReadFile(b / "summary.md"));
  ExperimentConfig other = SmallOracleConfig(testing::TempDir("exp_det_c"));
  ApplyGlobalSeed(other, 43);
  RunExperiment(other);
  EXPECT_NE(ReadFile(a / "metrics.csv"), ReadFile(std::filesystem::path(other.output_dir) / "metrics.csv"));
}

TEST(RunExperiment, FailedMethodMarksRowsIncomplete) {
  const auto dir = testing::TempDir("exp_fail");
  ExperimentConfig cfg = SmallOracleConfig(dir);
  cfg.methods = {"lora", "query_only"};
  cfg.classes = {1};
  const ExperimentReport r = RunExperiment(cfg);
  EXPECT_EQ(r.failures.size(), static_cast<size_t>(cfg.queries_per_class));
  ASSERT_EQ(r.rows.size(), 4u);
  for (const MetricRow& row : r.rows) EXPECT_EQ(row.complete, row.method != "lora");
}

TEST(RunExperiment, TrainedBackboneRunsEveryMethod) {
  const auto dir = testing::TempDir("exp_trained");
  ExperimentConfig cfg = SmallOracleConfig(dir);
  cfg.backbone = "trained";
  cfg.methods = {"poe", "lora", "top1", "top3", "query_only"};
  cfg.classes = {0};
  cfg.queries_per_class = 1;
  cfg.n_ref = 10;
  cfg.knn_k = 2;
  cfg.width = 16;
  cfg.depth = 2;
  cfg.time_features = 8;
  cfg.train.epochs = 3;
  cfg.distill.epochs = 2;
  cfg.distill.pool_size = 16;
  const ExperimentReport r = RunExperiment(cfg);
  EXPECT_TRUE(r.failures.empty()) << r.failures.front();
  EXPECT_EQ(r.rows.size(), 10u);
  EXPECT_TRUE(std::filesystem::exists(dir / "backbone.mcpk"));
  EXPECT_TRUE(std::filesystem::exists(dir / "adapters" / "c0_q0.mcpk"));
  EXPECT_EQ(r.diagnostics.at("backbone_loss").size(), 3u);

  // A second run from the saved checkpoint reproduces the metrics.
  ExperimentConfig again = cfg;
  again.checkpoint = (dir / "backbone.mcpk").string();
  again.output_dir = testing::TempDir("exp_trained_ckpt").string();
  const ExperimentReport r2 = RunExperiment(again);
  EXPECT_EQ(MetricsToCsv(r2.rows), MetricsToCsv(r.rows));
}

TEST(Metrics, SummaryAggregatesAcrossClasses) {
  std::vector<MetricRow> rows;
  for (int c = 0; c < 3; ++c) {
    MetricRow r{"gmm3", "poe", "class" + std::to_string(c), "generalization"};
    r.f1 = 0.2 * (c + 1);
    rows.push_back(r);
  }
  const std::string md = SummaryMarkdown(rows);
  EXPECT_NE(md.find("poe"), std::string::npos);
  // F1 is reported in percent: mean 40, standard error 20 / sqrt(3).
  EXPECT_NE(md.find("40.00 ± 11.55"), std::string::npos);
  EXPECT_NE(md.find("| 3/3 |"), std::string::npos);
  EXPECT_THROW(MetricsFromCsv("nope\n"), std::runtime_error);
}

}  // namespace
}  // namespace modecompose
