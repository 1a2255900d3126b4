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

#include "modecompose/config.h"

#include <cstdlib>
#include <set>
#include <sstream>

#include "modecompose/container.h"

namespace modecompose {
namespace {

using nlohmann::json;

// Reads optional keys from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument("config: " + where_ + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw std::invalid_argument("config: unknown key " + where_ + "." + key);
    }
  }
  template <typename T>
  void Get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: bad value for " + where_ + "." + key + ": " + e.what());
    }
  }
  const json* Child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json AdamToJson(const AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps},
          {"weight_decay", a.weight_decay}};
}

void AdamFromJson(const json& j, AdamConfig& a, const std::string& where) {
  Section s(j, where);
  s.Get("lr", a.lr);
  s.Get("beta1", a.beta1);
  s.Get("beta2", a.beta2);
  s.Get("eps", a.eps);
  s.Get("weight_decay", a.weight_decay);
}

std::string InitName(InitStrategy s) { return s == InitStrategy::kHybrid ? "hybrid" : "query_centered"; }

InitStrategy ParseInit(const std::string& s) {
  if (s == "hybrid") return InitStrategy::kHybrid;
  if (s == "query_centered") return InitStrategy::kQueryCentered;
  throw std::invalid_argument("config: unknown discovery.init " + s);
}

std::string ModeName(GuidanceMode m) { return m == GuidanceMode::kFixed ? "fixed" : "variance_aware"; }

GuidanceMode ParseMode(const std::string& s) {
  if (s == "fixed") return GuidanceMode::kFixed;
  if (s == "variance_aware") return GuidanceMode::kVarianceAware;
  throw std::invalid_argument("config: unknown guidance.schedule_mode " + s);
}

}  // namespace

void ExperimentConfig::Validate() const {
  Require(benchmark == "colormnist" || benchmark == "gmm3" || benchmark == "gmm_hier",
          "config: benchmark must be colormnist, gmm3 or gmm_hier");
  Require(backbone == "trained" || backbone == "oracle", "config: backbone must be trained or oracle");
  Require(!(backbone == "oracle" && benchmark == "colormnist"),
          "config: the oracle backbone needs a GMM benchmark");
  Require(!methods.empty(), "config: method list is empty");
  for (const std::string& m : methods) {
    Require(m == "poe" || m == "lora" || m == "top1" || m == "top3" || m == "query_only",
            "config: unknown method " + m);
  }
  Require(queries_per_class >= 1 && n_ref >= 1 && knn_k >= 1, "config: counts must be positive");
  Require(baselines.n_eps >= 1 && baselines.tau_tk > 0.0 && baselines.sigma_q > 0.0,
          "config: bad baseline settings");
  Require(!baselines.t_eval.empty(), "config: baselines.t_eval is empty");
  for (int t : baselines.t_eval) Require(t >= 1 && t <= num_steps, "config: t_eval outside [1, T]");
  Require(composition.k >= 1 && composition.tau > 0.0, "config: bad composition settings");
  Schedule();
  discovery.Validate(num_steps);
  guidance.Validate(num_steps);
  distill.Validate();
  if (benchmark == "colormnist") colormnist.Validate();
}

void ApplyGlobalSeed(ExperimentConfig& cfg, uint64_t seed) {
  cfg.seed = seed;
  cfg.colormnist.seed = seed;
  cfg.train.seed = seed;
  cfg.discovery.seed = seed;
  cfg.guidance.seed = seed;
  cfg.distill.seed = seed;
}

json ConfigToJson(const ExperimentConfig& c) {
  json pairs = json::array();
  for (const auto& [a, b] : c.colormnist.held_out_pairs) pairs.push_back({a, b});
  const AscentConfig& d = c.discovery;
  return {
      {"schema", "modecompose.config"},
      {"version", kConfigSchemaVersion},
      {"benchmark", c.benchmark},
      {"backbone", c.backbone},
      {"checkpoint", c.checkpoint},
      {"dataset", c.dataset},
      {"schedule", {{"num_steps", c.num_steps}, {"beta_start", c.beta_start}, {"beta_end", c.beta_end}}},
      {"colormnist",
       {{"resolution", c.colormnist.resolution},
        {"num_digits", c.colormnist.num_digits},
        {"num_digit_colors", c.colormnist.num_digit_colors},
        {"num_backgrounds", c.colormnist.num_backgrounds},
        {"held_out_pairs", pairs},
        {"per_slot", c.colormnist.per_slot},
        {"jitter_px", c.colormnist.jitter_px},
        {"brightness", c.colormnist.brightness},
        {"color_jitter", c.colormnist.color_jitter}}},
      {"gmm", {{"n_per_component", c.gmm_n_per_component}}},
      {"model",
       {{"width", c.width},
        {"depth", c.depth},
        {"time_features", c.time_features},
        {"parameterization", c.head == OutputHead::kX0 ? "x0" : "epsilon"},
        {"x0_gain_cap", c.x0_gain_cap}}},
      {"train",
       {{"adam", AdamToJson(c.train.adam)},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"null_dropout", c.train.null_dropout},
        {"grad_clip", c.train.grad_clip}}},
      {"discovery",
       {{"t_start", d.t_start},
        {"t_end", d.t_end},
        {"t_step", d.t_step},
        {"n_per_t", d.n_per_t},
        {"n_iters", d.n_iters},
        {"base_step", d.base_step},
        {"adam_beta1", d.adam_beta1},
        {"adam_beta2", d.adam_beta2},
        {"adam_eps", d.adam_eps},
        {"init", InitName(d.init)},
        {"query_fraction", d.query_fraction},
        {"grad_tol", d.grad_tol},
        {"merge_tol", d.merge_tol},
        {"accept_factor", d.accept_factor},
        {"hutchinson_probes", d.hutchinson_probes},
        {"hutchinson_step", d.hutchinson_step},
        {"var_floor", d.var_floor},
        {"curvature_floor", d.curvature_floor}}},
      {"composition", {{"k", c.composition.k}, {"tau", c.composition.tau}}},
      {"guidance",
       {{"w0", c.guidance.w0},
        {"w_max", c.guidance.w_max},
        {"schedule_mode", ModeName(c.guidance.mode)},
        {"ddim_steps", c.guidance.ddim_steps},
        {"eta", c.guidance.eta},
        {"n_samples", c.guidance.n_samples},
        {"clip_x0", c.guidance.clip_x0}}},
      {"distill",
       {{"pool_size", c.distill.pool_size},
        {"rank", c.distill.rank},
        {"alpha", c.distill.alpha},
        {"adam", AdamToJson(c.distill.adam)},
        {"epochs", c.distill.epochs},
        {"batch_size", c.distill.batch_size},
        {"cfg_dropout", c.distill.cfg_dropout},
        {"embed_init_std", c.distill.embed_init_std},
        {"grad_clip", c.distill.grad_clip},
        {"sampling_w", c.lora_w}}},
      {"baselines",
       {{"t_eval", c.baselines.t_eval},
        {"n_eps", c.baselines.n_eps},
        {"tau_tk", c.baselines.tau_tk},
        {"sigma_q", c.baselines.sigma_q}}},
      {"methods", c.methods},
      {"evaluation",
       {{"queries_per_class", c.queries_per_class},
        {"n_ref", c.n_ref},
        {"knn_k", c.knn_k},
        {"classes", c.classes},
        {"save_samples", c.save_samples}}},
      {"output_dir", c.output_dir},
      {"seed", c.seed},
  };
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig c;
  {
    Section top(j, "config");
    std::string schema;
    int version = -1;
    top.Get("schema", schema);
    top.Get("version", version);
    if (schema != "modecompose.config") throw std::invalid_argument("config: schema must be modecompose.config");
    if (version != kConfigSchemaVersion) {
      throw std::invalid_argument("config: unsupported version " + std::to_string(version));
    }
    top.Get("benchmark", c.benchmark);
    top.Get("backbone", c.backbone);
    top.Get("checkpoint", c.checkpoint);
    top.Get("dataset", c.dataset);
    if (const json* s = top.Child("schedule")) {
      Section sec(*s, "schedule");
      sec.Get("num_steps", c.num_steps);
      sec.Get("beta_start", c.beta_start);
      sec.Get("beta_end", c.beta_end);
    }
    if (const json* s = top.Child("colormnist")) {
      Section sec(*s, "colormnist");
      ColorMnistSpec& m = c.colormnist;
      sec.Get("resolution", m.resolution);
      sec.Get("num_digits", m.num_digits);
      sec.Get("num_digit_colors", m.num_digit_colors);
      sec.Get("num_backgrounds", m.num_backgrounds);
      if (const json* p = sec.Child("held_out_pairs")) {
        m.held_out_pairs.clear();
        for (const auto& pair : *p) m.held_out_pairs.emplace_back(pair.at(0), pair.at(1));
      }
      sec.Get("per_slot", m.per_slot);
      sec.Get("jitter_px", m.jitter_px);
      sec.Get("brightness", m.brightness);
      sec.Get("color_jitter", m.color_jitter);
    }
    if (const json* s = top.Child("gmm")) {
      Section sec(*s, "gmm");
      sec.Get("n_per_component", c.gmm_n_per_component);
    }
    if (const json* s = top.Child("model")) {
      Section sec(*s, "model");
      sec.Get("width", c.width);
      sec.Get("depth", c.depth);
      sec.Get("time_features", c.time_features);
      std::string head = c.head == OutputHead::kX0 ? "x0" : "epsilon";
      sec.Get("parameterization", head);
      if (head != "x0" && head != "epsilon") {
        throw std::invalid_argument("config: model.parameterization must be x0 or epsilon");
      }
      c.head = head == "x0" ? OutputHead::kX0 : OutputHead::kEpsilon;
      sec.Get("x0_gain_cap", c.x0_gain_cap);
    }
    if (const json* s = top.Child("train")) {
      Section sec(*s, "train");
      if (const json* a = sec.Child("adam")) AdamFromJson(*a, c.train.adam, "train.adam");
      sec.Get("batch_size", c.train.batch_size);
      sec.Get("epochs", c.train.epochs);
      sec.Get("null_dropout", c.train.null_dropout);
      sec.Get("grad_clip", c.train.grad_clip);
    }
    if (const json* s = top.Child("discovery")) {
      Section sec(*s, "discovery");
      AscentConfig& d = c.discovery;
      sec.Get("t_start", d.t_start);
      sec.Get("t_end", d.t_end);
      sec.Get("t_step", d.t_step);
      sec.Get("n_per_t", d.n_per_t);
      sec.Get("n_iters", d.n_iters);
      sec.Get("base_step", d.base_step);
      sec.Get("adam_beta1", d.adam_beta1);
      sec.Get("adam_beta2", d.adam_beta2);
      sec.Get("adam_eps", d.adam_eps);
      std::string init = InitName(d.init);
      sec.Get("init", init);
      d.init = ParseInit(init);
      sec.Get("query_fraction", d.query_fraction);
      sec.Get("grad_tol", d.grad_tol);
      sec.Get("merge_tol", d.merge_tol);
      sec.Get("accept_factor", d.accept_factor);
      sec.Get("hutchinson_probes", d.hutchinson_probes);
      sec.Get("hutchinson_step", d.hutchinson_step);
      sec.Get("var_floor", d.var_floor);
      sec.Get("curvature_floor", d.curvature_floor);
    }
    if (const json* s = top.Child("composition")) {
      Section sec(*s, "composition");
      sec.Get("k", c.composition.k);
      sec.Get("tau", c.composition.tau);
    }
    if (const json* s = top.Child("guidance")) {
      Section sec(*s, "guidance");
      GuidanceConfig& g = c.guidance;
      sec.Get("w0", g.w0);
      sec.Get("w_max", g.w_max);
      std::string mode = ModeName(g.mode);
      sec.Get("schedule_mode", mode);
      g.mode = ParseMode(mode);
      sec.Get("ddim_steps", g.ddim_steps);
      sec.Get("eta", g.eta);
      sec.Get("n_samples", g.n_samples);
      sec.Get("clip_x0", g.clip_x0);
    }
    if (const json* s = top.Child("distill")) {
      Section sec(*s, "distill");
      DistillConfig& d = c.distill;
      sec.Get("pool_size", d.pool_size);
      sec.Get("rank", d.rank);
      sec.Get("alpha", d.alpha);
      if (const json* a = sec.Child("adam")) AdamFromJson(*a, d.adam, "distill.adam");
      sec.Get("epochs", d.epochs);
      sec.Get("batch_size", d.batch_size);
      sec.Get("cfg_dropout", d.cfg_dropout);
      sec.Get("embed_init_std", d.embed_init_std);
      sec.Get("grad_clip", d.grad_clip);
      sec.Get("sampling_w", c.lora_w);
    }
    if (const json* s = top.Child("baselines")) {
      Section sec(*s, "baselines");
      sec.Get("t_eval", c.baselines.t_eval);
      sec.Get("n_eps", c.baselines.n_eps);
      sec.Get("tau_tk", c.baselines.tau_tk);
      sec.Get("sigma_q", c.baselines.sigma_q);
    }
    top.Get("methods", c.methods);
    if (const json* s = top.Child("evaluation")) {
      Section sec(*s, "evaluation");
      sec.Get("queries_per_class", c.queries_per_class);
      sec.Get("n_ref", c.n_ref);
      sec.Get("knn_k", c.knn_k);
      sec.Get("classes", c.classes);
      sec.Get("save_samples", c.save_samples);
    }
    top.Get("output_dir", c.output_dir);
    top.Get("seed", c.seed);
  }
  ApplyGlobalSeed(c, c.seed);
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  return ConfigFromJson(json::parse(ReadFile(path)));
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  json j = ConfigToJson(cfg);
  j.erase("output_dir");
  std::ostringstream os;
  os << "0x" << std::hex << Fnv1a64(j.dump());
  return os.str();
}

std::string ResolveOutputDir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("MODECOMPOSE_OUT"); env && *env) return env;
  return "modecompose_out";
}

}  // namespace modecompose
