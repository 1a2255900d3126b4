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

#include "modecompose/datasets.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modecompose/container.h"
#include "modecompose/random.h"

namespace modecompose {

void GmmWorldSpec::Validate() const {
  Require(!components.empty(), "gmm world: no components");
  Require(class_of.size() == components.size(), "gmm world: one class per component required");
  Require(super_of.empty() || super_of.size() == components.size(),
          "gmm world: super grouping must cover every component");
  WorldDensity(*this).Validate();
}

GmmDensity WorldDensity(const GmmWorldSpec& spec) {
  GmmDensity g;
  g.components = spec.components;
  g.class_of = spec.class_of;
  return g;
}

GmmWorldSpec ThreeModeWorld(double separation, double var) {
  Require(separation > 0.0 && var > 0.0, "three-mode world: bad parameters");
  GmmWorldSpec spec;
  spec.name = "gmm3";
  const double radius = separation / std::sqrt(3.0);
  for (int i = 0; i < 3; ++i) {
    const double angle = std::numbers::pi / 2 + 2.0 * std::numbers::pi * i / 3.0;
    Vector mean(2);
    mean << radius * std::cos(angle), radius * std::sin(angle);
    spec.components.push_back({1.0 / 3.0, mean, Vector::Constant(2, var)});
    spec.class_of.push_back(i);
  }
  return spec;
}

GmmWorldSpec HierarchicalWorld(double super_separation, double sub_radius, double var) {
  Require(super_separation > 0.0 && sub_radius > 0.0 && var > 0.0,
          "hierarchical world: bad parameters");
  GmmWorldSpec spec;
  spec.name = "gmm_hier";
  for (int s = 0; s < 2; ++s) {
    const double cx = (s == 0 ? -0.5 : 0.5) * super_separation;
    for (int k = 0; k < 3; ++k) {
      const double angle = std::numbers::pi / 2 + 2.0 * std::numbers::pi * k / 3.0;
      Vector mean(2);
      mean << cx + sub_radius * std::cos(angle), sub_radius * std::sin(angle);
      spec.components.push_back({1.0 / 6.0, mean, Vector::Constant(2, var)});
      spec.class_of.push_back(3 * s + k);
      spec.super_of.push_back(s);
    }
  }
  return spec;
}

GmmWorldSpec SingleGaussianWorld(const Vector& mean, const Vector& var) {
  GmmWorldSpec spec;
  spec.name = "gauss1";
  spec.components.push_back({1.0, mean, var});
  spec.class_of.push_back(0);
  return spec;
}

GmmWorldData GenGmm2d(const GmmWorldSpec& spec, int n_per_component, uint64_t seed) {
  spec.Validate();
  Require(n_per_component > 0, "gen_gmm2d: n_per_component must be positive");
  const int d = static_cast<int>(spec.components[0].mean.size());
  const int m = static_cast<int>(spec.components.size());
  GmmWorldData out;
  out.density = WorldDensity(spec);
  out.data.x.resize(static_cast<Eigen::Index>(m) * n_per_component, d);
  for (int c = 0; c < m; ++c) {
    Rng rng = MakeRng(seed, {0x6a3, static_cast<uint64_t>(c)});
    const GmmComponent& comp = spec.components[c];
    const Eigen::ArrayXd sd = comp.var.array().sqrt();
    for (int i = 0; i < n_per_component; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(c) * n_per_component + i;
      out.data.x.row(row) = (comp.mean.array() + sd * StandardNormal(d, rng).array()).matrix().transpose();
      out.data.labels.push_back(spec.class_of[c]);
      out.component.push_back(c);
      if (!spec.super_of.empty()) out.super_label.push_back(spec.super_of[c]);
    }
  }
  return out;
}

const std::vector<NamedColor>& DigitPalette() {
  static const std::vector<NamedColor> palette = {{"yellow", {1.0, 0.9, 0.1}},
                                                  {"green", {0.1, 0.8, 0.2}},
                                                  {"cyan", {0.1, 0.85, 0.9}},
                                                  {"pink", {1.0, 0.45, 0.75}}};
  return palette;
}

const std::vector<NamedColor>& BackgroundPalette() {
  static const std::vector<NamedColor> palette = {{"deep_red", {0.5, 0.05, 0.05}},
                                                  {"navy", {0.05, 0.08, 0.45}},
                                                  {"dark_purple", {0.3, 0.05, 0.4}},
                                                  {"dark_brown", {0.35, 0.22, 0.08}}};
  return palette;
}

const std::array<const char*, 7>& DigitGlyph(int digit) {
  static const std::array<std::array<const char*, 7>, 10> font = {{
      {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},
      {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},
      {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},
      {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},
      {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},
      {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},
      {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},
      {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},
      {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},
      {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},
  }};
  Require(digit >= 0 && digit < 10, "digit glyph: digit must be in [0, 9]");
  return font[digit];
}

bool ColorMnistSpec::IsHeldOut(int color, int background) const {
  return std::find(held_out_pairs.begin(), held_out_pairs.end(), std::make_pair(color, background)) !=
         held_out_pairs.end();
}

void ColorMnistSpec::Validate() const {
  Require(resolution >= 8, "colormnist: resolution must be >= 8");
  Require(num_digits >= 1 && num_digits <= 10, "colormnist: 1 to 10 digits");
  Require(num_digit_colors >= 1 && num_digit_colors <= static_cast<int>(DigitPalette().size()),
          "colormnist: too many digit colors");
  Require(num_backgrounds >= 1 && num_backgrounds <= static_cast<int>(BackgroundPalette().size()),
          "colormnist: too many backgrounds");
  Require(!held_out_pairs.empty(), "colormnist: need at least one held-out pair");
  for (const auto& [c, b] : held_out_pairs) {
    Require(c >= 0 && c < num_digit_colors && b >= 0 && b < num_backgrounds,
            "colormnist: held-out pair outside the palette");
  }
  Require(static_cast<int>(held_out_pairs.size()) < num_digit_colors * num_backgrounds,
          "colormnist: every color pair is held out");
  Require(per_slot >= 1, "colormnist: per_slot must be positive");
  Require(jitter_px >= 0 && brightness >= 0.0 && brightness < 1.0 && color_jitter >= 0.0 &&
              color_jitter < 0.5,
          "colormnist: bad augmentation");
}

std::string SlotInfo::Name() const {
  return "d" + std::to_string(digit) + "_" + DigitPalette()[color].name + "_on_" +
         BackgroundPalette()[background].name;
}

LabeledDataset ColorMnistData::SeenSplit() const {
  std::vector<int> rows;
  for (int i = 0; i < static_cast<int>(slot.size()); ++i)
    if (!slots[slot[i]].held_out) rows.push_back(i);
  LabeledDataset out;
  out.x.resize(rows.size(), x.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    out.x.row(k) = x.row(rows[k]);
    out.labels.push_back(slots[slot[rows[k]]].class_id);
  }
  return out;
}

const SlotInfo& ColorMnistData::OodSlot(int ood_class) const {
  for (const SlotInfo& s : slots)
    if (s.held_out && s.class_id == ood_class) return s;
  throw std::out_of_range("colormnist: unknown OOD class " + std::to_string(ood_class));
}

std::vector<int> ColorMnistData::OodMembers(int ood_class) const {
  const int target = OodSlot(ood_class).slot;
  std::vector<int> rows;
  for (int i = 0; i < static_cast<int>(slot.size()); ++i)
    if (slot[i] == target) rows.push_back(i);
  return rows;
}

namespace {

int GlyphScale(int res) { return std::max(1, std::min(res / 5, (res - 2) / 7)); }

// Largest shift per axis that keeps a centred glyph inside the frame.
std::pair<int, int> GlyphMargins(int res) {
  const int scale = GlyphScale(res);
  return {std::max(0, (res - 5 * scale) / 2), std::max(0, (res - 7 * scale) / 2)};
}

}  // namespace

Vector RenderDigit(const ColorMnistSpec& spec, int digit, const Rgb& ink, const Rgb& background,
                   int dx, int dy, double brightness_scale) {
  const int res = spec.resolution;
  const int scale = GlyphScale(res);
  const int gw = 5 * scale;
  const int gh = 7 * scale;
  const int ox = (res - gw) / 2 + dx;
  const int oy = (res - gh) / 2 + dy;
  const auto& glyph = DigitGlyph(digit);
  Vector img(3 * res * res);
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const int gx = x - ox;
      const int gy = y - oy;
      const bool on = gx >= 0 && gx < gw && gy >= 0 && gy < gh && glyph[gy / scale][gx / scale] == '1';
      const Rgb& c = on ? ink : background;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(c[ch] * brightness_scale, 0.0, 1.0);
        img[(y * res + x) * 3 + ch] = 2.0 * v - 1.0;
      }
    }
  }
  return img;
}

ColorMnistData GenColorMnist(const ColorMnistSpec& spec) {
  spec.Validate();
  ColorMnistData out;
  out.spec = spec;
  int seen = 0;
  int ood = 0;
  for (int dg = 0; dg < spec.num_digits; ++dg) {
    for (int c = 0; c < spec.num_digit_colors; ++c) {
      for (int b = 0; b < spec.num_backgrounds; ++b) {
        SlotInfo info{spec.SlotId(dg, c, b), dg, c, b, spec.IsHeldOut(c, b), 0};
        info.class_id = info.held_out ? ood++ : seen++;
        out.slots.push_back(info);
      }
    }
  }
  out.num_seen_classes = seen;
  out.num_ood_classes = ood;
  out.x.resize(static_cast<Eigen::Index>(spec.num_slots()) * spec.per_slot, spec.dim());
  Eigen::Index row = 0;
  for (const SlotInfo& info : out.slots) {
    Rng rng = MakeRng(spec.seed, {0xc01, static_cast<uint64_t>(info.slot)});
    for (int i = 0; i < spec.per_slot; ++i) {
      const auto [mx, my] = GlyphMargins(spec.resolution);
      const int dx = std::clamp(UniformInt(-spec.jitter_px, spec.jitter_px, rng), -mx, mx);
      const int dy = std::clamp(UniformInt(-spec.jitter_px, spec.jitter_px, rng), -my, my);
      const double bright = 1.0 + spec.brightness * (2.0 * Uniform01(rng) - 1.0);
      Rgb ink = DigitPalette()[info.color].rgb;
      Rgb bg = BackgroundPalette()[info.background].rgb;
      for (Rgb* c : {&ink, &bg}) {
        for (double& v : *c) v = std::clamp(v + spec.color_jitter * (2.0 * Uniform01(rng) - 1.0), 0.0, 1.0);
      }
      out.x.row(row++) = RenderDigit(spec, info.digit, ink, bg, dx, dy, bright).transpose();
      out.slot.push_back(info.slot);
    }
  }
  return out;
}

namespace {

nlohmann::json SpecToJson(const ColorMnistSpec& s) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [c, b] : s.held_out_pairs) pairs.push_back({c, b});
  return {{"resolution", s.resolution},     {"num_digits", s.num_digits},
          {"num_digit_colors", s.num_digit_colors}, {"num_backgrounds", s.num_backgrounds},
          {"held_out_pairs", pairs},        {"per_slot", s.per_slot},
          {"jitter_px", s.jitter_px},       {"brightness", s.brightness},
          {"color_jitter", s.color_jitter},
          {"seed", s.seed}};
}

ColorMnistSpec SpecFromJson(const nlohmann::json& j) {
  ColorMnistSpec s;
  s.resolution = j.at("resolution");
  s.num_digits = j.at("num_digits");
  s.num_digit_colors = j.at("num_digit_colors");
  s.num_backgrounds = j.at("num_backgrounds");
  s.held_out_pairs.clear();
  for (const auto& p : j.at("held_out_pairs")) s.held_out_pairs.emplace_back(p.at(0), p.at(1));
  s.per_slot = j.at("per_slot");
  s.jitter_px = j.at("jitter_px");
  s.brightness = j.at("brightness");
  s.color_jitter = j.at("color_jitter");
  s.seed = j.at("seed");
  return s;
}

std::vector<double> ToDoubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::vector<int> ToInts(const std::vector<double>& v) {
  std::vector<int> out;
  for (double x : v) out.push_back(static_cast<int>(x));
  return out;
}

}  // namespace

void SaveColorMnist(const std::filesystem::path& path, const ColorMnistData& data) {
  Container c;
  c.kind = "dataset";
  c.meta = {{"benchmark", "colormnist"}, {"spec", SpecToJson(data.spec)}};
  c.Add("x", data.x);
  c.Add("slot", ToDoubles(data.slot));
  WriteContainer(path, c);
}

ColorMnistData LoadColorMnist(const std::filesystem::path& path) {
  const Container c = ReadContainer(path);
  if (c.kind != "dataset" || c.meta.value("benchmark", "") != "colormnist") {
    throw std::runtime_error(path.string() + ": not a ColorMNIST dataset");
  }
  // Slot metadata is derived from the spec; pixels come from the file.
  ColorMnistSpec spec = SpecFromJson(c.meta.at("spec"));
  ColorMnistSpec empty = spec;
  empty.per_slot = 1;
  ColorMnistData data = GenColorMnist(empty);
  data.spec = spec;
  data.x = c.GetMatrix("x");
  data.slot = ToInts(c.Get("slot").data);
  return data;
}

void SaveGmmWorld(const std::filesystem::path& path, const GmmWorldSpec& spec,
                  const GmmWorldData& data) {
  Container c;
  c.kind = "dataset";
  nlohmann::json comps = nlohmann::json::array();
  for (const GmmComponent& k : spec.components) {
    comps.push_back({{"weight", k.weight},
                     {"mean", std::vector<double>(k.mean.begin(), k.mean.end())},
                     {"var", std::vector<double>(k.var.begin(), k.var.end())}});
  }
  c.meta = {{"benchmark", "gmm"},
            {"name", spec.name},
            {"components", comps},
            {"class_of", spec.class_of},
            {"super_of", spec.super_of}};
  c.Add("x", data.data.x);
  c.Add("label", ToDoubles(data.data.labels));
  c.Add("component", ToDoubles(data.component));
  WriteContainer(path, c);
}

namespace {

GmmWorldSpec WorldSpecFromMeta(const nlohmann::json& meta) {
  GmmWorldSpec spec;
  spec.name = meta.at("name");
  for (const auto& k : meta.at("components")) {
    const auto mean = k.at("mean").get<std::vector<double>>();
    const auto var = k.at("var").get<std::vector<double>>();
    spec.components.push_back({k.at("weight").get<double>(),
                               Eigen::Map<const Vector>(mean.data(), mean.size()),
                               Eigen::Map<const Vector>(var.data(), var.size())});
  }
  spec.class_of = meta.at("class_of").get<std::vector<int>>();
  spec.super_of = meta.at("super_of").get<std::vector<int>>();
  spec.Validate();
  return spec;
}

}  // namespace

GmmWorldSpec LoadGmmWorldSpec(const std::filesystem::path& path) {
  const Container c = ReadContainer(path);
  if (c.kind != "dataset" || c.meta.value("benchmark", "") != "gmm") {
    throw std::runtime_error(path.string() + ": not a GMM world dataset");
  }
  return WorldSpecFromMeta(c.meta);
}

GmmWorldData LoadGmmWorldData(const std::filesystem::path& path) {
  const Container c = ReadContainer(path);
  if (c.kind != "dataset" || c.meta.value("benchmark", "") != "gmm") {
    throw std::runtime_error(path.string() + ": not a GMM world dataset");
  }
  const GmmWorldSpec spec = WorldSpecFromMeta(c.meta);
  GmmWorldData data;
  data.density = WorldDensity(spec);
  data.data.x = c.GetMatrix("x");
  data.data.labels = ToInts(c.Get("label").data);
  data.component = ToInts(c.Get("component").data);
  if (!spec.super_of.empty()) {
    for (int comp : data.component) data.super_label.push_back(spec.super_of[comp]);
  }
  return data;
}

}  // namespace modecompose
