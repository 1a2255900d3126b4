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

#ifndef MODECOMPOSE_DATASETS_H_
#define MODECOMPOSE_DATASETS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "modecompose/denoiser.h"
#include "modecompose/gmm.h"

namespace modecompose {

// ---- Gaussian-mixture worlds ---------------------------------------------

struct GmmWorldSpec {
  std::string name;
  std::vector<GmmComponent> components;
  std::vector<int> class_of;  // component -> class id
  std::vector<int> super_of;  // optional 2-level grouping; empty if flat
  void Validate() const;
};

// Three equal-weight isotropic modes on an equilateral triangle with side
// `separation`, centred at the origin; one class per mode.
GmmWorldSpec ThreeModeWorld(double separation = 8.0, double var = 0.05);

// Two superclusters `super_separation` apart, each holding three
// subclusters on a circle of radius `sub_radius`; one class per subcluster.
GmmWorldSpec HierarchicalWorld(double super_separation = 10.0, double sub_radius = 1.0,
                               double var = 0.02);

// A single Gaussian component (one class).
GmmWorldSpec SingleGaussianWorld(const Vector& mean, const Vector& var);

GmmDensity WorldDensity(const GmmWorldSpec& spec);

struct GmmWorldData {
  LabeledDataset data;           // labels are class ids
  std::vector<int> component;    // generating component per row
  std::vector<int> super_label;  // empty for flat worlds
  GmmDensity density;
};

// n_per_component samples from each component in component order.
GmmWorldData GenGmm2d(const GmmWorldSpec& spec, int n_per_component, uint64_t seed);

// ---- Procedural ColorMNIST -----------------------------------------------

using Rgb = std::array<double, 3>;

struct NamedColor {
  std::string name;
  Rgb rgb;
};

// Palettes in factor order; desk defaults use prefixes of these.
const std::vector<NamedColor>& DigitPalette();       // yellow, green, cyan, pink
const std::vector<NamedColor>& BackgroundPalette();  // deep red, navy, dark purple, dark brown

// 5 x 7 bitmap of digit 0-9, row-major, '1' = ink.
const std::array<const char*, 7>& DigitGlyph(int digit);

struct ColorMnistSpec {
  int resolution = 16;
  int num_digits = 5;
  int num_digit_colors = 3;
  int num_backgrounds = 3;
  // (digit color index, background index) pairs held out for every digit.
  std::vector<std::pair<int, int>> held_out_pairs = {{2, 0}, {1, 1}, {0, 2}};
  int per_slot = 200;
  int jitter_px = 1;          // per-axis shift, clamped to keep the glyph in frame
  double brightness = 0.05;   // multiplicative, uniform in [1 - b, 1 + b]
  double color_jitter = 0.0;  // additive per channel on ink and background, in [0, 1] units
  uint64_t seed = 42;

  int dim() const { return 3 * resolution * resolution; }
  int num_slots() const { return num_digits * num_digit_colors * num_backgrounds; }
  int SlotId(int digit, int color, int background) const {
    return (digit * num_digit_colors + color) * num_backgrounds + background;
  }
  bool IsHeldOut(int color, int background) const;
  void Validate() const;
};

struct SlotInfo {
  int slot = 0;
  int digit = 0;
  int color = 0;
  int background = 0;
  bool held_out = false;
  int class_id = 0;  // contiguous among seen slots, or among held-out slots
  std::string Name() const;
};

struct ColorMnistData {
  ColorMnistSpec spec;
  Matrix x;                // all images in [-1, 1], one per row
  std::vector<int> slot;   // slot id per row
  std::vector<SlotInfo> slots;
  int num_seen_classes = 0;
  int num_ood_classes = 0;

  // Seen-slot rows with contiguous trained-class labels.
  LabeledDataset SeenSplit() const;
  // Rows of held-out slot with OOD class id `ood_class`.
  std::vector<int> OodMembers(int ood_class) const;
  const SlotInfo& OodSlot(int ood_class) const;
};

// Renders one image (flattened, channels last) in [-1, 1].
Vector RenderDigit(const ColorMnistSpec& spec, int digit, const Rgb& ink, const Rgb& background,
                   int dx, int dy, double brightness_scale);

ColorMnistData GenColorMnist(const ColorMnistSpec& spec);

void SaveColorMnist(const std::filesystem::path& path, const ColorMnistData& data);
ColorMnistData LoadColorMnist(const std::filesystem::path& path);

void SaveGmmWorld(const std::filesystem::path& path, const GmmWorldSpec& spec,
                  const GmmWorldData& data);
GmmWorldSpec LoadGmmWorldSpec(const std::filesystem::path& path);
GmmWorldData LoadGmmWorldData(const std::filesystem::path& path);

}  // namespace modecompose

#endif  // MODECOMPOSE_DATASETS_H_
