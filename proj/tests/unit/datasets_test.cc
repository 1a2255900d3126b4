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

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace modecompose {
namespace {

ColorMnistSpec SmallSpec() {
  ColorMnistSpec s;
  s.per_slot = 4;
  return s;
}

TEST(GmmWorlds, ThreeModeGeometry) {
  const GmmWorldSpec w = ThreeModeWorld(8.0, 0.05);
  ASSERT_EQ(w.components.size(), 3u);
  Vector centroid = Vector::Zero(2);
  for (int i = 0; i < 3; ++i) {
    centroid += w.components[i].mean / 3.0;
    EXPECT_NEAR((w.components[i].mean - w.components[(i + 1) % 3].mean).norm(), 8.0, 1e-12);
    EXPECT_DOUBLE_EQ(w.components[i].weight, 1.0 / 3.0);
  }
  EXPECT_LT(centroid.norm(), 1e-12);
  EXPECT_NO_THROW(WorldDensity(w).Validate());
}

TEST(GmmWorlds, HierarchicalGrouping) {
  const GmmWorldSpec w = HierarchicalWorld(10.0, 1.0, 0.02);
  ASSERT_EQ(w.components.size(), 6u);
  EXPECT_EQ(w.super_of, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double dist = (w.components[i].mean - w.components[j].mean).norm();
      if (i != j && w.super_of[i] == w.super_of[j]) EXPECT_NEAR(dist, std::sqrt(3.0), 1e-12);
      if (w.super_of[i] != w.super_of[j]) EXPECT_GT(dist, 7.0);
    }
  }
}

TEST(GenGmm2d, LabelsAndDeterminism) {
  const GmmWorldSpec w = HierarchicalWorld();
  const GmmWorldData a = GenGmm2d(w, 50, 3);
  EXPECT_EQ(a.data.x.rows(), 300);
  EXPECT_EQ(a.data.labels.size(), 300u);
  EXPECT_EQ(a.super_label.size(), 300u);
  for (int c = 0; c < 6; ++c) {
    Vector mean = Vector::Zero(2);
    for (int i = 0; i < 50; ++i) mean += a.data.x.row(c * 50 + i).transpose() / 50.0;
    EXPECT_LT((mean - w.components[c].mean).norm(), 0.1);
    EXPECT_EQ(a.data.labels[c * 50], w.class_of[c]);
  }
  EXPECT_EQ(GenGmm2d(w, 50, 3).data.x, a.data.x);
  EXPECT_NE(GenGmm2d(w, 50, 4).data.x, a.data.x);
  // Component streams are independent of the per-component count.
  EXPECT_EQ(GenGmm2d(w, 10, 3).data.x.row(0), a.data.x.row(0));
  EXPECT_THROW(GenGmm2d(w, 0, 3), std::invalid_argument);
}

TEST(DigitGlyph, AllDigitsDistinct) {
  std::set<std::string> seen;
  for (int d = 0; d < 10; ++d) {
    std::string s;
    for (const char* row : DigitGlyph(d)) {
      ASSERT_EQ(std::string(row).size(), 5u);
      s += row;
    }
    EXPECT_TRUE(seen.insert(s).second) << "digit " << d;
  }
  EXPECT_THROW(DigitGlyph(10), std::invalid_argument);
}

TEST(RenderDigit, ColorsAndRange) {
  const ColorMnistSpec spec = SmallSpec();
  const Rgb ink = {1.0, 0.0, 0.5};
  const Rgb bg = {0.0, 0.0, 0.0};
  const Vector img = RenderDigit(spec, 1, ink, bg, 0, 0, 1.0);
  ASSERT_EQ(img.size(), spec.dim());
  EXPECT_GE(img.minCoeff(), -1.0);
  EXPECT_LE(img.maxCoeff(), 1.0);
  int ink_px = 0;
  const int res = spec.resolution;
  for (int p = 0; p < res * res; ++p) {
    if (img[3 * p] > 0.0) {
      ++ink_px;
      EXPECT_DOUBLE_EQ(img[3 * p + 1], -1.0);
      EXPECT_DOUBLE_EQ(img[3 * p + 2], 0.0);
    }
  }
  EXPECT_GT(ink_px, 0);
  EXPECT_LT(ink_px, res * res / 2);
  // Corners stay background.
  EXPECT_DOUBLE_EQ(img[0], -1.0);
  // A shift moves ink without changing its amount.
  const Vector shifted = RenderDigit(spec, 1, ink, bg, 1, 1, 1.0);
  int shifted_px = 0;
  for (int p = 0; p < res * res; ++p) shifted_px += shifted[3 * p] > 0.0;
  EXPECT_EQ(shifted_px, ink_px);
  EXPECT_NE(shifted, img);
}

TEST(ColorMnist, SlotPartition) {
  const ColorMnistData data = GenColorMnist(SmallSpec());
  EXPECT_EQ(data.slots.size(), 45u);
  EXPECT_EQ(data.num_ood_classes, 15);
  EXPECT_EQ(data.num_seen_classes, 30);
  EXPECT_EQ(data.x.rows(), 45 * 4);
  // Every held-out (color, background) pair is held out for every digit.
  for (const SlotInfo& s : data.slots) {
    EXPECT_EQ(s.held_out, data.spec.IsHeldOut(s.color, s.background));
    EXPECT_EQ(data.spec.SlotId(s.digit, s.color, s.background), s.slot);
  }
  for (int c = 0; c < data.num_ood_classes; ++c) {
    const SlotInfo& s = data.OodSlot(c);
    EXPECT_TRUE(s.held_out);
    EXPECT_EQ(data.OodMembers(c).size(), 4u);
  }
  EXPECT_THROW(data.OodSlot(15), std::out_of_range);
}

TEST(ColorMnist, SeenSplitExcludesHeldOut) {
  const ColorMnistData data = GenColorMnist(SmallSpec());
  const LabeledDataset seen = data.SeenSplit();
  EXPECT_EQ(seen.x.rows(), 30 * 4);
  std::set<int> labels(seen.labels.begin(), seen.labels.end());
  EXPECT_EQ(labels.size(), 30u);
  EXPECT_EQ(*labels.begin(), 0);
  EXPECT_EQ(*labels.rbegin(), 29);
  for (int c = 0; c < data.num_ood_classes; ++c) {
    for (int row : data.OodMembers(c)) {
      for (int i = 0; i < seen.x.rows(); ++i) EXPECT_NE(seen.x.row(i), data.x.row(row));
    }
  }
}

TEST(ColorMnist, AugmentationStaysSmall) {
  ColorMnistSpec spec = SmallSpec();
  spec.per_slot = 20;
  const ColorMnistData data = GenColorMnist(spec);
  const Rgb bg = BackgroundPalette()[data.slots[0].background].rgb;
  for (int i = 0; i < 20; ++i) {
    // Top-left pixel is background under a 1 px shift.
    for (int ch = 0; ch < 3; ++ch) {
      const double v = (data.x(i, ch) + 1.0) / 2.0;
      EXPECT_NEAR(v, bg[ch], 0.05 * bg[ch] + 1e-12);
    }
  }
  EXPECT_EQ(GenColorMnist(spec).x, data.x);
}

TEST(ColorMnist, ColorJitterWidensColors) {
  ColorMnistSpec spec = SmallSpec();
  spec.per_slot = 20;
  spec.brightness = 0.0;
  spec.color_jitter = 0.1;
  const ColorMnistData data = GenColorMnist(spec);
  const Rgb bg = BackgroundPalette()[data.slots[0].background].rgb;
  double max_dev = 0.0;
  for (int i = 0; i < 20; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const double dev = std::abs((data.x(i, ch) + 1.0) / 2.0 - bg[ch]);
      EXPECT_LE(dev, 0.1 + 1e-12);
      max_dev = std::max(max_dev, dev);
    }
  }
  EXPECT_GT(max_dev, 0.02);
}

TEST(ColorMnist, ValidatesSpec) {
  ColorMnistSpec s = SmallSpec();
  s.held_out_pairs = {{5, 0}};
  EXPECT_THROW(GenColorMnist(s), std::invalid_argument);
  s = SmallSpec();
  s.color_jitter = 0.6;
  EXPECT_THROW(GenColorMnist(s), std::invalid_argument);
  s = SmallSpec();
  s.resolution = 4;
  EXPECT_THROW(GenColorMnist(s), std::invalid_argument);
}

TEST(DatasetIo, ColorMnistRoundTrip) {
  const ColorMnistData data = GenColorMnist(SmallSpec());
  const auto dir = testing::TempDir("colormnist_io");
  SaveColorMnist(dir / "d.mcpk", data);
  const ColorMnistData back = LoadColorMnist(dir / "d.mcpk");
  EXPECT_EQ(back.x, data.x);
  EXPECT_EQ(back.slot, data.slot);
  EXPECT_EQ(back.num_ood_classes, data.num_ood_classes);
  EXPECT_EQ(back.spec.held_out_pairs, data.spec.held_out_pairs);
  EXPECT_EQ(back.OodMembers(3), data.OodMembers(3));
}

TEST(DatasetIo, GmmWorldRoundTripAndKindCheck) {
  const GmmWorldSpec spec = HierarchicalWorld();
  const GmmWorldData data = GenGmm2d(spec, 5, 1);
  const auto dir = testing::TempDir("gmm_io");
  SaveGmmWorld(dir / "w.mcpk", spec, data);
  const GmmWorldSpec s2 = LoadGmmWorldSpec(dir / "w.mcpk");
  EXPECT_EQ(s2.name, spec.name);
  EXPECT_EQ(s2.class_of, spec.class_of);
  EXPECT_EQ(s2.super_of, spec.super_of);
  ASSERT_EQ(s2.components.size(), spec.components.size());
  EXPECT_EQ(s2.components[4].mean, spec.components[4].mean);
  const GmmWorldData d2 = LoadGmmWorldData(dir / "w.mcpk");
  EXPECT_EQ(d2.data.x, data.data.x);
  EXPECT_EQ(d2.data.labels, data.data.labels);
  EXPECT_EQ(d2.super_label, data.super_label);
  EXPECT_THROW(LoadColorMnist(dir / "w.mcpk"), std::runtime_error);
}

}  // namespace
}  // namespace modecompose
