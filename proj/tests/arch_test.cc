// Copyright 2026 The OutlierNet Authors.
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

#include "outliernet/arch.h"

#include <gtest/gtest.h>

#include <filesystem>

#include "outliernet/error.h"
#include "outliernet/file_util.h"
#include "outliernet/model_io.h"
#include "outliernet/nn/network.h"
#include "outliernet/rng.h"

namespace outliernet {
namespace {

using namespace nn;

std::string DataPath(const std::string& name) {
  return std::string(OUTLIERNET_TEST_DATA_DIR) + "/" + name;
}

// Totals from tests/oracles/efficiency_oracle.py, which walks naive loop
// nests over the layer lists in tests/data and counts every
// multiply-accumulate.
struct Pinned {
  const char* file;
  uint64_t params;
  uint64_t macs;
  uint64_t flops;
};
constexpr Pinned kPinned[] = {
    {"fan_d2_w05.arch", 125, 161280, 367104},
    {"fan_686.arch", 686, 269568, 607040},
    {"slider_d2_w1_b16.arch", 69047, 727040, 1550368},
};

TEST(Efficiency, PinnedReferenceArchitectures) {
  for (const auto& p : kPinned) {
    const ArchSpec arch = ParseArch(ReadFile(DataPath(p.file)));
    const EfficiencyReport r = Efficiency(arch);
    EXPECT_EQ(CountParams(arch), p.params) << p.file;
    EXPECT_EQ(CountMacs(arch), p.macs) << p.file;
    EXPECT_EQ(CountFlops(arch), p.flops) << p.file;
    uint64_t params = 0, flops = 0, macs = 0;
    for (const auto& l : r.per_layer) {
      params += l.params;
      flops += l.flops;
      macs += l.macs;
    }
    EXPECT_EQ(params, r.param_count);
    EXPECT_EQ(flops, r.flops);
    EXPECT_EQ(macs, r.macs);
    // The parameter count also agrees with the allocated network.
    Network<float> net(arch.layers, Shape{1, 1, 32, 128}, 0);
    EXPECT_EQ(net.ParamCount(), p.params);
  }
}

TEST(Efficiency, TemplatesMatchTheReferenceFiles) {
  EXPECT_EQ(ParseArch(ReadFile(DataPath("fan_d2_w05.arch"))),
            MakeTemplate(Family::kFanConv, 0.5, 2));
  EXPECT_EQ(ParseArch(ReadFile(DataPath("slider_d2_w1_b16.arch"))),
            MakeTemplate(Family::kSliderDenseBottleneck, 1.0, 2, 16));
  EXPECT_EQ(ParseArch(ReadFile(DataPath("fan_686.arch"))),
            BuildAutoencoder(Family::kFanConv, {3, 4, 6, 13}, std::nullopt, "fan-686"));
}

ArchSpec Single(LayerKind layer, Shape in) {
  ArchSpec a;
  a.layers = {layer};
  a.input = in;
  return a;
}

TEST(Efficiency, SingleLayerFormulas) {
  EXPECT_EQ(ParamCount(DepthwiseConv2d{4, 1, 1}), 40u);
  EXPECT_EQ(ParamCount(PointwiseConv2d{8, 16}), 144u);
  EXPECT_EQ(ParamCount(Conv2d{2, 3, 1, 1}), 57u);
  EXPECT_EQ(ParamCount(Replicator{2}), 0u);

  // Efficiency() is total over the layers; single-layer specs skip closure.
  auto flops = [](LayerKind l, Shape in) {
    uint64_t total = 0;
    for (const auto& c : Efficiency(Single(l, in)).per_layer) total += c.flops;
    return total;
  };
  EXPECT_EQ(flops(Dense{10, 5}, {1, 10, 1, 1}), 105u);
  EXPECT_EQ(flops(Conv2d{1, 1, 1, 1}, {1, 1, 32, 128}), 77824u);
  EXPECT_EQ(flops(Replicator{2}, {1, 3, 4, 4}), 0u);
  EXPECT_EQ(flops(Activation{ActivationKind::kReLU}, {1, 3, 4, 4}), 48u);
  EXPECT_EQ(flops(Activation{ActivationKind::kLinear}, {1, 3, 4, 4}), 0u);
}

TEST(Templates, ClosureAndFamilyRules) {
  for (double w : {0.5, 1.0, 2.0}) {
    for (int d = 1; d <= 5; ++d) {
      const ArchSpec fan = MakeTemplate(Family::kFanConv, w, d);
      EXPECT_EQ(InferShapes(fan.layers, kInputShape), kInputShape);
      for (const auto& l : fan.layers) EXPECT_FALSE(std::holds_alternative<Dense>(l));
      const ArchSpec slider = MakeTemplate(Family::kSliderDenseBottleneck, w, d, 64);
      EXPECT_EQ(InferShapes(slider.layers, kInputShape), kInputShape);
      int dense = 0;
      for (const auto& l : slider.layers) dense += std::holds_alternative<Dense>(l);
      EXPECT_EQ(dense, 2);
    }
  }
  EXPECT_THROW(MakeTemplate(Family::kSliderDenseBottleneck, 1.0, 2), Error);
  EXPECT_THROW(MakeTemplate(Family::kFanConv, 1.0, 2, 8), Error);
  EXPECT_THROW(MakeTemplate(Family::kFanConv, 1.0, 6), Error);
  EXPECT_THROW(MakeTemplate(Family::kFanConv, 0.0, 2), Error);
}

TEST(Templates, ParamsIncreaseWithWidth) {
  for (int d = 1; d <= 4; ++d) {
    uint64_t prev = 0;
    for (double w : {0.5, 1.0, 2.0}) {
      const uint64_t p = CountParams(MakeTemplate(Family::kFanConv, w, d));
      EXPECT_GT(p, prev);
      prev = p;
    }
  }
  // The smallest fan template is in the hundreds of parameters.
  const uint64_t smallest = CountParams(MakeTemplate(Family::kFanConv, 0.5, 2));
  EXPECT_GE(smallest, 100u);
  EXPECT_LT(smallest, 1000u);
}

TEST(Validate, RejectsBrokenSpecs) {
  ArchSpec open = MakeTemplate(Family::kFanConv, 1.0, 2);
  open.layers.pop_back();
  open.layers.pop_back();
  EXPECT_THROW(ValidateArch(open), Error);
  ArchSpec fan_dense = MakeTemplate(Family::kSliderDenseBottleneck, 1.0, 2, 8);
  fan_dense.family = Family::kFanConv;
  EXPECT_THROW(ValidateArch(fan_dense), Error);
}

TEST(ArchText, RoundTripsBothForms) {
  const ArchSpec tpl = MakeTemplate(Family::kSliderDenseBottleneck, 2.0, 3, 32);
  const std::string compact = SerializeArch(tpl);
  EXPECT_NE(compact.find("ae "), std::string::npos);
  EXPECT_EQ(ParseArch(compact), tpl);

  // A hand-edited stack falls back to the layer-by-layer form.
  ArchSpec custom = tpl;
  custom.layers.insert(custom.layers.end() - 1, Activation{ActivationKind::kLinear});
  const std::string full = SerializeArch(custom);
  EXPECT_EQ(full.find("ae "), std::string::npos);
  EXPECT_EQ(ParseArch(full), custom);

  EXPECT_THROW(ParseArch("arch 2\n"), Error);
  EXPECT_THROW(ParseArch("arch 1\nname x\nfamily fan_conv\nwobble 3\n"), Error);
  EXPECT_THROW(ParseArch("arch 1\nname x\nae 2,x\n"), Error);
}

ModelBundle RandomBundle(const ArchSpec& arch, uint64_t seed) {
  ModelBundle b;
  b.arch = arch;
  Rng rng(seed);
  b.weights.resize(CountParams(arch));
  for (auto& w : b.weights) w = float(rng.Normal());
  b.norm = {-10.0, 2.5};
  return b;
}

TEST(Bundle, RoundTripIsBitExact) {
  const ModelBundle b = RandomBundle(MakeTemplate(Family::kFanConv, 1.0, 3), 1);
  const std::string bytes = EncodeBundle(b);
  const ModelBundle back = DecodeBundle(bytes);
  EXPECT_EQ(back.arch, b.arch);
  EXPECT_EQ(back.weights, b.weights);
  EXPECT_EQ(back.norm.min, b.norm.min);
  EXPECT_EQ(back.norm.max, b.norm.max);
  EXPECT_FALSE(back.threshold.has_value());
  EXPECT_EQ(EncodeBundle(back), bytes);

  ModelBundle t = b;
  t.threshold = 0.1234567890123;
  EXPECT_EQ(DecodeBundle(EncodeBundle(t)).threshold, t.threshold);
}

TEST(Bundle, SizeIsFourBytesPerParamPlusHeader) {
  for (double w : {0.5, 1.0, 2.0}) {
    for (int d : {1, 3, 5}) {
      for (auto fam : {Family::kFanConv, Family::kSliderDenseBottleneck}) {
        const ArchSpec a = fam == Family::kFanConv ? MakeTemplate(fam, w, d)
                                                   : MakeTemplate(fam, w, d, 16);
        const ModelBundle b = RandomBundle(a, 2);
        const uint64_t header = 32 + SerializeArch(a).size();
        EXPECT_EQ(EncodeBundle(b).size(), 4 * CountParams(a) + header);
        EXPECT_EQ(BundleFileBytes(b), 4 * CountParams(a) + header);
        EXPECT_EQ(Efficiency(a).model_bytes, 4 * CountParams(a) + header);
      }
    }
  }
}

TEST(Bundle, DistinctLoadErrors) {
  const std::string good = EncodeBundle(RandomBundle(MakeTemplate(Family::kFanConv, 0.5, 2), 3));
  auto code = [](const std::string& bytes) {
    try {
      DecodeBundle(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  std::string magic = good;
  magic[0] = 'X';
  EXPECT_EQ(code(magic), ErrorCode::kBadMagic);
  std::string version = good;
  version[4] = 9;
  EXPECT_EQ(code(version), ErrorCode::kVersionMismatch);
  EXPECT_EQ(code(good.substr(0, good.size() - 5)), ErrorCode::kWeightCountMismatch);
  EXPECT_EQ(code(good + "xxxx"), ErrorCode::kWeightCountMismatch);
  std::string count = good;
  count[8] = char(count[8] + 1);
  EXPECT_EQ(code(count), ErrorCode::kWeightCountMismatch);
  EXPECT_EQ(code(good.substr(0, 6)), ErrorCode::kFormat);
}

TEST(Bundle, SaveAndLoadFile) {
  const auto dir = std::filesystem::temp_directory_path() / "outliernet-bundle-test";
  std::filesystem::remove_all(dir);
  const ModelBundle b = RandomBundle(MakeTemplate(Family::kFanConv, 1.0, 2), 4);
  SaveBundle(b, dir / "m.olnt");
  EXPECT_EQ(std::filesystem::file_size(dir / "m.olnt"), BundleFileBytes(b));
  EXPECT_EQ(LoadBundle(dir / "m.olnt").weights, b.weights);
  std::filesystem::remove_all(dir);
}

TEST(Bundle, SixHundredEightySixParameterModelIsAboutTwoPointSevenKiB) {
  const ArchSpec a = BuildAutoencoder(Family::kFanConv, {3, 4, 6, 13}, std::nullopt);
  ASSERT_EQ(CountParams(a), 686u);
  const ModelBundle b = RandomBundle(a, 5);
  const uint64_t bytes = BundleFileBytes(b);
  EXPECT_EQ(bytes - (32 + SerializeArch(a).size()), 2744u);
  EXPECT_NEAR(double(bytes) / 1024.0, 2.7, 0.05);
}

}  // namespace
}  // namespace outliernet
