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

#ifndef OUTLIERNET_ARCH_H_
#define OUTLIERNET_ARCH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "outliernet/nn/layers.h"
#include "outliernet/nn/tensor.h"

namespace outliernet {

enum class Family { kFanConv, kSliderDenseBottleneck };

const char* FamilyName(Family family);
Family ParseFamily(std::string_view name);

// Autoencoder input: one 32 x 128 log-Mel crop.
inline constexpr nn::Shape kInputShape{1, 1, 32, 128};

struct ArchSpec {
  Family family = Family::kFanConv;
  std::string name;
  std::vector<nn::LayerKind> layers;
  nn::Shape input = kInputShape;

  bool operator==(const ArchSpec&) const = default;
};

// Shape-checks the whole stack, requires output shape == input shape, and
// enforces the family rule (slider: at least one Dense; fan: none).
void ValidateArch(const ArchSpec& arch);

struct LayerCost {
  std::string layer;
  nn::Shape output;
  uint64_t params = 0;
  uint64_t macs = 0;
  uint64_t flops = 0;
};

struct EfficiencyReport {
  std::string name;
  uint64_t param_count = 0;
  uint64_t model_bytes = 0;  // size of the saved .olnt file
  uint64_t macs = 0;
  uint64_t flops = 0;  // 2 per MAC + 1 per bias add + 1 per activation output
  std::vector<LayerCost> per_layer;
};

uint64_t CountParams(const ArchSpec& arch);
uint64_t CountMacs(const ArchSpec& arch);
uint64_t CountFlops(const ArchSpec& arch);
EfficiencyReport Efficiency(const ArchSpec& arch);

// Encoder/decoder pair built from per-stage channel widths.
//
// Encoder stage i: DepthwiseConv2d(stride 2) -> PointwiseConv2d(-> channels[i])
// -> ReLU, halving height and width. The slider family then adds a standard
// Conv2d and a Flatten -> Dense(bottleneck) -> Dense -> Reshape latent with a
// mirrored Conv2d. Decoder stages mirror the encoder with Replicator(2) ->
// DepthwiseConv2d(stride 1) -> PointwiseConv2d -> ReLU, and a final
// PointwiseConv2d to one channel with Linear output.
ArchSpec BuildAutoencoder(Family family, const std::vector<int>& channels,
                          std::optional<int> bottleneck_dim,
                          std::string name = "");

// Stage widths max(1, round(4 * width_multiplier * 2^i)) for i < depth.
std::vector<int> TemplateChannels(double width_multiplier, int depth);

ArchSpec MakeTemplate(Family family, double width_multiplier, int depth,
                      std::optional<int> bottleneck_dim = std::nullopt);

// Line-oriented text form stored inside model files.
std::string SerializeArch(const ArchSpec& arch);
ArchSpec ParseArch(std::string_view text);

}  // namespace outliernet

#endif  // OUTLIERNET_ARCH_H_
