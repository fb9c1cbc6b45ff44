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

#ifndef OUTLIERNET_MODEL_IO_H_
#define OUTLIERNET_MODEL_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "outliernet/arch.h"
#include "outliernet/nn/network.h"

namespace outliernet {

// Min/max of the training log-Mel values; crops are mapped to [0, 1] with
// these before entering the network.
struct NormStats {
  double min = 0.0;
  double max = 1.0;
  bool operator==(const NormStats&) const = default;
};

inline constexpr uint32_t kBundleVersion = 1;

struct ModelBundle {
  ArchSpec arch;
  std::vector<float> weights;  // per layer: weights then bias
  NormStats norm;
  std::optional<double> threshold;
  uint32_t format_version = kBundleVersion;
};

void ValidateBundle(const ModelBundle& bundle);

// .olnt layout, all little-endian:
//   "OLNT" | u32 version | u32 param count | u32 text length | text |
//   f64 norm min | f64 norm max | param count x f32
// The text is SerializeArch() plus a "threshold <value>" line when set.
std::string EncodeBundle(const ModelBundle& bundle);
ModelBundle DecodeBundle(std::string_view bytes);

// Exact on-disk size: 32 header bytes + text + 4 bytes per parameter.
uint64_t BundleFileBytes(const ModelBundle& bundle);

void SaveBundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle LoadBundle(const std::filesystem::path& path);

nn::Network<float> MakeNetwork(const ModelBundle& bundle);

}  // namespace outliernet

#endif  // OUTLIERNET_MODEL_IO_H_
