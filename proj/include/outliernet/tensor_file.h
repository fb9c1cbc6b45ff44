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

#ifndef OUTLIERNET_TENSOR_FILE_H_
#define OUTLIERNET_TENSOR_FILE_H_

#include <filesystem>

#include "outliernet/features.h"

namespace outliernet {

// MELS tensor file: "MELS", u32 rows, u32 cols, u32 dtype (0 = f32), then
// rows*cols little-endian f32 values in row-major order.
inline constexpr uint32_t kMelsDtypeF32 = 0;
inline constexpr size_t kMelsHeaderBytes = 16;

void WriteMelsFile(const std::filesystem::path& path, const Matrix& m);
Matrix ReadMelsFile(const std::filesystem::path& path);

}  // namespace outliernet

#endif  // OUTLIERNET_TENSOR_FILE_H_
