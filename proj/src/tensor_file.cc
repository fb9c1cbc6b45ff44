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

#include "outliernet/tensor_file.h"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "outliernet/error.h"
#include "outliernet/file_util.h"

namespace outliernet {

namespace {

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(const std::string& in, size_t pos) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void WriteMelsFile(const std::filesystem::path& path, const Matrix& m) {
  std::string out = "MELS";
  PutU32(out, static_cast<uint32_t>(m.rows));
  PutU32(out, static_cast<uint32_t>(m.cols));
  PutU32(out, kMelsDtypeF32);
  for (double v : m.data) {
    const float f = static_cast<float>(v);
    uint32_t raw;
    std::memcpy(&raw, &f, sizeof raw);
    PutU32(out, raw);
  }
  WriteFileAtomic(path, out);
}

Matrix ReadMelsFile(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string in((std::istreambuf_iterator<char>(file)),
                       std::istreambuf_iterator<char>());
  if (in.size() < kMelsHeaderBytes || in.compare(0, 4, "MELS") != 0) {
    throw Error(ErrorCode::kBadMagic, path.string() + ": not a MELS file");
  }
  const uint32_t rows = GetU32(in, 4);
  const uint32_t cols = GetU32(in, 8);
  if (GetU32(in, 12) != kMelsDtypeF32) {
    throw Error(ErrorCode::kFormat, path.string() + ": unknown dtype");
  }
  const size_t count = size_t(rows) * cols;
  if (in.size() != kMelsHeaderBytes + 4 * count) {
    throw Error(ErrorCode::kFormat, path.string() + ": size does not match " +
                                        std::to_string(rows) + "x" +
                                        std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (size_t i = 0; i < count; ++i) {
    const uint32_t raw = GetU32(in, kMelsHeaderBytes + 4 * i);
    float f;
    std::memcpy(&f, &raw, sizeof f);
    m.data[i] = f;
  }
  return m;
}

}  // namespace outliernet
