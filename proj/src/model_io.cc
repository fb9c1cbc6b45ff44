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

#include "outliernet/model_io.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "outliernet/error.h"
#include "outliernet/file_util.h"

namespace outliernet {

namespace {

constexpr char kMagic[4] = {'O', 'L', 'N', 'T'};
constexpr size_t kFixedHeader = 32;

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void PutF64(std::string& out, double v) {
  uint64_t raw;
  std::memcpy(&raw, &v, sizeof raw);
  for (int i = 0; i < 8; ++i) out.push_back(char((raw >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool Has(size_t n) const { return pos_ + n <= bytes_.size(); }
  size_t remaining() const { return bytes_.size() - pos_; }

  uint32_t U32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double F64() {
    uint64_t raw = 0;
    for (int i = 0; i < 8; ++i) raw |= uint64_t(uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    double v;
    std::memcpy(&v, &raw, sizeof v);
    return v;
  }
  float F32() {
    const uint32_t raw = U32();
    float v;
    std::memcpy(&v, &raw, sizeof v);
    return v;
  }
  std::string_view Bytes(size_t n) {
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

std::string BundleText(const ModelBundle& bundle) {
  std::string text = SerializeArch(bundle.arch);
  if (bundle.threshold) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "threshold %.17g\n", *bundle.threshold);
    text += buf;
  }
  return text;
}

}  // namespace

void ValidateBundle(const ModelBundle& bundle) {
  ValidateArch(bundle.arch);
  const uint64_t expected = CountParams(bundle.arch);
  if (bundle.weights.size() != expected) {
    throw Error(ErrorCode::kWeightCountMismatch,
                "bundle holds " + std::to_string(bundle.weights.size()) +
                    " weights; architecture '" + bundle.arch.name + "' needs " +
                    std::to_string(expected));
  }
  if (!(bundle.norm.min < bundle.norm.max)) {
    throw Error(ErrorCode::kDegenerateStats,
                "bundle normalization needs min < max");
  }
}

std::string EncodeBundle(const ModelBundle& bundle) {
  ValidateBundle(bundle);
  const std::string text = BundleText(bundle);
  std::string out(kMagic, 4);
  PutU32(out, bundle.format_version);
  PutU32(out, static_cast<uint32_t>(bundle.weights.size()));
  PutU32(out, static_cast<uint32_t>(text.size()));
  out += text;
  PutF64(out, bundle.norm.min);
  PutF64(out, bundle.norm.max);
  for (float w : bundle.weights) {
    uint32_t raw;
    std::memcpy(&raw, &w, sizeof raw);
    PutU32(out, raw);
  }
  return out;
}

ModelBundle DecodeBundle(std::string_view bytes) {
  Reader r(bytes);
  if (!r.Has(4) || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an .olnt model (bad magic)");
  }
  r.Bytes(4);
  if (!r.Has(12)) {
    throw Error(ErrorCode::kFormat, "model header is truncated");
  }
  ModelBundle bundle;
  bundle.format_version = r.U32();
  if (bundle.format_version != kBundleVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "model format version " + std::to_string(bundle.format_version) +
                    " is not supported (expected " +
                    std::to_string(kBundleVersion) + ")");
  }
  const uint32_t count = r.U32();
  const uint32_t text_len = r.U32();
  if (!r.Has(size_t(text_len) + 16)) {
    throw Error(ErrorCode::kFormat, "model header is truncated");
  }
  std::string arch_text;
  {
    std::istringstream in{std::string(r.Bytes(text_len))};
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("threshold ", 0) == 0) {
        bundle.threshold = std::stod(line.substr(10));
      } else {
        arch_text += line + "\n";
      }
    }
  }
  bundle.arch = ParseArch(arch_text);
  bundle.norm.min = r.F64();
  bundle.norm.max = r.F64();

  const uint64_t expected = CountParams(bundle.arch);
  if (count != expected || r.remaining() != 4 * size_t(count)) {
    throw Error(ErrorCode::kWeightCountMismatch,
                "architecture '" + bundle.arch.name + "' needs " +
                    std::to_string(expected) + " weights; header declares " +
                    std::to_string(count) + " and the payload holds " +
                    std::to_string(r.remaining() / 4));
  }
  bundle.weights.resize(count);
  for (float& w : bundle.weights) w = r.F32();
  ValidateBundle(bundle);
  return bundle;
}

uint64_t BundleFileBytes(const ModelBundle& bundle) {
  return kFixedHeader + BundleText(bundle).size() + 4 * bundle.weights.size();
}

void SaveBundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeBundle(bundle));
}

ModelBundle LoadBundle(const std::filesystem::path& path) {
  try {
    return DecodeBundle(ReadFile(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

nn::Network<float> MakeNetwork(const ModelBundle& bundle) {
  ValidateBundle(bundle);
  nn::Network<float> net(bundle.arch.layers, bundle.arch.input, uint64_t{0});
  net.SetFlatParams(bundle.weights);
  return net;
}

}  // namespace outliernet
