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

#ifndef OUTLIERNET_RNG_H_
#define OUTLIERNET_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace outliernet {

// Derives an independent sub-seed for one purpose ("init", "shuffle",
// "synth", ...) from a root seed. Every random stream in the toolkit is
// rooted this way so that one --seed flag reproduces a whole pipeline.
uint64_t DeriveSeed(uint64_t root, std::string_view purpose);

// Wraps std::mt19937_64 with distribution code of our own. The standard
// distributions are implementation-defined, which would make corpora and
// initial weights differ between standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  uint64_t Below(uint64_t n);
  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(Below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace outliernet

#endif  // OUTLIERNET_RNG_H_
