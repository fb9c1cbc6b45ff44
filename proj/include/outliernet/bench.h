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

#ifndef OUTLIERNET_BENCH_H_
#define OUTLIERNET_BENCH_H_

#include <cstdint>
#include <vector>

#include "outliernet/model_io.h"

namespace outliernet {

struct BenchConfig {
  int warmup_iters = 200;
  int measure_iters = 2000;
  int batch = 1;
  uint64_t input_seed = 0;  // fixed random input in [0, 1)
  bool pin_single_thread = true;
};

// Latencies of single forward passes, in microseconds.
struct BenchResult {
  double median_us = 0.0;
  double mean_us = 0.0;
  double p95_us = 0.0;  // nearest-rank
  double min_us = 0.0;
  int iters = 0;
  double checksum = 0.0;  // sum of the last output tensor
  double clock_resolution_us = 0.0;
  // Clock resolution coarser than 10% of the median.
  bool low_confidence = false;
  std::vector<double> samples_us;
};

// Runs warmup then measured forward passes of the bundle's native network
// on one thread, timing each with a monotonic clock.
BenchResult RunBench(const ModelBundle& bundle, const BenchConfig& cfg = {});

// Summary statistics of raw samples; exposed for testing.
BenchResult Summarize(std::vector<double> samples_us);

}  // namespace outliernet

#endif  // OUTLIERNET_BENCH_H_
