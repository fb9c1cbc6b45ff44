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

#include "outliernet/bench.h"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "outliernet/error.h"
#include "outliernet/rng.h"

namespace outliernet {

namespace {

using Clock = std::chrono::steady_clock;

double ClockResolutionUs() {
  double best = 1e9;
  for (int i = 0; i < 1000; ++i) {
    const auto a = Clock::now();
    auto b = Clock::now();
    while (b == a) b = Clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::micro>(b - a).count());
  }
  return best;
}

// Pins the calling thread to the CPU it is running on and restores the
// previous mask on destruction.
class ScopedPin {
 public:
  explicit ScopedPin(bool enable) {
    if (!enable) return;
    if (pthread_getaffinity_np(pthread_self(), sizeof old_, &old_) != 0) return;
    const int cpu = sched_getcpu();
    if (cpu < 0) return;
    cpu_set_t one;
    CPU_ZERO(&one);
    CPU_SET(cpu, &one);
    active_ = pthread_setaffinity_np(pthread_self(), sizeof one, &one) == 0;
  }
  ~ScopedPin() {
    if (active_) pthread_setaffinity_np(pthread_self(), sizeof old_, &old_);
  }
  ScopedPin(const ScopedPin&) = delete;
  ScopedPin& operator=(const ScopedPin&) = delete;

 private:
  cpu_set_t old_{};
  bool active_ = false;
};

}  // namespace

BenchResult Summarize(std::vector<double> samples_us) {
  if (samples_us.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no latency samples");
  }
  BenchResult r;
  r.iters = int(samples_us.size());
  std::vector<double> sorted = samples_us;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  r.min_us = sorted.front();
  r.median_us = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const size_t rank = size_t(std::ceil(0.95 * double(n)));
  r.p95_us = sorted[std::max<size_t>(rank, 1) - 1];
  r.mean_us = std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(n);
  r.samples_us = std::move(samples_us);
  return r;
}

BenchResult RunBench(const ModelBundle& bundle, const BenchConfig& cfg) {
  if (cfg.warmup_iters < 0 || cfg.measure_iters <= 0 || cfg.batch <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "bench needs warmup >= 0, iters > 0 and batch > 0");
  }
  const nn::Network<float> net = MakeNetwork(bundle);
  nn::Shape shape = bundle.arch.input;
  shape.n = size_t(cfg.batch);
  nn::Tensor4<float> input(shape);
  Rng rng(DeriveSeed(cfg.input_seed, "bench-input"));
  for (float& v : input.values()) v = static_cast<float>(rng.Uniform());

  ScopedPin pin(cfg.pin_single_thread);
  volatile double sink = 0.0;
  for (int i = 0; i < cfg.warmup_iters; ++i) {
    sink = sink + net.Infer(input).data()[0];
  }
  std::vector<double> samples;
  samples.reserve(size_t(cfg.measure_iters));
  nn::Tensor4<float> out;
  for (int i = 0; i < cfg.measure_iters; ++i) {
    const auto start = Clock::now();
    out = net.Infer(input);
    const auto stop = Clock::now();
    sink = sink + out.data()[0];
    samples.push_back(
        std::chrono::duration<double, std::micro>(stop - start).count());
  }

  BenchResult r = Summarize(std::move(samples));
  for (float v : out.values()) r.checksum += double(v);
  r.clock_resolution_us = ClockResolutionUs();
  r.low_confidence = r.clock_resolution_us > 0.1 * r.median_us;
  return r;
}

}  // namespace outliernet
