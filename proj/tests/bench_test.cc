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

#include <gtest/gtest.h>

#include <cmath>

#include "outliernet/nn/network.h"

namespace outliernet {
namespace {

ModelBundle InitBundle(const ArchSpec& arch) {
  ModelBundle b;
  b.arch = arch;
  b.weights = nn::Network<float>(arch.layers, kInputShape, 3).FlatParams();
  b.norm = {-10.0, 2.0};
  return b;
}

TEST(Summarize, OrderStatistics) {
  const BenchResult r = Summarize({5, 1, 4, 2, 3, 10, 6, 8, 7, 9});
  EXPECT_EQ(r.iters, 10);
  EXPECT_EQ(r.min_us, 1.0);
  EXPECT_EQ(r.median_us, 5.5);
  EXPECT_EQ(r.mean_us, 5.5);
  EXPECT_EQ(r.p95_us, 10.0);  // nearest rank: ceil(0.95 * 10) = 10th value
  const BenchResult one = Summarize({42.0});
  EXPECT_EQ(one.min_us, 42.0);
  EXPECT_EQ(one.median_us, 42.0);
  EXPECT_EQ(one.p95_us, 42.0);
}

TEST(RunBench, SingleIterationAndChecksum) {
  const ModelBundle b = InitBundle(MakeTemplate(Family::kFanConv, 0.5, 2));
  BenchConfig cfg;
  cfg.warmup_iters = 2;
  cfg.measure_iters = 1;
  const BenchResult r = RunBench(b, cfg);
  ASSERT_EQ(r.samples_us.size(), 1u);
  EXPECT_EQ(r.min_us, r.median_us);
  EXPECT_EQ(r.median_us, r.p95_us);
  EXPECT_TRUE(std::isfinite(r.checksum));
  cfg.measure_iters = 20;
  const BenchResult again = RunBench(b, cfg);
  EXPECT_EQ(again.checksum, r.checksum);
  EXPECT_LE(again.min_us, again.median_us);
  EXPECT_LE(again.median_us, again.p95_us);
  EXPECT_GT(again.clock_resolution_us, 0.0);
}

TEST(RunBench, RejectsBadConfig) {
  const ModelBundle b = InitBundle(MakeTemplate(Family::kFanConv, 0.5, 2));
  BenchConfig cfg;
  cfg.measure_iters = 0;
  EXPECT_THROW(RunBench(b, cfg), std::exception);
}

}  // namespace
}  // namespace outliernet
