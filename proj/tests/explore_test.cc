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

#include "outliernet/explore.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "outliernet/error.h"
#include "support/test_support.h"

namespace outliernet {
namespace {

TEST(PerfFn, Values) {
  EXPECT_DOUBLE_EQ(PerfFn(1.0, 1000000, 1000000), 80.0);
  // Direct arithmetic: 20 log10(100^2 / (sqrt(686e-6) sqrt(1.435))).
  EXPECT_NEAR(PerfFn(1.0, 686, 1435000), 110.06823983223236, 1e-9);
  double prev = -std::numeric_limits<double>::infinity();
  for (double auc : {0.1, 0.5, 0.9, 0.95, 1.0}) {
    const double u = PerfFn(auc, 5000, 200000);
    EXPECT_GT(u, prev);
    prev = u;
  }
}

TEST(PerfFn, DomainErrors) {
  for (auto [auc, p, m] : {std::tuple{0.0, 10ull, 10ull}, std::tuple{1.1, 10ull, 10ull},
                           std::tuple{0.5, 0ull, 10ull}, std::tuple{0.5, 10ull, 0ull},
                           std::tuple{std::nan(""), 10ull, 10ull}}) {
    try {
      PerfFn(auc, p, m);
      ADD_FAILURE() << auc << " " << p << " " << m;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
  }
}

TEST(PerfFn, ArgmaxInvariantUnderParamRescaling) {
  const std::vector<std::tuple<double, uint64_t, uint64_t>> cands = {
      {0.9, 800, 500000}, {0.97, 7000, 3000000}, {0.8, 130, 160000}, {0.99, 2300, 900000}};
  auto argmax = [&](uint64_t scale) {
    size_t best = 0;
    double bu = -1e300;
    for (size_t i = 0; i < cands.size(); ++i) {
      const auto [a, p, m] = cands[i];
      const double u = PerfFn(a, p * scale, m);
      if (u > bu) {
        bu = u;
        best = i;
      }
    }
    return best;
  };
  for (uint64_t s : {1ull, 3ull, 10ull, 1000ull}) EXPECT_EQ(argmax(s), argmax(1));
}

TEST(Indicator, Boundaries) {
  Constraints c;
  c.auc_floor = 0.85;
  Candidate x;
  x.params = 99999;
  x.auc = 0.85;
  EXPECT_TRUE(Indicator(x, c));
  x.params = 100000;
  EXPECT_FALSE(Indicator(x, c));
  x.params = 10;
  x.auc = 0.849;
  EXPECT_FALSE(Indicator(x, c));
}

TEST(Constraints, FromBaseline) {
  EXPECT_NEAR(Constraints::FromBaseline(0.95).auc_floor, 0.85, 1e-15);
  EXPECT_NEAR(Constraints::FromBaseline(0.95, 0.10, true).auc_floor, 0.855, 1e-15);
  EXPECT_EQ(Constraints::FromBaseline(0.95).max_params, 100000u);
  Constraints bad;
  bad.auc_floor = 1.0;
  EXPECT_THROW(ValidateConstraints(bad), Error);
  bad = Constraints{};
  bad.max_params = 0;
  EXPECT_THROW(ValidateConstraints(bad), Error);
}

TEST(SearchSpace, IndexingIsABijection) {
  SearchSpace s;
  s.family = Family::kSliderDenseBottleneck;
  s.bottleneck_dims = {8, 16};
  ASSERT_EQ(s.size(), 18u);
  std::set<std::string> keys;
  for (size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s.FlatIndex(s.At(i)), i);
    keys.insert(s.Key(s.At(i)));
  }
  EXPECT_EQ(keys.size(), 18u);
  EXPECT_NO_THROW(ValidateSearchSpace(s));
  s.depth_choices.clear();
  EXPECT_THROW(ValidateSearchSpace(s), Error);
}

// Small train/validation partitions from one synthetic draw.
const SearchData& Data() {
  static const SearchData data = [] {
    const SynthCorpus c = SynthesizeCorpus(testing::SmallSynthSpec(41, 6, 3, 3, 2.1));
    SearchData d;
    const FeatureConfig f;
    d.train_crops = ExtractCrops(c.train, f);
    for (const auto& lc : c.test) {
      d.validation.push_back({lc.clip.source_id, CropWindows(LogMel(lc.clip, f)), lc.label});
    }
    return d;
  }();
  return data;
}

TrainConfig Budget() {
  TrainConfig b = DefaultProxyBudget();
  b.epochs_max = 3;
  b.patience = 3;
  b.batch_size = 4;
  return b;
}

SearchSpace FourPoints() {
  SearchSpace s;
  s.width_multipliers = {0.5, 1.0};
  s.depth_choices = {1, 2};
  return s;
}

TEST(EvaluateCandidate, DeterministicAndSkipsOverBudget) {
  const SearchSpace s = FourPoints();
  Constraints c;
  c.auc_floor = 0.0;
  const Candidate a = EvaluateCandidate(s, s.At(1), Data(), Budget(), c, {}, 5);
  const Candidate b = EvaluateCandidate(s, s.At(1), Data(), Budget(), c, {}, 5);
  EXPECT_TRUE(a.trained);
  EXPECT_EQ(a.auc, b.auc);
  EXPECT_EQ(a.u_score, b.u_score);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.params, CountParams(s.Instantiate(s.At(1))));

  c.max_params = 50;
  const Candidate skipped = EvaluateCandidate(s, s.At(3), Data(), Budget(), c, {}, 5);
  EXPECT_FALSE(skipped.trained);
  EXPECT_FALSE(skipped.feasible);
  EXPECT_TRUE(std::isinf(skipped.u_score));
}

Candidate BruteForce(const SearchSpace& s, const Constraints& c, uint64_t seed) {
  std::optional<Candidate> best;
  for (size_t i = 0; i < s.size(); ++i) {
    const Candidate x = EvaluateCandidate(s, s.At(i), Data(), Budget(), c, {}, seed);
    if (!Indicator(x, c)) continue;
    if (!best || x.u_score > best->u_score ||
        (x.u_score == best->u_score && x.params < best->params)) {
      best = x;
    }
  }
  EXPECT_TRUE(best.has_value());
  return *best;
}

TEST(Search, EqualsBruteForceArgmaxOnASmallSpace) {
  const SearchSpace s = FourPoints();
  Constraints c;
  c.auc_floor = 0.0;
  for (Strategy strategy : {Strategy::kRandom, Strategy::kEvolutionary}) {
    SearchConfig cfg;
    cfg.strategy = strategy;
    cfg.n_random = 4;
    cfg.population = 3;
    cfg.generations = 3;
    cfg.seed = 12;
    cfg.budget = Budget();
    const SearchResult r = Search(s, c, {}, Data(), cfg);
    const Candidate brute = BruteForce(s, c, 12);
    EXPECT_EQ(r.best.flat_index, brute.flat_index) << StrategyName(strategy);
    EXPECT_EQ(r.best.u_score, brute.u_score);
    EXPECT_TRUE(Indicator(r.best, c));
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& e : r.log.entries) {
      EXPECT_GE(e.best_feasible_u, prev);
      prev = e.best_feasible_u;
    }
  }
}

TEST(Search, RandomDrawsVisitDistinctPoints) {
  SearchConfig cfg;
  cfg.strategy = Strategy::kRandom;
  cfg.n_random = 4;
  cfg.budget = Budget();
  Constraints c;
  const SearchResult r = Search(FourPoints(), c, {}, Data(), cfg);
  ASSERT_EQ(r.log.entries.size(), 4u);
  std::set<size_t> seen;
  for (const auto& e : r.log.entries) seen.insert(e.candidate.flat_index);
  EXPECT_EQ(seen.size(), 4u);
}

TEST(Search, SingletonSpace) {
  SearchSpace s;
  s.width_multipliers = {0.5};
  s.depth_choices = {1};
  SearchConfig cfg;
  cfg.budget = Budget();
  const SearchResult r = Search(s, Constraints{}, {}, Data(), cfg);
  EXPECT_EQ(r.best.flat_index, 0u);
}

TEST(Search, ReproducibleAcrossWorkerCounts) {
  SearchConfig cfg;
  cfg.population = 3;
  cfg.generations = 2;
  cfg.seed = 99;
  cfg.budget = Budget();
  const std::string a = Search(FourPoints(), Constraints{}, {}, Data(), cfg).log.ToJsonLines();
  cfg.workers = 3;
  const std::string b = Search(FourPoints(), Constraints{}, {}, Data(), cfg).log.ToJsonLines();
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a.empty());
}

TEST(Search, ExhaustedSearchCarriesTheBestInfeasible) {
  Constraints c;
  c.auc_floor = 0.999999;
  c.max_params = 10;  // below every point in the space
  SearchConfig cfg;
  cfg.strategy = Strategy::kRandom;
  cfg.n_random = 4;
  cfg.budget = Budget();
  try {
    Search(FourPoints(), c, {}, Data(), cfg);
    FAIL();
  } catch (const SearchExhaustedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSearchExhausted);
    ASSERT_TRUE(e.best_infeasible().has_value());
    EXPECT_EQ(e.log().entries.size(), 4u);
    for (const auto& entry : e.log().entries) EXPECT_FALSE(entry.candidate.trained);
  }
}

}  // namespace
}  // namespace outliernet
