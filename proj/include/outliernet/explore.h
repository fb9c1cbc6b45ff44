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

#ifndef OUTLIERNET_EXPLORE_H_
#define OUTLIERNET_EXPLORE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "outliernet/anomaly.h"
#include "outliernet/arch.h"
#include "outliernet/error.h"

namespace outliernet {

// Coordinates of one architecture in the template grid.
struct GridPoint {
  size_t width = 0;       // index into width_multipliers
  size_t depth = 0;       // index into depth_choices
  size_t bottleneck = 0;  // index into bottleneck_dims (0 for fan_conv)
  bool operator==(const GridPoint&) const = default;
};

struct SearchSpace {
  Family family = Family::kFanConv;
  std::vector<double> width_multipliers = {0.5, 1.0, 2.0};
  std::vector<int> depth_choices = {2, 3, 4};
  std::vector<int> bottleneck_dims;  // slider family only

  size_t size() const;
  // Row-major over (width, depth, bottleneck).
  GridPoint At(size_t flat_index) const;
  size_t FlatIndex(const GridPoint& p) const;
  ArchSpec Instantiate(const GridPoint& p) const;
  // Stable textual key, also used to derive per-point training seeds.
  std::string Key(const GridPoint& p) const;
};

// Throws unless every axis is non-empty and every point builds a valid
// architecture.
void ValidateSearchSpace(const SearchSpace& space);

struct Constraints {
  uint64_t max_params = 100000;  // feasible iff params < max_params
  double auc_floor = 0.0;        // feasible iff auc >= auc_floor

  // Floor `margin` below the baseline: absolute (baseline - margin) by
  // default, or relative (baseline * (1 - margin)).
  static Constraints FromBaseline(double baseline_auc, double margin = 0.10,
                                  bool relative = false,
                                  uint64_t max_params = 100000);
};

void ValidateConstraints(const Constraints& c);

// NetScore-style trade-off with accuracy as AUC * 100 and parameter / MAC
// counts in millions:
//   20 * log10((100 auc)^kappa / ((params/1e6)^beta * (macs/1e6)^gamma))
struct PerfFnConfig {
  double kappa = 2.0;
  double beta = 0.5;
  double gamma = 0.5;
};

double PerfFn(double auc, uint64_t params, uint64_t macs,
              const PerfFnConfig& cfg = {});

struct Candidate {
  ArchSpec arch;
  GridPoint point;
  size_t flat_index = 0;
  double auc = 0.0;
  uint64_t params = 0;
  uint64_t macs = 0;
  double u_score = 0.0;  // -inf when the candidate was not (or could not be) scored
  bool feasible = false;
  bool trained = false;
  uint64_t seed = 0;
  std::string diagnostic;
};

bool Indicator(const Candidate& candidate, const Constraints& constraints);

// Strict ordering used for every "best" decision: feasible first, then
// higher u_score, fewer parameters, lower grid index.
bool BetterCandidate(const Candidate& a, const Candidate& b);

// Data seen during search. Validation clips come from the training
// partition (normals) plus held-out anomalous clips; the final test set is
// never used here.
struct SearchData {
  std::vector<CropWindow> train_crops;
  std::vector<LabeledCrops> validation;
};

// Proxy budget: 30 epochs with early stopping effectively disabled.
TrainConfig DefaultProxyBudget();

Candidate EvaluateCandidate(const SearchSpace& space, const GridPoint& point,
                            const SearchData& data, const TrainConfig& budget,
                            const Constraints& constraints,
                            const PerfFnConfig& perf_cfg, uint64_t search_seed);

enum class Strategy { kRandom, kEvolutionary };

const char* StrategyName(Strategy s);
Strategy ParseStrategy(std::string_view name);

struct SearchConfig {
  Strategy strategy = Strategy::kEvolutionary;
  int population = 8;
  int generations = 10;
  int tournament = 3;
  // Random strategy: number of draws. Draws visit distinct grid points
  // until the grid is exhausted.
  int n_random = 12;
  int workers = 1;
  uint64_t seed = 0;
  TrainConfig budget = DefaultProxyBudget();
};

struct SearchLogEntry {
  int generation = 0;
  bool cached = false;  // point was already evaluated earlier in the search
  Candidate candidate;
  double best_feasible_u = 0.0;  // running best after this entry; -inf if none
};

struct SearchLog {
  std::vector<SearchLogEntry> entries;
  std::optional<Candidate> best_feasible;
  uint64_t rng_seed = 0;

  // One JSON object per line, in evaluation order.
  std::string ToJsonLines() const;
};

struct SearchResult {
  Candidate best;
  SearchLog log;
};

class SearchExhaustedError : public Error {
 public:
  SearchExhaustedError(const std::string& message,
                       std::optional<Candidate> best_infeasible, SearchLog log)
      : Error(ErrorCode::kSearchExhausted, message),
        best_infeasible_(std::move(best_infeasible)),
        log_(std::move(log)) {}

  const std::optional<Candidate>& best_infeasible() const {
    return best_infeasible_;
  }
  const SearchLog& log() const { return log_; }

 private:
  std::optional<Candidate> best_infeasible_;
  SearchLog log_;
};

// Maximizes PerfFn over feasible candidates.
SearchResult Search(const SearchSpace& space, const Constraints& constraints,
                    const PerfFnConfig& perf_cfg, const SearchData& data,
                    const SearchConfig& config);

}  // namespace outliernet

#endif  // OUTLIERNET_EXPLORE_H_
