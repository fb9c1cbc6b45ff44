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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "outliernet/error.h"
#include "outliernet/parallel.h"
#include "outliernet/rng.h"

namespace outliernet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

nlohmann::json CandidateJson(const Candidate& c) {
  nlohmann::json j;
  j["name"] = c.arch.name;
  j["index"] = c.flat_index;
  j["point"] = {c.point.width, c.point.depth, c.point.bottleneck};
  j["params"] = c.params;
  j["macs"] = c.macs;
  j["trained"] = c.trained;
  j["auc"] = c.auc;
  j["u"] = std::isfinite(c.u_score) ? nlohmann::json(c.u_score)
                                    : nlohmann::json(nullptr);
  j["feasible"] = c.feasible;
  j["seed"] = c.seed;
  if (!c.diagnostic.empty()) j["diagnostic"] = c.diagnostic;
  return j;
}

// Evaluates the listed grid points not yet in `cache`, in parallel.
void EvaluateMissing(const std::vector<size_t>& indices,
                     std::map<size_t, Candidate>& cache,
                     const SearchSpace& space, const SearchData& data,
                     const Constraints& constraints,
                     const PerfFnConfig& perf_cfg, const SearchConfig& config) {
  std::vector<size_t> todo;
  for (size_t i : indices) {
    if (!cache.count(i) &&
        std::find(todo.begin(), todo.end(), i) == todo.end()) {
      todo.push_back(i);
    }
  }
  std::vector<Candidate> results(todo.size());
  ParallelFor(todo.size(), config.workers, [&](size_t k) {
    results[k] = EvaluateCandidate(space, space.At(todo[k]), data,
                                   config.budget, constraints, perf_cfg,
                                   config.seed);
  });
  for (size_t k = 0; k < todo.size(); ++k) {
    cache.emplace(todo[k], std::move(results[k]));
  }
}

class LogBuilder {
 public:
  explicit LogBuilder(uint64_t seed) { log_.rng_seed = seed; }

  void Record(int generation, const Candidate& c, bool cached) {
    if (c.feasible &&
        (!log_.best_feasible || BetterCandidate(c, *log_.best_feasible))) {
      log_.best_feasible = c;
    }
    if (!c.feasible && (!best_infeasible_ ||
                        BetterCandidate(c, *best_infeasible_))) {
      best_infeasible_ = c;
    }
    log_.entries.push_back(
        {generation, cached, c,
         log_.best_feasible ? log_.best_feasible->u_score : kNegInf});
  }

  SearchResult Finish() {
    if (!log_.best_feasible) {
      std::string msg = "search exhausted without a feasible candidate";
      if (best_infeasible_) {
        msg += "; best infeasible: " + best_infeasible_->arch.name +
               " (params " + std::to_string(best_infeasible_->params) +
               ", auc " + std::to_string(best_infeasible_->auc) + ")";
      }
      throw SearchExhaustedError(msg, best_infeasible_, std::move(log_));
    }
    Candidate best = *log_.best_feasible;
    return {std::move(best), std::move(log_)};
  }

 private:
  SearchLog log_;
  std::optional<Candidate> best_infeasible_;
};

}  // namespace

size_t SearchSpace::size() const {
  const size_t b = family == Family::kFanConv ? 1 : bottleneck_dims.size();
  return width_multipliers.size() * depth_choices.size() * b;
}

GridPoint SearchSpace::At(size_t flat_index) const {
  if (flat_index >= size()) {
    throw Error(ErrorCode::kInvalidArgument, "grid index out of range");
  }
  const size_t nb = family == Family::kFanConv ? 1 : bottleneck_dims.size();
  const size_t nd = depth_choices.size();
  return {flat_index / (nd * nb), (flat_index / nb) % nd, flat_index % nb};
}

size_t SearchSpace::FlatIndex(const GridPoint& p) const {
  const size_t nb = family == Family::kFanConv ? 1 : bottleneck_dims.size();
  return (p.width * depth_choices.size() + p.depth) * nb + p.bottleneck;
}

ArchSpec SearchSpace::Instantiate(const GridPoint& p) const {
  std::optional<int> b;
  if (family == Family::kSliderDenseBottleneck) b = bottleneck_dims.at(p.bottleneck);
  return MakeTemplate(family, width_multipliers.at(p.width),
                      depth_choices.at(p.depth), b);
}

std::string SearchSpace::Key(const GridPoint& p) const {
  std::ostringstream key;
  key.precision(17);
  key << FamilyName(family) << "/w" << width_multipliers.at(p.width) << "/d"
      << depth_choices.at(p.depth);
  if (family == Family::kSliderDenseBottleneck) {
    key << "/b" << bottleneck_dims.at(p.bottleneck);
  }
  return key.str();
}

void ValidateSearchSpace(const SearchSpace& space) {
  if (space.width_multipliers.empty() || space.depth_choices.empty() ||
      (space.family == Family::kSliderDenseBottleneck &&
       space.bottleneck_dims.empty())) {
    throw Error(ErrorCode::kInvalidArgument,
                "search space axes must be non-empty");
  }
  if (space.family == Family::kFanConv && !space.bottleneck_dims.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "fan_conv search space takes no bottleneck dimensions");
  }
  for (size_t i = 0; i < space.size(); ++i) space.Instantiate(space.At(i));
}

Constraints Constraints::FromBaseline(double baseline_auc, double margin,
                                      bool relative, uint64_t max_params) {
  Constraints c;
  c.max_params = max_params;
  c.auc_floor = relative ? baseline_auc * (1.0 - margin) : baseline_auc - margin;
  c.auc_floor = std::max(0.0, c.auc_floor);
  return c;
}

void ValidateConstraints(const Constraints& c) {
  if (c.max_params == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_params must be positive");
  }
  if (!(c.auc_floor >= 0.0 && c.auc_floor < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "auc_floor must lie in [0, 1)");
  }
}

double PerfFn(double auc, uint64_t params, uint64_t macs,
              const PerfFnConfig& cfg) {
  if (!(auc > 0.0 && auc <= 1.0) || params == 0 || macs == 0) {
    throw Error(ErrorCode::kDomain,
                "performance function needs auc in (0, 1] and positive "
                "params and MACs");
  }
  if (!(cfg.kappa > 0.0 && cfg.beta > 0.0 && cfg.gamma > 0.0)) {
    throw Error(ErrorCode::kDomain, "performance exponents must be positive");
  }
  const double acc = 100.0 * auc;
  const double p = double(params) / 1e6;
  const double m = double(macs) / 1e6;
  return 20.0 * (cfg.kappa * std::log10(acc) - cfg.beta * std::log10(p) -
                 cfg.gamma * std::log10(m));
}

bool Indicator(const Candidate& candidate, const Constraints& constraints) {
  return candidate.params < constraints.max_params &&
         candidate.auc >= constraints.auc_floor;
}

bool BetterCandidate(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.u_score != b.u_score) return a.u_score > b.u_score;
  if (a.params != b.params) return a.params < b.params;
  return a.flat_index < b.flat_index;
}

TrainConfig DefaultProxyBudget() {
  TrainConfig budget;
  budget.epochs_max = 30;
  budget.patience = budget.epochs_max;
  return budget;
}

Candidate EvaluateCandidate(const SearchSpace& space, const GridPoint& point,
                            const SearchData& data, const TrainConfig& budget,
                            const Constraints& constraints,
                            const PerfFnConfig& perf_cfg,
                            uint64_t search_seed) {
  Candidate c;
  c.point = point;
  c.flat_index = space.FlatIndex(point);
  c.arch = space.Instantiate(point);
  const EfficiencyReport eff = Efficiency(c.arch);
  c.params = eff.param_count;
  c.macs = eff.macs;
  c.seed = DeriveSeed(search_seed, space.Key(point));
  c.u_score = kNegInf;

  // Parameter counts are static; over-budget points never train.
  if (c.params >= constraints.max_params) {
    c.diagnostic = "params >= max_params; skipped without training";
    return c;
  }

  TrainConfig cfg = budget;
  cfg.seed = c.seed;
  try {
    const TrainResult trained = Train(c.arch, data.train_crops, cfg);
    c.trained = true;
    c.auc = EvaluateCrops(trained.bundle, data.validation).auc;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTrainingDiverged) throw;
    c.trained = true;
    c.diagnostic = e.what();
    return c;
  }
  if (c.auc > 0.0) c.u_score = PerfFn(c.auc, c.params, c.macs, perf_cfg);
  c.feasible = Indicator(c, constraints);
  return c;
}

const char* StrategyName(Strategy s) {
  return s == Strategy::kRandom ? "random" : "evolutionary";
}

Strategy ParseStrategy(std::string_view name) {
  if (name == "random") return Strategy::kRandom;
  if (name == "evolutionary") return Strategy::kEvolutionary;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown strategy '" + std::string(name) + "'");
}

std::string SearchLog::ToJsonLines() const {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::json j;
    j["generation"] = e.generation;
    j["cached"] = e.cached;
    j["candidate"] = CandidateJson(e.candidate);
    j["best_feasible_u"] = std::isfinite(e.best_feasible_u)
                               ? nlohmann::json(e.best_feasible_u)
                               : nlohmann::json(nullptr);
    j["rng_seed"] = rng_seed;
    out += j.dump() + "\n";
  }
  return out;
}

SearchResult Search(const SearchSpace& space, const Constraints& constraints,
                    const PerfFnConfig& perf_cfg, const SearchData& data,
                    const SearchConfig& config) {
  ValidateSearchSpace(space);
  ValidateConstraints(constraints);
  if (data.validation.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "search needs a labelled validation partition");
  }
  Rng rng(DeriveSeed(config.seed, "search"));
  std::map<size_t, Candidate> cache;
  LogBuilder log(config.seed);
  const size_t grid = space.size();

  std::vector<size_t> order(grid);
  std::iota(order.begin(), order.end(), size_t{0});
  rng.Shuffle(std::span<size_t>(order));

  if (config.strategy == Strategy::kRandom) {
    if (config.n_random < 1) {
      throw Error(ErrorCode::kInvalidArgument, "random search needs n >= 1");
    }
    std::vector<size_t> draws;
    for (int i = 0; i < config.n_random; ++i) {
      draws.push_back(size_t(i) < grid ? order[size_t(i)] : rng.Below(grid));
    }
    EvaluateMissing(draws, cache, space, data, constraints, perf_cfg, config);
    std::vector<bool> seen(grid, false);
    for (size_t i = 0; i < draws.size(); ++i) {
      log.Record(int(i), cache.at(draws[i]), seen[draws[i]]);
      seen[draws[i]] = true;
    }
    return log.Finish();
  }

  if (config.population < 1 || config.generations < 0 ||
      config.tournament < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "evolutionary search needs population >= 1, generations >= 0 "
                "and tournament >= 1");
  }
  std::vector<bool> seen(grid, false);
  auto record = [&](int gen, const std::vector<size_t>& idx) {
    for (size_t i : idx) {
      log.Record(gen, cache.at(i), seen[i]);
      seen[i] = true;
    }
  };

  std::vector<size_t> population(
      order.begin(), order.begin() + long(std::min(grid, size_t(config.population))));
  EvaluateMissing(population, cache, space, data, constraints, perf_cfg, config);
  record(0, population);

  // Axes that can mutate.
  const size_t axis_len[3] = {
      space.width_multipliers.size(), space.depth_choices.size(),
      space.family == Family::kFanConv ? 1 : space.bottleneck_dims.size()};

  for (int gen = 1; gen <= config.generations; ++gen) {
    std::vector<size_t> feasible;
    for (size_t i : population) {
      if (cache.at(i).feasible) feasible.push_back(i);
    }
    const std::vector<size_t>& pool = feasible.empty() ? population : feasible;

    std::vector<size_t> children;
    for (int k = 0; k < config.population; ++k) {
      size_t parent = pool[rng.Below(pool.size())];
      for (int t = 1; t < config.tournament; ++t) {
        const size_t rival = pool[rng.Below(pool.size())];
        if (BetterCandidate(cache.at(rival), cache.at(parent))) parent = rival;
      }
      GridPoint p = space.At(parent);
      std::vector<int> movable;
      for (int a = 0; a < 3; ++a) {
        if (axis_len[a] > 1) movable.push_back(a);
      }
      if (!movable.empty()) {
        const int axis = movable[rng.Below(movable.size())];
        size_t* coord = axis == 0 ? &p.width : axis == 1 ? &p.depth : &p.bottleneck;
        const bool up = rng.Below(2) == 1;
        if (up) {
          *coord = *coord + 1 < axis_len[axis] ? *coord + 1 : *coord - 1;
        } else {
          *coord = *coord > 0 ? *coord - 1 : *coord + 1;
        }
      }
      children.push_back(space.FlatIndex(p));
    }
    EvaluateMissing(children, cache, space, data, constraints, perf_cfg, config);
    record(gen, children);

    std::vector<size_t> merged = population;
    for (size_t c : children) {
      if (std::find(merged.begin(), merged.end(), c) == merged.end()) {
        merged.push_back(c);
      }
    }
    std::sort(merged.begin(), merged.end(), [&](size_t a, size_t b) {
      return BetterCandidate(cache.at(a), cache.at(b));
    });
    merged.resize(std::min(merged.size(), size_t(config.population)));
    population = std::move(merged);
  }
  return log.Finish();
}

}  // namespace outliernet
