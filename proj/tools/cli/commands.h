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

#ifndef OUTLIERNET_TOOLS_CLI_COMMANDS_H_
#define OUTLIERNET_TOOLS_CLI_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "outliernet/anomaly.h"
#include "outliernet/bench.h"
#include "outliernet/explore.h"

namespace outliernet::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Where clips come from: an inline synthetic spec or a dataset directory.
struct DataSource {
  std::string synth_spec;  // FormatSynthSpec text; empty when data_root is used
  std::string data_root;
  std::string machine_type;
  std::string machine_id;
  double test_fraction = 0.5;
};

struct ArchChoice {
  std::string family = "fan_conv";
  double width = 1.0;
  int depth = 3;
  std::optional<int> bottleneck;
};

struct SynthCommand {
  std::string spec_text;  // canonical FormatSynthSpec output
  std::string out_dir;
  std::string machine_type = "synth";
  std::string machine_id = "id_00";
};

struct FeaturesCommand {
  std::string input;  // wav file or directory (searched recursively)
  std::string out_dir;
  FeatureConfig features;
  int workers = 1;
};

struct TrainCommand {
  DataSource data;
  ArchChoice arch;
  TrainConfig train;
  FeatureConfig features;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;  // .olnt path
};

struct ScoreCommand {
  std::string model;
  std::string wav;
  std::string aggregation = "max";
  FeatureConfig features;
  std::string out;  // optional CSV
};

struct EvalCommand {
  std::string model;
  DataSource data;
  std::string aggregation = "max";
  FeatureConfig features;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;    // CSV report
  std::string jsonl;  // optional per-clip dump
};

struct SearchCommand {
  DataSource data;
  std::string family = "fan_conv";
  std::vector<double> widths = {0.5, 1.0, 2.0};
  std::vector<int> depths = {2, 3, 4};
  std::vector<int> bottlenecks;
  std::string strategy = "evolutionary";
  int population = 8;
  int generations = 10;
  int n_random = 12;
  uint64_t max_params = 100000;
  std::optional<double> auc_floor;
  double baseline_auc = 0.9;
  double auc_margin = 0.10;
  bool relative_floor = false;
  PerfFnConfig perf;
  TrainConfig proxy = DefaultProxyBudget();
  TrainConfig final_train;
  FeatureConfig features;
  double val_normal_fraction = 0.25;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;  // prefix: <out>.jsonl, <out>.olnt, <out>.csv
};

struct BenchCommand {
  std::string model;
  BenchConfig bench;
  std::string out;  // optional CSV
};

struct ExportCommand {
  std::vector<std::string> models;
  std::optional<ArchChoice> arch;  // template instead of a model file
  std::string out;                 // CSV; stdout when empty
};

// Each Run* validates its arguments before doing any work, writes its
// artifacts plus a RunManifest, and throws outliernet::Error on failure.
void RunSynth(const SynthCommand& cmd);
void RunFeatures(const FeaturesCommand& cmd);
TrainResult RunTrain(const TrainCommand& cmd);
AnomalyScore RunScore(const ScoreCommand& cmd);
EvalReport RunEval(const EvalCommand& cmd);
SearchResult RunSearch(const SearchCommand& cmd);
BenchResult RunBench(const BenchCommand& cmd);
std::vector<EfficiencyReport> RunExport(const ExportCommand& cmd);

// Re-executes the run recorded in a manifest. A non-empty `out_override`
// replaces the recorded output path (or prefix / directory).
void ReplayManifest(const std::string& manifest_path,
                    const std::string& out_override = "");

// The manifest written for an artifact: "<artifact>.manifest.json", or
// "<dir>/manifest.json" for directory outputs.
std::string ManifestPathFor(const std::string& artifact, bool is_directory);

// Per-purpose sub-seeds fanned out from the root --seed.
struct DerivedSeeds {
  uint64_t split;
  uint64_t train;
  uint64_t search;
  uint64_t synth_validation;
};
DerivedSeeds DeriveSeeds(uint64_t root);

ArchSpec ResolveArch(const ArchChoice& choice);

// JSON forms used by manifests.
nlohmann::json ToJson(const TrainCommand& c);
nlohmann::json ToJson(const SearchCommand& c);
nlohmann::json ToJson(const EvalCommand& c);
nlohmann::json ToJson(const FeaturesCommand& c);
nlohmann::json ToJson(const SynthCommand& c);
nlohmann::json ToJson(const ScoreCommand& c);
nlohmann::json ToJson(const BenchCommand& c);
nlohmann::json ToJson(const ExportCommand& c);

// Workers default: OUTLIERNET_WORKERS when set and valid, else 1.
int DefaultWorkers();

}  // namespace outliernet::cli

#endif  // OUTLIERNET_TOOLS_CLI_COMMANDS_H_
