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

#include "app.h"

#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "outliernet/error.h"

namespace outliernet::cli {
namespace {

struct DataFlags {
  std::string synth;  // config path or "builtin"
};

void AddDataFlags(CLI::App* app, DataSource& src, DataFlags& flags) {
  app->add_option("--synth", flags.synth,
                  "Synthetic corpus config file, or 'builtin' for defaults");
  app->add_option("--data-root", src.data_root,
                  "Dataset root, machine-type or machine directory");
  app->add_option("--machine-type", src.machine_type);
  app->add_option("--machine-id", src.machine_id);
  app->add_option("--test-fraction", src.test_fraction,
                  "Share of normal clips held out for test")
      ->check(CLI::Range(0.0, 1.0));
}

// Inlines the synthetic spec so the manifest is self-contained.
void ResolveData(DataSource& src, const DataFlags& flags, uint64_t seed) {
  if (flags.synth.empty()) return;
  SynthSpec spec;
  if (flags.synth == "builtin") {
    spec.rng_seed = seed;
  } else {
    spec = LoadSynthSpec(flags.synth);
  }
  src.synth_spec = FormatSynthSpec(spec);
}

void AddArchFlags(CLI::App* app, ArchChoice& arch, int& bottleneck) {
  app->add_option("--family", arch.family, "fan_conv or slider_dense_bottleneck");
  app->add_option("--width", arch.width, "Width multiplier");
  app->add_option("--depth", arch.depth, "Encoder stages (1-5)");
  app->add_option("--bottleneck", bottleneck, "Dense bottleneck (slider only)");
}

void ResolveArchFlags(ArchChoice& arch, int bottleneck) {
  if (bottleneck > 0) arch.bottleneck = bottleneck;
}

void AddTrainFlags(CLI::App* app, TrainConfig& t, const std::string& prefix) {
  app->add_option("--" + prefix + "epochs", t.epochs_max);
  app->add_option("--" + prefix + "batch", t.batch_size);
  app->add_option("--" + prefix + "lr", t.lr);
  app->add_option("--" + prefix + "patience", t.patience);
  app->add_option("--" + prefix + "val-fraction", t.val_fraction);
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Audio anomaly detection with small autoencoders"};
  app.require_subcommand(1);
  const int default_workers = DefaultWorkers();

  // synth
  SynthCommand synth;
  std::string synth_cfg;
  std::optional<uint64_t> synth_seed;
  bool print_config = false;
  auto* s_synth = app.add_subcommand("synth", "Write a synthetic wav corpus");
  s_synth->add_option("--config", synth_cfg, "Synthetic corpus config file");
  s_synth->add_option("--seed", synth_seed, "Overrides rng_seed");
  s_synth->add_option("--out", synth.out_dir, "Output directory");
  s_synth->add_option("--machine-type", synth.machine_type);
  s_synth->add_option("--machine-id", synth.machine_id);
  s_synth->add_flag("--print-config", print_config,
                    "Print the resolved config and exit");

  // features
  FeaturesCommand feats;
  feats.workers = default_workers;
  auto* s_feat = app.add_subcommand("features", "Compute log-Mel features");
  s_feat->add_option("--in", feats.input, "Wav file or directory")->required();
  s_feat->add_option("--out", feats.out_dir, "Output directory")->required();
  s_feat->add_option("--sample-rate", feats.features.sample_rate);
  s_feat->add_option("--workers", feats.workers);

  // train
  TrainCommand train;
  train.workers = default_workers;
  DataFlags train_data;
  int train_bneck = 0;
  auto* s_train = app.add_subcommand("train", "Train an autoencoder");
  AddDataFlags(s_train, train.data, train_data);
  AddArchFlags(s_train, train.arch, train_bneck);
  AddTrainFlags(s_train, train.train, "");
  s_train->add_option("--seed", train.seed);
  s_train->add_option("--workers", train.workers);
  s_train->add_option("--out", train.out, "Model bundle path")->required();

  // score
  ScoreCommand score;
  auto* s_score = app.add_subcommand("score", "Score one wav file");
  s_score->add_option("--model", score.model)->required();
  s_score->add_option("--wav", score.wav)->required();
  s_score->add_option("--aggregation", score.aggregation, "max or mean");
  s_score->add_option("--out", score.out, "Optional CSV path");

  // eval
  EvalCommand eval;
  eval.workers = default_workers;
  DataFlags eval_data;
  auto* s_eval = app.add_subcommand("eval", "Evaluate a model on a test set");
  s_eval->add_option("--model", eval.model)->required();
  AddDataFlags(s_eval, eval.data, eval_data);
  s_eval->add_option("--aggregation", eval.aggregation, "max or mean");
  s_eval->add_option("--seed", eval.seed, "Seed of the train/test split");
  s_eval->add_option("--workers", eval.workers);
  s_eval->add_option("--out", eval.out, "CSV report")->required();
  s_eval->add_option("--jsonl", eval.jsonl, "Per-clip score dump");

  // search
  SearchCommand search;
  search.workers = default_workers;
  DataFlags search_data;
  std::optional<double> auc_floor;
  auto* s_search = app.add_subcommand("search", "Search for a compact model");
  AddDataFlags(s_search, search.data, search_data);
  s_search->add_option("--family", search.family);
  s_search->add_option("--widths", search.widths)->delimiter(',');
  s_search->add_option("--depths", search.depths)->delimiter(',');
  s_search->add_option("--bottlenecks", search.bottlenecks)->delimiter(',');
  s_search->add_option("--strategy", search.strategy, "random or evolutionary");
  s_search->add_option("--population", search.population);
  s_search->add_option("--generations", search.generations);
  s_search->add_option("--n", search.n_random, "Random strategy draws");
  s_search->add_option("--max-params", search.max_params);
  s_search->add_option("--auc-floor", auc_floor);
  s_search->add_option("--baseline-auc", search.baseline_auc);
  s_search->add_option("--auc-margin", search.auc_margin);
  s_search->add_flag("--relative-floor", search.relative_floor);
  s_search->add_option("--kappa", search.perf.kappa);
  s_search->add_option("--beta", search.perf.beta);
  s_search->add_option("--gamma", search.perf.gamma);
  AddTrainFlags(s_search, search.proxy, "proxy-");
  AddTrainFlags(s_search, search.final_train, "final-");
  s_search->add_option("--val-normal-fraction", search.val_normal_fraction);
  s_search->add_option("--seed", search.seed);
  s_search->add_option("--workers", search.workers);
  s_search->add_option("--out", search.out, "Output prefix")->required();

  // bench
  BenchCommand bench;
  auto* s_bench = app.add_subcommand("bench", "Measure inference latency");
  s_bench->add_option("--model", bench.model)->required();
  s_bench->add_option("--warmup", bench.bench.warmup_iters);
  s_bench->add_option("--iters", bench.bench.measure_iters);
  s_bench->add_option("--batch", bench.bench.batch);
  s_bench->add_option("--input-seed", bench.bench.input_seed);
  bool no_pin = false;
  s_bench->add_flag("--no-pin", no_pin, "Do not pin to one core");
  s_bench->add_option("--out", bench.out, "Optional CSV path");

  // export
  ExportCommand exp;
  ArchChoice exp_arch;
  int exp_bneck = 0;
  auto* s_export = app.add_subcommand("export", "Report size and FLOPs");
  s_export->add_option("--model", exp.models, "Model bundles");
  AddArchFlags(s_export, exp_arch, exp_bneck);
  s_export->add_option("--out", exp.out, "CSV path (stdout when omitted)");

  // replay
  std::string replay_manifest, replay_out;
  auto* s_replay = app.add_subcommand("replay", "Re-run a recorded manifest");
  s_replay->add_option("--manifest", replay_manifest)->required();
  s_replay->add_option("--out", replay_out, "Replaces the recorded output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (s_synth->parsed()) {
      SynthSpec spec = synth_cfg.empty() ? SynthSpec{} : LoadSynthSpec(synth_cfg);
      if (synth_seed) spec.rng_seed = *synth_seed;
      ValidateSynthSpec(spec);
      synth.spec_text = FormatSynthSpec(spec);
      if (print_config) {
        out << synth.spec_text;
        return 0;
      }
      RunSynth(synth);
      out << "wrote corpus to " << synth.out_dir << "\n";
    } else if (s_feat->parsed()) {
      RunFeatures(feats);
      out << "wrote features to " << feats.out_dir << "\n";
    } else if (s_train->parsed()) {
      ResolveData(train.data, train_data, train.seed);
      ResolveArchFlags(train.arch, train_bneck);
      const TrainResult r = RunTrain(train);
      out << "trained " << r.bundle.arch.name << ": "
          << r.history.train_mse.size() << " epochs, best epoch "
          << r.history.best_epoch << ", val mse "
          << r.history.val_mse[size_t(r.history.best_epoch)] << "\n";
    } else if (s_score->parsed()) {
      const AnomalyScore s = RunScore(score);
      out << s.clip_id << "," << s.clip_score << "\n";
    } else if (s_eval->parsed()) {
      ResolveData(eval.data, eval_data, eval.seed);
      const EvalReport r = RunEval(eval);
      out << "auc " << r.auc << " (" << r.n_normal << " normal, "
          << r.n_anomalous << " anomalous)\n";
    } else if (s_search->parsed()) {
      ResolveData(search.data, search_data, search.seed);
      search.auc_floor = auc_floor;
      const SearchResult r = RunSearch(search);
      out << "best " << r.best.arch.name << ": params " << r.best.params
          << ", validation auc " << r.best.auc << ", u " << r.best.u_score
          << "\n";
    } else if (s_bench->parsed()) {
      bench.bench.pin_single_thread = !no_pin;
      const BenchResult r = RunBench(bench);
      out << "native median " << r.median_us << " us, p95 " << r.p95_us
          << " us, checksum " << r.checksum
          << (r.low_confidence ? " (low confidence: near clock resolution)"
                               : "")
          << "\n";
    } else if (s_export->parsed()) {
      ResolveArchFlags(exp_arch, exp_bneck);
      if (s_export->count("--family") || s_export->count("--width") ||
          s_export->count("--depth")) {
        exp.arch = exp_arch;
      }
      RunExport(exp);
    } else if (s_replay->parsed()) {
      ReplayManifest(replay_manifest, replay_out);
      out << "replayed " << replay_manifest << "\n";
    }
  } catch (const SearchExhaustedError& e) {
    err << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    if (e.best_infeasible()) {
      const auto& c = *e.best_infeasible();
      err << "best infeasible: " << c.arch.name << " params " << c.params
          << " auc " << c.auc << "\n";
    }
    return 3;
  } catch (const Error& e) {
    err << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace outliernet::cli
