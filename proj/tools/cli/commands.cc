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

#include "commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "outliernet/error.h"
#include "outliernet/file_util.h"
#include "outliernet/parallel.h"
#include "outliernet/rng.h"
#include "outliernet/tensor_file.h"

namespace outliernet {

NLOHMANN_JSON_SERIALIZE_ENUM(WindowKind, {{WindowKind::kHann, "hann"},
                                          {WindowKind::kRectangular,
                                           "rectangular"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, epochs_max,
                                                batch_size, lr, patience,
                                                val_fraction, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FeatureConfig, sample_rate,
                                                n_fft, hop, n_mels, window,
                                                f_min, f_max, log_floor,
                                                center_pad)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PerfFnConfig, kappa, beta,
                                                gamma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BenchConfig, warmup_iters,
                                                measure_iters, batch,
                                                input_seed, pin_single_thread)

namespace cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataSource, synth_spec,
                                                data_root, machine_type,
                                                machine_id, test_fraction)

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- JSON forms -------------------------------------------------------------

json ArchJson(const ArchChoice& a) {
  json j{{"family", a.family}, {"width", a.width}, {"depth", a.depth}};
  j["bottleneck"] = a.bottleneck ? json(*a.bottleneck) : json(nullptr);
  return j;
}

ArchChoice ArchFromJson(const json& j) {
  ArchChoice a;
  a.family = j.at("family").get<std::string>();
  a.width = j.at("width").get<double>();
  a.depth = j.at("depth").get<int>();
  if (j.contains("bottleneck") && !j["bottleneck"].is_null()) {
    a.bottleneck = j["bottleneck"].get<int>();
  }
  return a;
}

std::string Iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

class ManifestWriter {
 public:
  explicit ManifestWriter(std::string subcommand)
      : subcommand_(std::move(subcommand)),
        start_(std::chrono::system_clock::now()) {}

  void Write(const std::string& path, const json& config, const json& seeds,
             const std::vector<std::string>& inputs,
             const std::vector<std::string>& outputs) const {
    json m;
    m["tool"] = "outliernet";
    m["version"] = kToolVersion;
    m["subcommand"] = subcommand_;
    m["config"] = config;
    m["seeds"] = seeds;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    const auto end = std::chrono::system_clock::now();
    m["started_at"] = Iso8601(start_);
    m["finished_at"] = Iso8601(end);
    m["wall_seconds"] =
        std::chrono::duration<double>(end - start_).count();
    WriteFileAtomic(path, m.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  std::chrono::system_clock::time_point start_;
};

json SeedsJson(uint64_t root) {
  const DerivedSeeds s = DeriveSeeds(root);
  return json{{"root", root},
              {"split", s.split},
              {"train", s.train},
              {"search", s.search},
              {"synth_validation", s.synth_validation}};
}

Aggregation ParseAggregation(const std::string& name) {
  if (name == "max") return Aggregation::kMax;
  if (name == "mean") return Aggregation::kMean;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown aggregation '" + name + "' (expected max or mean)");
}

void RequireOut(const std::string& out, const char* what) {
  if (out.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("missing output path for ") + what);
  }
}

void ValidateWorkers(int workers) {
  if (workers < 1) {
    throw Error(ErrorCode::kInvalidArgument, "workers must be at least 1");
  }
}

// --- Data loading -------------------------------------------------------------

struct LoadedData {
  std::vector<AudioClip> train;
  std::vector<LabeledClip> test;
  MachineTag machine;
  std::vector<std::string> inputs;
  std::optional<SynthSpec> synth;
};

void ValidateDataSource(const DataSource& src) {
  if (src.synth_spec.empty() == src.data_root.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "exactly one of --synth and --data-root is required");
  }
  if (!src.synth_spec.empty()) {
    ValidateSynthSpec(ParseSynthSpec(src.synth_spec));
  } else if (!fs::exists(src.data_root)) {
    throw Error(ErrorCode::kIo, "data root does not exist: " + src.data_root);
  }
  if (!(src.test_fraction > 0.0 && src.test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "test fraction must lie in (0, 1)");
  }
}

LoadedData LoadData(const DataSource& src, uint64_t split_seed) {
  LoadedData out;
  if (!src.synth_spec.empty()) {
    SynthSpec spec = ParseSynthSpec(src.synth_spec);
    SynthCorpus corpus = SynthesizeCorpus(spec);
    out.train = std::move(corpus.train);
    out.test = std::move(corpus.test);
    out.machine = {src.machine_type.empty() ? "synth" : src.machine_type,
                   src.machine_id.empty() ? "id_00" : src.machine_id, ""};
    out.synth = spec;
    return out;
  }
  IndexOptions opts;
  opts.machine_type = src.machine_type;
  opts.machine_id = src.machine_id;
  opts.test_fraction = src.test_fraction;
  opts.seed = split_seed;
  const DatasetIndex index = IndexDataset(src.data_root, opts);
  out.machine = {index.machine_type, index.machine_id, index.snr_tag};
  for (const auto& e : index.entries) {
    AudioClip clip = ReadWav(e.path);
    out.inputs.push_back(e.path.string());
    if (e.split == Split::kTrain) {
      out.train.push_back(std::move(clip));
    } else {
      out.test.push_back({std::move(clip), e.label});
    }
  }
  return out;
}

std::vector<std::string> DataInputs(const DataSource& src,
                                    const LoadedData& data) {
  if (!src.synth_spec.empty()) return {"synth"};
  return data.inputs;
}

// --- CSV writers --------------------------------------------------------------

std::string EvalCsv(const EvalReport& r) {
  std::ostringstream os;
  os << "clip_id,clip_score,label\n";
  for (const auto& s : r.scores) {
    os << s.clip_id << "," << Num(s.clip_score) << ","
       << (s.label ? LabelName(*s.label) : "") << "\n";
  }
  os << "auc,params,bytes,flops,crop_auc,n_normal,n_anomalous,machine_type,"
        "machine_id,snr\n";
  os << Num(r.auc) << "," << r.efficiency.param_count << ","
     << r.efficiency.model_bytes << "," << r.efficiency.flops << ","
     << Num(r.crop_auc) << "," << r.n_normal << "," << r.n_anomalous << ","
     << r.machine.type << "," << r.machine.id << "," << r.machine.snr << "\n";
  return os.str();
}

std::string ScoresJsonLines(const EvalReport& r) {
  std::string out;
  for (const auto& s : r.scores) {
    json j{{"clip_id", s.clip_id},
           {"clip_score", s.clip_score},
           {"per_crop_mse", s.per_crop_mse}};
    j["label"] = s.label ? json(LabelName(*s.label)) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::string EfficiencyCsv(const std::vector<EfficiencyReport>& rows) {
  std::string out = "name,params,bytes,flops\n";
  for (const auto& e : rows) {
    out += e.name + "," + std::to_string(e.param_count) + "," +
           std::to_string(e.model_bytes) + "," + std::to_string(e.flops) + "\n";
  }
  return out;
}

std::vector<fs::path> CollectWavs(const fs::path& input) {
  std::vector<fs::path> wavs;
  if (fs::is_regular_file(input)) {
    wavs.push_back(input);
    return wavs;
  }
  if (!fs::is_directory(input)) {
    throw Error(ErrorCode::kIo, "input does not exist: " + input.string());
  }
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") wavs.push_back(e.path());
  }
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty()) {
    throw Error(ErrorCode::kEmptyDataset,
                "no wav files found in " + input.string());
  }
  return wavs;
}

// Output stem for a wav: its path relative to the input directory with
// separators flattened, so nested datasets do not collide.
std::string FeatureStem(const fs::path& input, const fs::path& wav) {
  if (fs::is_regular_file(input)) return wav.stem().string();
  fs::path rel = fs::relative(wav, input);
  rel.replace_extension();
  std::string stem = rel.generic_string();
  std::replace(stem.begin(), stem.end(), '/', '_');
  return stem;
}

// Search partitions: normal validation clips are carved out of the training
// normals; anomalous validation clips come from a separately seeded synthetic
// draw, or from part of the dataset's abnormal clips, which are then removed
// from the final test set.
struct SearchSplit {
  std::vector<AudioClip> train;
  std::vector<LabeledClip> validation;
  std::vector<LabeledClip> test;
};

SearchSplit SplitForSearch(LoadedData data, const SearchCommand& cmd,
                           const DerivedSeeds& seeds) {
  SearchSplit s;
  const size_t n = data.train.size();
  if (n < 2) {
    throw Error(ErrorCode::kEmptyDataset,
                "search needs at least two training clips");
  }
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(DeriveSeed(seeds.search, "validation-normals"));
  rng.Shuffle(std::span<size_t>(order));
  size_t n_val = size_t(std::lround(cmd.val_normal_fraction * double(n)));
  n_val = std::clamp<size_t>(n_val, 1, n - 1);
  std::vector<bool> is_val(n, false);
  for (size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  for (size_t i = 0; i < n; ++i) {
    if (is_val[i]) {
      s.validation.push_back({data.train[i], Label::kNormal});
    } else {
      s.train.push_back(data.train[i]);
    }
  }

  if (data.synth) {
    SynthSpec v = *data.synth;
    v.rng_seed = seeds.synth_validation;
    v.n_normal_train = 0;
    v.n_normal_test = 0;
    v.n_anomalous_test = std::max(2, data.synth->n_anomalous_test / 2);
    for (auto& lc : SynthesizeCorpus(v).test) {
      lc.clip.source_id = "validation:" + lc.clip.source_id;
      s.validation.push_back(std::move(lc));
    }
    s.test = std::move(data.test);
    return s;
  }

  std::vector<size_t> abnormal;
  for (size_t i = 0; i < data.test.size(); ++i) {
    if (data.test[i].label == Label::kAnomalous) abnormal.push_back(i);
  }
  if (abnormal.size() < 2) {
    throw Error(ErrorCode::kEmptyDataset,
                "search needs at least two anomalous clips under the data "
                "root (one for validation, one for the final test)");
  }
  Rng arng(DeriveSeed(seeds.search, "validation-anomalous"));
  arng.Shuffle(std::span<size_t>(abnormal));
  std::vector<bool> to_val(data.test.size(), false);
  for (size_t i = 0; i < abnormal.size() / 2; ++i) to_val[abnormal[i]] = true;
  for (size_t i = 0; i < data.test.size(); ++i) {
    if (to_val[i]) {
      s.validation.push_back(std::move(data.test[i]));
    } else {
      s.test.push_back(std::move(data.test[i]));
    }
  }
  return s;
}

std::vector<LabeledCrops> CropLabeled(std::span<const LabeledClip> clips,
                                      const FeatureConfig& cfg, int workers) {
  std::vector<LabeledCrops> out(clips.size());
  ParallelFor(clips.size(), workers, [&](size_t i) {
    out[i].clip_id = clips[i].clip.source_id;
    out[i].label = clips[i].label;
    out[i].crops = CropWindows(LogMel(clips[i].clip, cfg));
  });
  return out;
}

}  // namespace

// --- Public helpers -----------------------------------------------------------

int DefaultWorkers() {
  if (const char* env = std::getenv("OUTLIERNET_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return int(v);
  }
  return 1;
}

DerivedSeeds DeriveSeeds(uint64_t root) {
  return {DeriveSeed(root, "split"), DeriveSeed(root, "train"),
          DeriveSeed(root, "search"), DeriveSeed(root, "synth-validation")};
}

std::string ManifestPathFor(const std::string& artifact, bool is_directory) {
  if (is_directory) return (fs::path(artifact) / "manifest.json").string();
  return artifact + ".manifest.json";
}

ArchSpec ResolveArch(const ArchChoice& choice) {
  const Family family = ParseFamily(choice.family);
  if (family == Family::kSliderDenseBottleneck && !choice.bottleneck) {
    throw Error(ErrorCode::kInvalidArgument,
                "the slider family needs --bottleneck");
  }
  if (family == Family::kFanConv && choice.bottleneck) {
    throw Error(ErrorCode::kInvalidArgument,
                "--bottleneck only applies to the slider family");
  }
  return MakeTemplate(family, choice.width, choice.depth, choice.bottleneck);
}

json ToJson(const SynthCommand& c) {
  return json{{"spec", c.spec_text},
              {"out_dir", c.out_dir},
              {"machine_type", c.machine_type},
              {"machine_id", c.machine_id}};
}

json ToJson(const FeaturesCommand& c) {
  return json{{"input", c.input},
              {"out_dir", c.out_dir},
              {"features", c.features},
              {"workers", c.workers}};
}

json ToJson(const TrainCommand& c) {
  return json{{"data", c.data},         {"arch", ArchJson(c.arch)},
              {"train", c.train},       {"features", c.features},
              {"seed", c.seed},         {"workers", c.workers},
              {"out", c.out}};
}

json ToJson(const ScoreCommand& c) {
  return json{{"model", c.model},
              {"wav", c.wav},
              {"aggregation", c.aggregation},
              {"features", c.features},
              {"out", c.out}};
}

json ToJson(const EvalCommand& c) {
  return json{{"model", c.model},       {"data", c.data},
              {"aggregation", c.aggregation},
              {"features", c.features}, {"seed", c.seed},
              {"workers", c.workers},   {"out", c.out},
              {"jsonl", c.jsonl}};
}

json ToJson(const SearchCommand& c) {
  json j{{"data", c.data},
         {"family", c.family},
         {"widths", c.widths},
         {"depths", c.depths},
         {"bottlenecks", c.bottlenecks},
         {"strategy", c.strategy},
         {"population", c.population},
         {"generations", c.generations},
         {"n_random", c.n_random},
         {"max_params", c.max_params},
         {"baseline_auc", c.baseline_auc},
         {"auc_margin", c.auc_margin},
         {"relative_floor", c.relative_floor},
         {"perf", c.perf},
         {"proxy", c.proxy},
         {"final_train", c.final_train},
         {"features", c.features},
         {"val_normal_fraction", c.val_normal_fraction},
         {"seed", c.seed},
         {"workers", c.workers},
         {"out", c.out}};
  j["auc_floor"] = c.auc_floor ? json(*c.auc_floor) : json(nullptr);
  return j;
}

json ToJson(const BenchCommand& c) {
  return json{{"model", c.model}, {"bench", c.bench}, {"out", c.out}};
}

json ToJson(const ExportCommand& c) {
  json j{{"models", c.models}, {"out", c.out}};
  j["arch"] = c.arch ? ArchJson(*c.arch) : json(nullptr);
  return j;
}

namespace {

SynthCommand SynthFromJson(const json& j) {
  SynthCommand c;
  c.spec_text = j.at("spec").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.machine_type = j.at("machine_type").get<std::string>();
  c.machine_id = j.at("machine_id").get<std::string>();
  return c;
}

FeaturesCommand FeaturesFromJson(const json& j) {
  FeaturesCommand c;
  c.input = j.at("input").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.features = j.at("features").get<FeatureConfig>();
  c.workers = j.at("workers").get<int>();
  return c;
}

TrainCommand TrainFromJson(const json& j) {
  TrainCommand c;
  c.data = j.at("data").get<DataSource>();
  c.arch = ArchFromJson(j.at("arch"));
  c.train = j.at("train").get<TrainConfig>();
  c.features = j.at("features").get<FeatureConfig>();
  c.seed = j.at("seed").get<uint64_t>();
  c.workers = j.at("workers").get<int>();
  c.out = j.at("out").get<std::string>();
  return c;
}

ScoreCommand ScoreFromJson(const json& j) {
  ScoreCommand c;
  c.model = j.at("model").get<std::string>();
  c.wav = j.at("wav").get<std::string>();
  c.aggregation = j.at("aggregation").get<std::string>();
  c.features = j.at("features").get<FeatureConfig>();
  c.out = j.at("out").get<std::string>();
  return c;
}

EvalCommand EvalFromJson(const json& j) {
  EvalCommand c;
  c.model = j.at("model").get<std::string>();
  c.data = j.at("data").get<DataSource>();
  c.aggregation = j.at("aggregation").get<std::string>();
  c.features = j.at("features").get<FeatureConfig>();
  c.seed = j.at("seed").get<uint64_t>();
  c.workers = j.at("workers").get<int>();
  c.out = j.at("out").get<std::string>();
  c.jsonl = j.at("jsonl").get<std::string>();
  return c;
}

SearchCommand SearchFromJson(const json& j) {
  SearchCommand c;
  c.data = j.at("data").get<DataSource>();
  c.family = j.at("family").get<std::string>();
  c.widths = j.at("widths").get<std::vector<double>>();
  c.depths = j.at("depths").get<std::vector<int>>();
  c.bottlenecks = j.at("bottlenecks").get<std::vector<int>>();
  c.strategy = j.at("strategy").get<std::string>();
  c.population = j.at("population").get<int>();
  c.generations = j.at("generations").get<int>();
  c.n_random = j.at("n_random").get<int>();
  c.max_params = j.at("max_params").get<uint64_t>();
  if (!j.at("auc_floor").is_null()) c.auc_floor = j["auc_floor"].get<double>();
  c.baseline_auc = j.at("baseline_auc").get<double>();
  c.auc_margin = j.at("auc_margin").get<double>();
  c.relative_floor = j.at("relative_floor").get<bool>();
  c.perf = j.at("perf").get<PerfFnConfig>();
  c.proxy = j.at("proxy").get<TrainConfig>();
  c.final_train = j.at("final_train").get<TrainConfig>();
  c.features = j.at("features").get<FeatureConfig>();
  c.val_normal_fraction = j.at("val_normal_fraction").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.workers = j.at("workers").get<int>();
  c.out = j.at("out").get<std::string>();
  return c;
}

BenchCommand BenchFromJson(const json& j) {
  BenchCommand c;
  c.model = j.at("model").get<std::string>();
  c.bench = j.at("bench").get<BenchConfig>();
  c.out = j.at("out").get<std::string>();
  return c;
}

ExportCommand ExportFromJson(const json& j) {
  ExportCommand c;
  c.models = j.at("models").get<std::vector<std::string>>();
  if (!j.at("arch").is_null()) c.arch = ArchFromJson(j["arch"]);
  c.out = j.at("out").get<std::string>();
  return c;
}

}  // namespace

// --- Commands -----------------------------------------------------------------

void RunSynth(const SynthCommand& cmd) {
  const SynthSpec spec = ParseSynthSpec(cmd.spec_text);
  ValidateSynthSpec(spec);
  RequireOut(cmd.out_dir, "synth");
  if (cmd.machine_type.empty() || cmd.machine_id.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "machine type and id must be non-empty");
  }
  ManifestWriter manifest("synth");
  const SynthCorpus corpus = SynthesizeCorpus(spec);
  const fs::path machine = fs::path(cmd.out_dir) / cmd.machine_type /
                           cmd.machine_id;
  std::vector<std::string> outputs;
  auto write = [&](const AudioClip& clip, const char* dir, int i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%08d.wav", i);
    const fs::path p = machine / dir / name;
    WriteWav(p, clip);
    outputs.push_back(p.string());
  };
  // Normal clips are numbered consecutively; the split between training and
  // test is re-drawn when the directory is indexed.
  int n = 0;
  for (const auto& clip : corpus.train) write(clip, "normal", n++);
  int a = 0;
  for (const auto& lc : corpus.test) {
    if (lc.label == Label::kNormal) {
      write(lc.clip, "normal", n++);
    } else {
      write(lc.clip, "abnormal", a++);
    }
  }
  const fs::path cfg_path = fs::path(cmd.out_dir) / "synth.cfg";
  WriteFileAtomic(cfg_path, FormatSynthSpec(spec));
  outputs.push_back(cfg_path.string());
  manifest.Write(ManifestPathFor(cmd.out_dir, true), ToJson(cmd),
                 SeedsJson(spec.rng_seed), {}, outputs);
}

void RunFeatures(const FeaturesCommand& cmd) {
  ValidateFeatureConfig(cmd.features);
  ValidateWorkers(cmd.workers);
  RequireOut(cmd.out_dir, "features");
  ManifestWriter manifest("features");
  const fs::path input(cmd.input);
  const std::vector<fs::path> wavs = CollectWavs(input);
  std::vector<std::vector<std::string>> written(wavs.size());
  ParallelFor(wavs.size(), cmd.workers, [&](size_t i) {
    const AudioClip clip = ReadWav(wavs[i]);
    const MelSpectrogram mel = LogMel(clip, cmd.features);
    const std::string stem = FeatureStem(input, wavs[i]);
    const fs::path full = fs::path(cmd.out_dir) / (stem + ".mels");
    WriteMelsFile(full, mel.values);
    written[i].push_back(full.string());
    if (mel.frames() < kCropFrames) return;  // too short to crop
    for (const auto& crop : CropWindows(mel)) {
      const fs::path p = fs::path(cmd.out_dir) /
                         (stem + ".crop" + std::to_string(crop.crop_index) +
                          ".mels");
      WriteMelsFile(p, crop.values);
      written[i].push_back(p.string());
    }
  });
  std::vector<std::string> inputs, outputs;
  for (size_t i = 0; i < wavs.size(); ++i) {
    inputs.push_back(wavs[i].string());
    outputs.insert(outputs.end(), written[i].begin(), written[i].end());
  }
  manifest.Write(ManifestPathFor(cmd.out_dir, true), ToJson(cmd), json(),
                 inputs, outputs);
}

TrainResult RunTrain(const TrainCommand& cmd) {
  ValidateDataSource(cmd.data);
  ValidateFeatureConfig(cmd.features);
  ValidateWorkers(cmd.workers);
  RequireOut(cmd.out, "train");
  const ArchSpec arch = ResolveArch(cmd.arch);
  const DerivedSeeds seeds = DeriveSeeds(cmd.seed);
  TrainConfig tc = cmd.train;
  tc.seed = seeds.train;
  ValidateTrainConfig(tc);

  ManifestWriter manifest("train");
  const LoadedData data = LoadData(cmd.data, seeds.split);
  const std::vector<CropWindow> crops =
      ExtractCrops(data.train, cmd.features, cmd.workers);
  TrainResult result = Train(arch, crops, tc);
  SaveBundle(result.bundle, cmd.out);

  std::string hist = "epoch,train_mse,val_mse\n";
  for (size_t e = 0; e < result.history.train_mse.size(); ++e) {
    hist += std::to_string(e) + "," + Num(result.history.train_mse[e]) + "," +
            Num(result.history.val_mse[e]) + "\n";
  }
  const std::string hist_path = cmd.out + ".history.csv";
  WriteFileAtomic(hist_path, hist);
  manifest.Write(ManifestPathFor(cmd.out, false), ToJson(cmd),
                 SeedsJson(cmd.seed), DataInputs(cmd.data, data),
                 {cmd.out, hist_path});
  return result;
}

AnomalyScore RunScore(const ScoreCommand& cmd) {
  ValidateFeatureConfig(cmd.features);
  const Aggregation agg = ParseAggregation(cmd.aggregation);
  ManifestWriter manifest("score");
  const ModelBundle bundle = LoadBundle(cmd.model);
  const AudioClip clip = ReadWav(cmd.wav);
  AnomalyScore score = ScoreClip(bundle, clip, cmd.features, agg);
  if (!cmd.out.empty()) {
    std::string csv = "clip_id,crop_index,mse\n";
    for (size_t i = 0; i < score.per_crop_mse.size(); ++i) {
      csv += score.clip_id + "," + std::to_string(i) + "," +
             Num(score.per_crop_mse[i]) + "\n";
    }
    csv += "clip_id,clip_score,aggregation,flagged\n";
    const std::string flagged =
        bundle.threshold ? (score.clip_score > *bundle.threshold ? "1" : "0")
                         : "";
    csv += score.clip_id + "," + Num(score.clip_score) + "," +
           cmd.aggregation + "," + flagged + "\n";
    WriteFileAtomic(cmd.out, csv);
    manifest.Write(ManifestPathFor(cmd.out, false), ToJson(cmd), json(),
                   {cmd.model, cmd.wav}, {cmd.out});
  }
  return score;
}

EvalReport RunEval(const EvalCommand& cmd) {
  ValidateDataSource(cmd.data);
  ValidateFeatureConfig(cmd.features);
  ValidateWorkers(cmd.workers);
  RequireOut(cmd.out, "eval");
  EvalOptions opts;
  opts.aggregation = ParseAggregation(cmd.aggregation);
  opts.workers = cmd.workers;

  ManifestWriter manifest("eval");
  const ModelBundle bundle = LoadBundle(cmd.model);
  const LoadedData data = LoadData(cmd.data, DeriveSeeds(cmd.seed).split);
  EvalReport report = Evaluate(bundle, data.test, cmd.features, opts);
  report.machine = data.machine;
  WriteFileAtomic(cmd.out, EvalCsv(report));
  std::vector<std::string> outputs{cmd.out};
  if (!cmd.jsonl.empty()) {
    WriteFileAtomic(cmd.jsonl, ScoresJsonLines(report));
    outputs.push_back(cmd.jsonl);
  }
  std::vector<std::string> inputs{cmd.model};
  for (auto& s : DataInputs(cmd.data, data)) inputs.push_back(s);
  manifest.Write(ManifestPathFor(cmd.out, false), ToJson(cmd),
                 SeedsJson(cmd.seed), inputs, outputs);
  return report;
}

SearchResult RunSearch(const SearchCommand& cmd) {
  ValidateDataSource(cmd.data);
  ValidateFeatureConfig(cmd.features);
  ValidateWorkers(cmd.workers);
  RequireOut(cmd.out, "search");
  SearchSpace space;
  space.family = ParseFamily(cmd.family);
  space.width_multipliers = cmd.widths;
  space.depth_choices = cmd.depths;
  space.bottleneck_dims = cmd.bottlenecks;
  ValidateSearchSpace(space);

  Constraints constraints;
  if (cmd.auc_floor) {
    constraints.max_params = cmd.max_params;
    constraints.auc_floor = *cmd.auc_floor;
  } else {
    constraints = Constraints::FromBaseline(cmd.baseline_auc, cmd.auc_margin,
                                            cmd.relative_floor,
                                            cmd.max_params);
  }
  ValidateConstraints(constraints);
  if (!(cmd.val_normal_fraction > 0.0 && cmd.val_normal_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "validation fraction must lie in (0, 1)");
  }

  const DerivedSeeds seeds = DeriveSeeds(cmd.seed);
  SearchConfig sc;
  sc.strategy = ParseStrategy(cmd.strategy);
  sc.population = cmd.population;
  sc.generations = cmd.generations;
  sc.n_random = cmd.n_random;
  sc.workers = cmd.workers;
  sc.seed = seeds.search;
  sc.budget = cmd.proxy;
  ValidateTrainConfig(sc.budget);
  TrainConfig final_cfg = cmd.final_train;
  final_cfg.seed = seeds.train;
  ValidateTrainConfig(final_cfg);

  ManifestWriter manifest("search");
  LoadedData data = LoadData(cmd.data, seeds.split);
  const std::vector<std::string> inputs = DataInputs(cmd.data, data);
  const SearchSplit split = SplitForSearch(std::move(data), cmd, seeds);

  SearchData sd;
  sd.train_crops = ExtractCrops(split.train, cmd.features, cmd.workers);
  sd.validation = CropLabeled(split.validation, cmd.features, cmd.workers);

  const std::string log_path = cmd.out + ".jsonl";
  SearchResult result;
  try {
    result = Search(space, constraints, cmd.perf, sd, sc);
  } catch (const SearchExhaustedError& e) {
    WriteFileAtomic(log_path, e.log().ToJsonLines());
    manifest.Write(ManifestPathFor(log_path, false), ToJson(cmd),
                   SeedsJson(cmd.seed), inputs, {log_path});
    throw;
  }
  WriteFileAtomic(log_path, result.log.ToJsonLines());

  // The winner is retrained on every training normal with the full budget
  // and scored once on the untouched test partition.
  std::vector<CropWindow> all_train = sd.train_crops;
  {
    std::vector<AudioClip> val_normals;
    for (const auto& lc : split.validation) {
      if (lc.label == Label::kNormal) val_normals.push_back(lc.clip);
    }
    auto extra = ExtractCrops(val_normals, cmd.features, cmd.workers);
    all_train.insert(all_train.end(), extra.begin(), extra.end());
  }
  const TrainResult final_model = Train(result.best.arch, all_train, final_cfg);
  const std::string model_path = cmd.out + ".olnt";
  SaveBundle(final_model.bundle, model_path);
  EvalOptions eo;
  eo.workers = cmd.workers;
  const EvalReport test =
      Evaluate(final_model.bundle, split.test, cmd.features, eo);

  const std::string csv_path = cmd.out + ".csv";
  std::string csv =
      "name,params,bytes,flops,macs,validation_auc,test_auc,u_score\n";
  csv += result.best.arch.name + "," +
         std::to_string(test.efficiency.param_count) + "," +
         std::to_string(test.efficiency.model_bytes) + "," +
         std::to_string(test.efficiency.flops) + "," +
         std::to_string(test.efficiency.macs) + "," + Num(result.best.auc) +
         "," + Num(test.auc) + "," + Num(result.best.u_score) + "\n";
  WriteFileAtomic(csv_path, csv);
  manifest.Write(ManifestPathFor(cmd.out, false), ToJson(cmd),
                 SeedsJson(cmd.seed), inputs,
                 {log_path, model_path, csv_path});
  return result;
}

BenchResult RunBench(const BenchCommand& cmd) {
  if (cmd.bench.warmup_iters < 0 || cmd.bench.measure_iters < 1 ||
      cmd.bench.batch < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "bench needs warmup >= 0, iters >= 1 and batch >= 1");
  }
  ManifestWriter manifest("bench");
  const ModelBundle bundle = LoadBundle(cmd.model);
  const BenchResult r = outliernet::RunBench(bundle, cmd.bench);
  if (!cmd.out.empty()) {
    const EfficiencyReport eff = Efficiency(bundle.arch);
    std::string csv = "model,params,flops,median_us,p95_us,checksum,timing\n";
    csv += bundle.arch.name + "," + std::to_string(eff.param_count) + "," +
           std::to_string(eff.flops) + "," + Num(r.median_us) + "," +
           Num(r.p95_us) + "," + Num(r.checksum) + ",native\n";
    WriteFileAtomic(cmd.out, csv);
    manifest.Write(ManifestPathFor(cmd.out, false), ToJson(cmd),
                   json{{"input_seed", cmd.bench.input_seed}}, {cmd.model},
                   {cmd.out});
  }
  return r;
}

std::vector<EfficiencyReport> RunExport(const ExportCommand& cmd) {
  if (cmd.models.empty() && !cmd.arch) {
    throw Error(ErrorCode::kInvalidArgument,
                "export needs --model or an architecture template");
  }
  std::optional<ArchSpec> arch;
  if (cmd.arch) arch = ResolveArch(*cmd.arch);
  ManifestWriter manifest("export");
  std::vector<EfficiencyReport> rows;
  for (const auto& path : cmd.models) {
    const ModelBundle bundle = LoadBundle(path);
    EfficiencyReport e = Efficiency(bundle.arch);
    e.model_bytes = BundleFileBytes(bundle);
    rows.push_back(std::move(e));
  }
  if (arch) {
    ModelBundle b;
    b.arch = *arch;
    b.weights.assign(CountParams(*arch), 0.0f);
    EfficiencyReport e = Efficiency(*arch);
    e.model_bytes = BundleFileBytes(b);
    rows.push_back(std::move(e));
  }
  if (!cmd.out.empty()) {
    WriteFileAtomic(cmd.out, EfficiencyCsv(rows));
    manifest.Write(ManifestPathFor(cmd.out, false), ToJson(cmd), json(),
                   cmd.models, {cmd.out});
  } else {
    std::cout << EfficiencyCsv(rows);
  }
  return rows;
}

void ReplayManifest(const std::string& manifest_path,
                    const std::string& out_override) {
  json m;
  try {
    m = json::parse(ReadFile(manifest_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat,
                "manifest " + manifest_path + " is not valid JSON: " + e.what());
  }
  const std::string sub = m.value("subcommand", "");
  const json& cfg = m.at("config");
  const bool o = !out_override.empty();
  try {
    if (sub == "synth") {
      auto c = SynthFromJson(cfg);
      if (o) c.out_dir = out_override;
      RunSynth(c);
    } else if (sub == "features") {
      auto c = FeaturesFromJson(cfg);
      if (o) c.out_dir = out_override;
      RunFeatures(c);
    } else if (sub == "train") {
      auto c = TrainFromJson(cfg);
      if (o) c.out = out_override;
      RunTrain(c);
    } else if (sub == "score") {
      auto c = ScoreFromJson(cfg);
      if (o) c.out = out_override;
      RunScore(c);
    } else if (sub == "eval") {
      auto c = EvalFromJson(cfg);
      if (o) {
        c.out = out_override;
        if (!c.jsonl.empty()) c.jsonl = out_override + ".jsonl";
      }
      RunEval(c);
    } else if (sub == "search") {
      auto c = SearchFromJson(cfg);
      if (o) c.out = out_override;
      RunSearch(c);
    } else if (sub == "bench") {
      auto c = BenchFromJson(cfg);
      if (o) c.out = out_override;
      RunBench(c);
    } else if (sub == "export") {
      auto c = ExportFromJson(cfg);
      if (o) c.out = out_override;
      RunExport(c);
    } else {
      throw Error(ErrorCode::kFormat,
                  "manifest has unknown subcommand '" + sub + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat,
                "manifest " + manifest_path + " is malformed: " + e.what());
  }
}

}  // namespace cli
}  // namespace outliernet
