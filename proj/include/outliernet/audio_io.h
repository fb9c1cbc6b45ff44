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

#ifndef OUTLIERNET_AUDIO_IO_H_
#define OUTLIERNET_AUDIO_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace outliernet {

// Mono PCM audio normalized to [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  std::string source_id;
};

enum class Label { kNormal, kAnomalous };
enum class Split { kTrain, kTest };

const char* LabelName(Label label);
Label ParseLabel(std::string_view name);

struct LabeledClip {
  AudioClip clip;
  Label label;
};

// Throws kInvalidArgument unless the clip is non-empty, has a positive rate,
// and every sample is finite and within [-1, 1].
void ValidateClip(const AudioClip& clip);

// Reads RIFF/WAVE with PCM16 or IEEE float32 samples; multichannel input is
// downmixed by channel mean.
AudioClip ReadWav(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };

// Writes a mono WAV. PCM16 quantizes with round-to-nearest on a 1/32768 grid.
void WriteWav(const std::filesystem::path& path, const AudioClip& clip,
              WavEncoding encoding = WavEncoding::kPcm16);

// ---------------------------------------------------------------------------
// Dataset directories laid out as <root>/<machine_type>/<id>/{normal,abnormal}.

struct DatasetEntry {
  std::filesystem::path path;
  Label label;
  Split split;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;  // sorted by path
  std::string machine_type;
  std::string machine_id;
  std::string snr_tag;
  // Set when the machine directory has no abnormal/ folder; every entry is
  // then a normal clip and the index supports training only.
  bool train_only = false;

  size_t Count(Split split) const;
  size_t Count(Split split, Label label) const;
};

struct IndexOptions {
  // Empty selects the only candidate; ambiguity is an error.
  std::string machine_type;
  std::string machine_id;
  double test_fraction = 0.5;  // share of normal clips held out for test
  uint64_t seed = 0;
};

// `root` may be the dataset root, a machine-type directory, or a single
// machine directory that directly contains normal/ and abnormal/.
DatasetIndex IndexDataset(const std::filesystem::path& root,
                          const IndexOptions& options = {});

// ---------------------------------------------------------------------------
// Synthetic machine sounds.

enum class AnomalyKind { kFreqShift, kImpulseTrain, kBroadbandBurst };

const char* AnomalyKindName(AnomalyKind kind);
AnomalyKind ParseAnomalyKind(std::string_view name);

struct Harmonic {
  double frequency_hz;
  double amplitude;
};

struct SynthSpec {
  int sample_rate = 16000;
  int n_normal_train = 40;
  int n_normal_test = 20;
  int n_anomalous_test = 20;
  double duration_s = 10.0;
  std::vector<Harmonic> base_harmonics = {
      {400.0, 0.3}, {800.0, 0.15}, {1200.0, 0.08}, {2000.0, 0.05}};
  double noise_level = 0.05;  // Gaussian noise standard deviation
  AnomalyKind anomaly_kind = AnomalyKind::kFreqShift;
  double shift_factor = 1.5;  // freq_shift only; must be >= 1.3
  uint64_t rng_seed = 0;
};

void ValidateSynthSpec(const SynthSpec& spec);

struct SynthCorpus {
  std::vector<AudioClip> train;
  std::vector<LabeledClip> test;
};

// Pure function of `spec`: the same spec always yields bit-identical audio.
SynthCorpus SynthesizeCorpus(const SynthSpec& spec);

// Flat `key = value` text, one pair per line; '#' starts a comment.
// Harmonics are written as `freq:amp, freq:amp`.
std::string FormatSynthSpec(const SynthSpec& spec);
SynthSpec ParseSynthSpec(std::string_view text);
SynthSpec LoadSynthSpec(const std::filesystem::path& path);

}  // namespace outliernet

#endif  // OUTLIERNET_AUDIO_IO_H_
