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

#include "outliernet/audio_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <regex>
#include <sstream>

#include "outliernet/error.h"
#include "outliernet/file_util.h"
#include "outliernet/rng.h"

namespace outliernet {

namespace fs = std::filesystem;

namespace {

constexpr uint16_t kFormatPcm = 0x0001;
constexpr uint16_t kFormatFloat = 0x0003;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }
uint32_t ReadU32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
         (uint32_t(p[3]) << 24);
}

void PutU16(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8));
}
void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

[[noreturn]] void FormatFail(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::kFormat, path.string() + ": " + what);
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<fs::path> WavFilesIn(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<fs::path> Subdirectories(const fs::path& dir) {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

bool IsMachineDir(const fs::path& dir) {
  return fs::is_directory(dir / "normal");
}

fs::path PickOne(const std::vector<fs::path>& candidates,
                 const std::string& wanted, const char* what,
                 const fs::path& root) {
  if (!wanted.empty()) {
    for (const auto& c : candidates) {
      if (c.filename() == wanted) return c;
    }
    throw Error(ErrorCode::kEmptyDataset, std::string("no ") + what + " '" +
                                              wanted + "' under " +
                                              root.string());
  }
  if (candidates.size() == 1) return candidates.front();
  std::string names;
  for (const auto& c : candidates) names += " " + c.filename().string();
  throw Error(ErrorCode::kInvalidArgument,
              std::string("ambiguous ") + what + " under " + root.string() +
                  "; choose one of:" + names);
}

// MIMII ships SNR variants as top-level folders such as "6_dB_fan" or
// "-6_dB_slider"; the tag is recovered from any ancestor named that way.
std::string SnrTagFor(const fs::path& machine_dir) {
  static const std::regex kSnr(R"((-?\d+)_?dB)", std::regex::icase);
  for (fs::path p = fs::absolute(machine_dir); p.has_filename();
       p = p.parent_path()) {
    std::smatch m;
    const std::string name = p.filename().string();
    if (std::regex_search(name, m, kSnr)) return m[1].str() + "dB";
  }
  return "";
}

// Second-order band-pass section (constant 0 dB peak gain).
class BandPass {
 public:
  BandPass(double center_hz, double q, double sample_rate) {
    const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0_ = alpha / a0;
    b2_ = -alpha / a0;
    a1_ = -2.0 * std::cos(w0) / a0;
    a2_ = (1.0 - alpha) / a0;
  }
  double Process(double x) {
    const double y = b0_ * x + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double b0_, b2_, a1_, a2_;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

void AddHarmonics(std::vector<double>& out, const std::vector<Harmonic>& hs,
                  double freq_scale, int sample_rate) {
  for (const auto& h : hs) {
    const double w = 2.0 * std::numbers::pi * h.frequency_hz * freq_scale /
                     sample_rate;
    for (size_t i = 0; i < out.size(); ++i) {
      out[i] += h.amplitude * std::sin(w * static_cast<double>(i));
    }
  }
}

void AddImpulseTrain(std::vector<double>& out, int sample_rate, Rng& rng) {
  // Clicks roughly every 100 ms with a 2 ms exponential tail.
  const size_t period = static_cast<size_t>(0.1 * sample_rate);
  const double tau = 0.002 * sample_rate;
  const size_t tail = static_cast<size_t>(5 * tau);
  size_t pos = rng.Below(period);
  while (pos < out.size()) {
    const double sign = rng.Uniform() < 0.5 ? -1.0 : 1.0;
    for (size_t k = 0; k < tail && pos + k < out.size(); ++k) {
      out[pos + k] += sign * 0.8 * std::exp(-double(k) / tau);
    }
    pos += period + rng.Below(period / 5 + 1);
  }
}

void AddBroadbandBursts(std::vector<double>& out, int sample_rate, Rng& rng) {
  // 200 ms bursts of 3 kHz band-limited noise, one per second on average.
  const size_t burst = static_cast<size_t>(0.2 * sample_rate);
  const size_t spacing = static_cast<size_t>(sample_rate);
  const double center = std::min(3000.0, 0.3 * sample_rate);
  size_t pos = rng.Below(spacing / 2 + 1);
  while (pos < out.size()) {
    BandPass filter(center, 1.0, sample_rate);
    for (size_t k = 0; k < burst && pos + k < out.size(); ++k) {
      out[pos + k] += 0.6 * filter.Process(rng.Normal());
    }
    pos += spacing / 2 + rng.Below(spacing);
  }
}

AudioClip RenderClip(const SynthSpec& spec, bool anomalous,
                     const std::string& tag) {
  const size_t n = static_cast<size_t>(
      std::llround(spec.duration_s * static_cast<double>(spec.sample_rate)));
  std::vector<double> acc(n, 0.0);
  Rng rng(DeriveSeed(spec.rng_seed, tag));
  const bool shifted = anomalous && spec.anomaly_kind == AnomalyKind::kFreqShift;
  AddHarmonics(acc, spec.base_harmonics, shifted ? spec.shift_factor : 1.0,
               spec.sample_rate);
  if (spec.noise_level > 0.0) {
    for (double& v : acc) v += spec.noise_level * rng.Normal();
  }
  if (anomalous && spec.anomaly_kind == AnomalyKind::kImpulseTrain) {
    AddImpulseTrain(acc, spec.sample_rate, rng);
  }
  if (anomalous && spec.anomaly_kind == AnomalyKind::kBroadbandBurst) {
    AddBroadbandBursts(acc, spec.sample_rate, rng);
  }
  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.source_id = "synth:" + tag;
  clip.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    clip.samples[i] = static_cast<float>(std::clamp(acc[i], -1.0, 1.0));
  }
  return clip;
}

}  // namespace

const char* LabelName(Label label) {
  return label == Label::kNormal ? "normal" : "anomalous";
}

Label ParseLabel(std::string_view name) {
  if (name == "normal" || name == "0") return Label::kNormal;
  if (name == "anomalous" || name == "abnormal" || name == "1") {
    return Label::kAnomalous;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown label '" + std::string(name) + "'");
}

void ValidateClip(const AudioClip& clip) {
  if (clip.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip '" + clip.source_id + "' has no samples");
  }
  if (clip.sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip '" + clip.source_id + "' has non-positive sample rate");
  }
  for (float s : clip.samples) {
    if (!std::isfinite(s) || s < -1.0f || s > 1.0f) {
      throw Error(ErrorCode::kInvalidArgument,
                  "clip '" + clip.source_id + "' has a sample outside [-1, 1]");
    }
  }
}

AudioClip ReadWav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    FormatFail(path, "bad RIFF/WAVE header");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(&bytes[pos]), 4);
    const uint32_t size = ReadU32(&bytes[pos + 4]);
    const size_t body = pos + 8;
    const size_t available = bytes.size() - body;
    if (id == "fmt ") {
      if (size < 16 || size > available) {
        FormatFail(path, "truncated 'fmt ' chunk");
      }
      format = ReadU16(&bytes[body]);
      channels = ReadU16(&bytes[body + 2]);
      rate = ReadU32(&bytes[body + 4]);
      bits = ReadU16(&bytes[body + 14]);
      if (format == kFormatExtensible) {
        if (size < 26) FormatFail(path, "truncated extensible 'fmt ' chunk");
        format = ReadU16(&bytes[body + 24]);  // first two bytes of SubFormat
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) FormatFail(path, "'data' chunk precedes 'fmt ' chunk");
      // Some writers leave the size at 0 or 0xFFFFFFFF when streaming; take
      // what is actually present. Any other short chunk is truncation.
      if (size != 0 && size != 0xFFFFFFFFu && size > available) {
        FormatFail(path, "'data' chunk truncated: declares " +
                             std::to_string(size) + " bytes, " +
                             std::to_string(available) + " present");
      }
      data = &bytes[body];
      data_size = std::min<size_t>(size, available);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) FormatFail(path, "missing 'fmt ' chunk");
  if (data == nullptr) FormatFail(path, "missing 'data' chunk");
  if (channels == 0) FormatFail(path, "'fmt ' chunk declares zero channels");
  if (rate == 0) FormatFail(path, "'fmt ' chunk declares zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                path.string() + ": unsupported encoding (format tag " +
                    std::to_string(format) + ", " + std::to_string(bits) +
                    " bits); only PCM16 and float32 are decoded");
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t frames = data_size / frame_bytes;
  if (frames == 0) FormatFail(path, "'data' chunk holds no sample frames");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.source_id = path.string();
  clip.samples.resize(frames);
  for (size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const uint8_t* p = data + f * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        sum += static_cast<int16_t>(ReadU16(p)) / 32768.0;
      } else {
        float v;
        const uint32_t raw = ReadU32(p);
        std::memcpy(&v, &raw, sizeof v);
        if (!std::isfinite(v)) FormatFail(path, "non-finite float sample");
        sum += std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
    }
    clip.samples[f] = static_cast<float>(sum / channels);
  }
  return clip;
}

void WriteWav(const fs::path& path, const AudioClip& clip,
              WavEncoding encoding) {
  ValidateClip(clip);
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint32_t data_bytes =
      static_cast<uint32_t>(clip.samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, pcm16 ? kFormatPcm : kFormatFloat);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<uint32_t>(clip.sample_rate) * (bits / 8));
  PutU16(out, bits / 8);
  PutU16(out, bits);
  out += "data";
  PutU32(out, data_bytes);
  for (float s : clip.samples) {
    if (pcm16) {
      const long q = std::clamp(std::lround(double(s) * 32768.0), -32768L,
                                32767L);
      PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    } else {
      uint32_t raw;
      std::memcpy(&raw, &s, sizeof raw);
      PutU32(out, raw);
    }
  }
  WriteFileAtomic(path, out);
}

size_t DatasetIndex::Count(Split split) const {
  return static_cast<size_t>(std::count_if(
      entries.begin(), entries.end(),
      [&](const DatasetEntry& e) { return e.split == split; }));
}

size_t DatasetIndex::Count(Split split, Label label) const {
  return static_cast<size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const DatasetEntry& e) {
        return e.split == split && e.label == label;
      }));
}

DatasetIndex IndexDataset(const fs::path& root, const IndexOptions& options) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::kIo, "dataset root " + root.string() +
                                    " is not a directory");
  }
  if (!(options.test_fraction >= 0.0 && options.test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "test fraction must lie in [0, 1)");
  }

  // Walk down from whatever level the caller pointed at.
  fs::path machine_dir;
  if (IsMachineDir(root)) {
    machine_dir = root;
  } else {
    // Descend through SNR and machine-type folders, e.g.
    // root/6_dB_fan/fan/id_06, until a level holds <id>/normal directories.
    fs::path type_dir = root;
    std::vector<fs::path> ids;
    for (int depth = 0; depth < 3; ++depth) {
      const std::vector<fs::path> level = Subdirectories(type_dir);
      std::copy_if(level.begin(), level.end(), std::back_inserter(ids),
                   IsMachineDir);
      if (!ids.empty() || level.empty()) break;
      const std::string& want = options.machine_type;
      auto exact = std::find_if(level.begin(), level.end(), [&](const auto& d) {
        return d.filename() == want;
      });
      if (!want.empty() && exact == level.end()) {
        std::vector<fs::path> tagged;
        std::copy_if(level.begin(), level.end(), std::back_inserter(tagged),
                     [&](const fs::path& d) {
                       const std::string n = d.filename().string();
                       return n.size() > want.size() &&
                              n.ends_with("_" + want);
                     });
        if (tagged.empty()) PickOne(level, want, "machine type", type_dir);
        type_dir = PickOne(tagged, "", "machine type", type_dir);
      } else {
        type_dir = PickOne(level, want, "machine type", type_dir);
      }
    }
    if (ids.empty()) {
      throw Error(ErrorCode::kEmptyDataset,
                  "no <id>/normal directories under " + type_dir.string());
    }
    machine_dir = PickOne(ids, options.machine_id, "machine id", type_dir);
  }

  DatasetIndex index;
  index.machine_id = machine_dir.filename().string();
  index.machine_type =
      fs::absolute(machine_dir).parent_path().filename().string();
  index.snr_tag = SnrTagFor(machine_dir);

  std::vector<fs::path> normals = WavFilesIn(machine_dir / "normal");
  if (normals.empty()) {
    throw Error(ErrorCode::kEmptyDataset,
                "no wav files found in " + (machine_dir / "normal").string());
  }
  const fs::path abnormal_dir = machine_dir / "abnormal";
  index.train_only = !fs::is_directory(abnormal_dir);

  Rng rng(DeriveSeed(options.seed, "dataset-split"));
  rng.Shuffle(std::span<fs::path>(normals));
  const size_t n_test =
      index.train_only
          ? 0
          : static_cast<size_t>(std::llround(options.test_fraction *
                                             double(normals.size())));
  for (size_t i = 0; i < normals.size(); ++i) {
    index.entries.push_back(
        {normals[i], Label::kNormal, i < n_test ? Split::kTest : Split::kTrain});
  }
  if (!index.train_only) {
    for (auto& p : WavFilesIn(abnormal_dir)) {
      index.entries.push_back({std::move(p), Label::kAnomalous, Split::kTest});
    }
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) {
              return a.path < b.path;
            });
  return index;
}

const char* AnomalyKindName(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kFreqShift: return "freq_shift";
    case AnomalyKind::kImpulseTrain: return "impulse_train";
    case AnomalyKind::kBroadbandBurst: return "broadband_burst";
  }
  return "?";
}

AnomalyKind ParseAnomalyKind(std::string_view name) {
  if (name == "freq_shift") return AnomalyKind::kFreqShift;
  if (name == "impulse_train") return AnomalyKind::kImpulseTrain;
  if (name == "broadband_burst") return AnomalyKind::kBroadbandBurst;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown anomaly kind '" + std::string(name) + "'");
}

void ValidateSynthSpec(const SynthSpec& spec) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidArgument, "synth spec: " + msg);
  };
  if (spec.sample_rate <= 0) fail("sample_rate must be positive");
  if (spec.n_normal_train < 0 || spec.n_normal_test < 0 ||
      spec.n_anomalous_test < 0) {
    fail("clip counts must be non-negative");
  }
  if (!(spec.duration_s > 0.0)) fail("duration_s must be positive");
  if (spec.base_harmonics.empty()) fail("at least one harmonic is required");
  const double nyquist = spec.sample_rate / 2.0;
  const double scale =
      spec.anomaly_kind == AnomalyKind::kFreqShift ? spec.shift_factor : 1.0;
  for (const auto& h : spec.base_harmonics) {
    if (!(h.frequency_hz > 0.0) || h.frequency_hz * scale >= nyquist) {
      fail("harmonic " + std::to_string(h.frequency_hz) +
           " Hz (after shift) is not below Nyquist");
    }
  }
  if (!(spec.noise_level >= 0.0)) fail("noise_level must be non-negative");
  if (spec.anomaly_kind == AnomalyKind::kFreqShift && spec.shift_factor < 1.3) {
    fail("shift_factor must be at least 1.3");
  }
}

SynthCorpus SynthesizeCorpus(const SynthSpec& spec) {
  ValidateSynthSpec(spec);
  SynthCorpus corpus;
  for (int i = 0; i < spec.n_normal_train; ++i) {
    corpus.train.push_back(
        RenderClip(spec, false, "normal_train_" + std::to_string(i)));
  }
  for (int i = 0; i < spec.n_normal_test; ++i) {
    corpus.test.push_back(
        {RenderClip(spec, false, "normal_test_" + std::to_string(i)),
         Label::kNormal});
  }
  for (int i = 0; i < spec.n_anomalous_test; ++i) {
    corpus.test.push_back(
        {RenderClip(spec, true, "anomalous_test_" + std::to_string(i)),
         Label::kAnomalous});
  }
  return corpus;
}

namespace {

// Shortest text that parses back to the same double.
std::string Shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string FormatSynthSpec(const SynthSpec& spec) {
  std::ostringstream out;
  out << "sample_rate = " << spec.sample_rate << "\n"
      << "n_normal_train = " << spec.n_normal_train << "\n"
      << "n_normal_test = " << spec.n_normal_test << "\n"
      << "n_anomalous_test = " << spec.n_anomalous_test << "\n"
      << "duration_s = " << Shortest(spec.duration_s) << "\n"
      << "base_harmonics = ";
  for (size_t i = 0; i < spec.base_harmonics.size(); ++i) {
    if (i) out << ", ";
    out << Shortest(spec.base_harmonics[i].frequency_hz) << ":"
        << Shortest(spec.base_harmonics[i].amplitude);
  }
  out << "\n"
      << "noise_level = " << Shortest(spec.noise_level) << "\n"
      << "anomaly_kind = " << AnomalyKindName(spec.anomaly_kind) << "\n"
      << "shift_factor = " << Shortest(spec.shift_factor) << "\n"
      << "rng_seed = " << spec.rng_seed << "\n";
  return out.str();
}

SynthSpec ParseSynthSpec(std::string_view text) {
  SynthSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kFormat, "synth spec line " +
                                          std::to_string(line_no) +
                                          ": expected 'key = value'");
    }
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    const std::string value = Trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "sample_rate") {
        spec.sample_rate = std::stoi(value);
      } else if (key == "n_normal_train") {
        spec.n_normal_train = std::stoi(value);
      } else if (key == "n_normal_test") {
        spec.n_normal_test = std::stoi(value);
      } else if (key == "n_anomalous_test") {
        spec.n_anomalous_test = std::stoi(value);
      } else if (key == "duration_s") {
        spec.duration_s = std::stod(value);
      } else if (key == "base_harmonics") {
        spec.base_harmonics.clear();
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) {
            throw Error(ErrorCode::kFormat,
                        "harmonic '" + Trim(item) + "' is not freq:amp");
          }
          spec.base_harmonics.push_back(
              {std::stod(item.substr(0, colon)),
               std::stod(item.substr(colon + 1))});
        }
      } else if (key == "noise_level") {
        spec.noise_level = std::stod(value);
      } else if (key == "anomaly_kind") {
        spec.anomaly_kind = ParseAnomalyKind(value);
      } else if (key == "shift_factor") {
        spec.shift_factor = std::stod(value);
      } else if (key == "rng_seed") {
        spec.rng_seed = std::stoull(value);
      } else {
        throw Error(ErrorCode::kFormat, "unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {  // stoi/stod failures
      throw Error(ErrorCode::kFormat, "synth spec line " +
                                          std::to_string(line_no) +
                                          ": bad value for '" + key + "'");
    }
  }
  ValidateSynthSpec(spec);
  return spec;
}

SynthSpec LoadSynthSpec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSynthSpec(ss.str());
}

}  // namespace outliernet
