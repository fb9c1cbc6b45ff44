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

#ifndef OUTLIERNET_FEATURES_H_
#define OUTLIERNET_FEATURES_H_

#include <cstddef>
#include <string>
#include <vector>

#include "outliernet/audio_io.h"

namespace outliernet {

// Dense row-major matrix of doubles.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }
};

enum class WindowKind { kHann, kRectangular };

struct FeatureConfig {
  int sample_rate = 16000;  // clips at any other rate are rejected
  int n_fft = 1024;
  int hop = 512;
  int n_mels = 128;
  WindowKind window = WindowKind::kHann;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;
  bool center_pad = true;

  double EffectiveFMax() const { return f_max > 0.0 ? f_max : sample_rate / 2.0; }
  int Bins() const { return n_fft / 2 + 1; }
};

void ValidateFeatureConfig(const FeatureConfig& cfg);

// Number of time frames the STFT yields for `n` samples.
size_t FrameCount(size_t n, const FeatureConfig& cfg);

// Periodic window of length cfg.n_fft.
std::vector<double> MakeWindow(const FeatureConfig& cfg);

// |DFT|^2 of windowed, hop-strided frames: frames x (n_fft/2 + 1). With
// center padding the signal is reflect-padded by n_fft/2 on both sides.
Matrix StftPower(const AudioClip& clip, const FeatureConfig& cfg);

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters, n_mels x (n_fft/2 + 1), peak weight 1.
Matrix MelFilterbank(const FeatureConfig& cfg, int sample_rate);

struct MelSpectrogram {
  Matrix values;  // frames x n_mels, log10 power
  std::string source_id;

  size_t frames() const { return values.rows; }
  size_t n_mels() const { return values.cols; }
};

MelSpectrogram LogMel(const AudioClip& clip, const FeatureConfig& cfg);

inline constexpr size_t kCropFrames = 32;

struct CropWindow {
  Matrix values;  // kCropFrames x n_mels
  std::string clip_ref;
  size_t crop_index = 0;
};

// floor(frames / 32) back-to-back windows starting at frame 0; the trailing
// remainder is dropped.
std::vector<CropWindow> CropWindows(const MelSpectrogram& spec);

double CropDurationSeconds(const FeatureConfig& cfg, int sample_rate);

}  // namespace outliernet

#endif  // OUTLIERNET_FEATURES_H_
