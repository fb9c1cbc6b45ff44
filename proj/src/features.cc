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

#include "outliernet/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "outliernet/error.h"

namespace outliernet {

namespace {

// FFTW planning is not thread-safe, execution on distinct buffers is. Plans
// are created once per size under a lock and then shared read-only.
fftw_plan PlanFor(int n) {
  static std::mutex mu;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, plan);
  return plan;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

// Index into a signal of length n after reflection about both ends
// (edge samples are not repeated), valid for any offset.
size_t ReflectIndex(long i, size_t n) {
  if (n == 1) return 0;
  const long period = 2 * static_cast<long>(n - 1);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<size_t>(m < static_cast<long>(n) ? m : period - m);
}

}  // namespace

void ValidateFeatureConfig(const FeatureConfig& cfg) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidArgument, "feature config: " + msg);
  };
  if (cfg.n_fft < 2 || (cfg.n_fft & (cfg.n_fft - 1)) != 0) {
    fail("n_fft must be a power of two");
  }
  if (cfg.hop <= 0 || cfg.hop > cfg.n_fft) fail("hop must lie in (0, n_fft]");
  if (cfg.n_mels <= 0 || cfg.n_mels > cfg.Bins()) {
    fail("n_mels must lie in [1, n_fft/2 + 1]");
  }
  if (cfg.sample_rate <= 0) fail("sample_rate must be positive");
  if (cfg.f_min < 0.0 || cfg.EffectiveFMax() <= cfg.f_min) {
    fail("need 0 <= f_min < f_max");
  }
  if (!(cfg.log_floor > 0.0)) fail("log_floor must be positive");
}

size_t FrameCount(size_t n, const FeatureConfig& cfg) {
  const size_t hop = static_cast<size_t>(cfg.hop);
  if (cfg.center_pad) return n / hop + 1;
  const size_t nfft = static_cast<size_t>(cfg.n_fft);
  return n < nfft ? 0 : (n - nfft) / hop + 1;
}

std::vector<double> MakeWindow(const FeatureConfig& cfg) {
  std::vector<double> w(static_cast<size_t>(cfg.n_fft), 1.0);
  if (cfg.window == WindowKind::kHann) {
    for (size_t i = 0; i < w.size(); ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) /
                                  double(w.size()));
    }
  }
  return w;
}

Matrix StftPower(const AudioClip& clip, const FeatureConfig& cfg) {
  ValidateFeatureConfig(cfg);
  const size_t n = clip.samples.size();
  if (n < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip '" + clip.source_id + "' is empty");
  }
  const size_t frames = FrameCount(n, cfg);
  if (frames == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip '" + clip.source_id +
                    "' is shorter than one FFT window without center padding");
  }
  const size_t nfft = static_cast<size_t>(cfg.n_fft);
  const size_t bins = static_cast<size_t>(cfg.Bins());
  const long offset = cfg.center_pad ? -static_cast<long>(nfft / 2) : 0;
  const std::vector<double> window = MakeWindow(cfg);

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(nfft));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(bins));
  const fftw_plan plan = PlanFor(cfg.n_fft);

  Matrix power(frames, bins);
  for (size_t f = 0; f < frames; ++f) {
    const long start = offset + static_cast<long>(f * cfg.hop);
    for (size_t i = 0; i < nfft; ++i) {
      in.get()[i] =
          window[i] * clip.samples[ReflectIndex(start + long(i), n)];
    }
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0];
      const double im = out.get()[k][1];
      power(f, k) = re * re + im * im;
    }
  }
  return power;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Matrix MelFilterbank(const FeatureConfig& cfg, int sample_rate) {
  ValidateFeatureConfig(cfg);
  const size_t n_mels = static_cast<size_t>(cfg.n_mels);
  const size_t bins = static_cast<size_t>(cfg.Bins());
  const double f_max = cfg.f_max > 0.0 ? cfg.f_max : sample_rate / 2.0;
  const double mel_lo = HzToMel(cfg.f_min);
  const double mel_hi = HzToMel(f_max);

  // n_mels + 2 edges: filter m rises from edge m to edge m+1, falls to m+2.
  std::vector<double> edges(n_mels + 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * double(i) /
                                    double(n_mels + 1));
  }
  Matrix fb(n_mels, bins);
  for (size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    bool any = false;
    for (size_t k = 0; k < bins; ++k) {
      const double f = double(k) * sample_rate / double(cfg.n_fft);
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      const double w = std::max(0.0, std::min(up, down));
      fb(m, k) = w;
      any = any || w > 0.0;
    }
    if (!any) {
      throw Error(ErrorCode::kInvalidArgument,
                  "mel filter " + std::to_string(m) +
                      " covers no FFT bin; reduce n_mels or raise n_fft");
    }
  }
  return fb;
}

MelSpectrogram LogMel(const AudioClip& clip, const FeatureConfig& cfg) {
  if (clip.sample_rate != cfg.sample_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                "clip '" + clip.source_id + "' is " +
                    std::to_string(clip.sample_rate) + " Hz, pipeline expects " +
                    std::to_string(cfg.sample_rate) +
                    " Hz (resampling is not supported)");
  }
  const Matrix power = StftPower(clip, cfg);
  const Matrix fb = MelFilterbank(cfg, clip.sample_rate);

  MelSpectrogram spec;
  spec.source_id = clip.source_id;
  spec.values = Matrix(power.rows, fb.rows);
  for (size_t t = 0; t < power.rows; ++t) {
    const double* p = &power.data[t * power.cols];
    for (size_t m = 0; m < fb.rows; ++m) {
      const double* w = &fb.data[m * fb.cols];
      double acc = 0.0;
      for (size_t k = 0; k < fb.cols; ++k) acc += w[k] * p[k];
      spec.values(t, m) = std::log10(std::max(acc, cfg.log_floor));
    }
  }
  return spec;
}

std::vector<CropWindow> CropWindows(const MelSpectrogram& spec) {
  if (spec.frames() < kCropFrames) {
    throw Error(ErrorCode::kInvalidArgument,
                "spectrogram '" + spec.source_id + "' has " +
                    std::to_string(spec.frames()) + " frames; a crop needs " +
                    std::to_string(kCropFrames));
  }
  const size_t count = spec.frames() / kCropFrames;
  const size_t width = spec.n_mels();
  std::vector<CropWindow> crops(count);
  for (size_t c = 0; c < count; ++c) {
    crops[c].clip_ref = spec.source_id;
    crops[c].crop_index = c;
    crops[c].values = Matrix(kCropFrames, width);
    const auto first = spec.values.data.begin() +
                       static_cast<long>(c * kCropFrames * width);
    std::copy(first, first + static_cast<long>(kCropFrames * width),
              crops[c].values.data.begin());
  }
  return crops;
}

double CropDurationSeconds(const FeatureConfig& cfg, int sample_rate) {
  return double(kCropFrames) * cfg.hop / double(sample_rate);
}

}  // namespace outliernet
