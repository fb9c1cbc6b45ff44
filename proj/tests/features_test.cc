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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "outliernet/error.h"
#include "outliernet/rng.h"
#include "outliernet/tensor_file.h"
#include "support/test_support.h"

namespace outliernet {
namespace {

AudioClip Silence(size_t n, int rate = 16000) {
  return AudioClip{std::vector<float>(n, 0.0f), rate, "silence"};
}

AudioClip Noise(size_t n, uint64_t seed, double amp = 0.5) {
  Rng rng(seed);
  AudioClip clip{std::vector<float>(n), 16000, "noise"};
  for (auto& s : clip.samples) s = float(rng.Uniform(-amp, amp));
  return clip;
}

TEST(Stft, FrameCountLaw) {
  const FeatureConfig cfg;
  EXPECT_EQ(FrameCount(160000, cfg), 313u);
  for (size_t n : {1000u, 1023u, 1024u, 4096u, 16000u, 31999u}) {
    EXPECT_EQ(FrameCount(n, cfg), n / 512 + 1) << n;
    EXPECT_EQ(StftPower(Noise(n, n), cfg).rows, n / 512 + 1) << n;
  }
}

TEST(Stft, ZeroClipGivesZeroPower) {
  const Matrix p = StftPower(Silence(5000), FeatureConfig{});
  for (double v : p.data) EXPECT_EQ(v, 0.0);
}

TEST(Stft, MatchesDirectDftOnSingleFrames) {
  FeatureConfig cfg;
  cfg.center_pad = false;
  const auto window = testing::HannPeriodic(1024);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const AudioClip clip = Noise(1024, 100 + seed);
    const Matrix p = StftPower(clip, cfg);
    ASSERT_EQ(p.rows, 1u);
    ASSERT_EQ(p.cols, 513u);
    std::vector<double> frame(1024);
    for (size_t i = 0; i < 1024; ++i) frame[i] = clip.samples[i] * window[i];
    const auto oracle = testing::NaiveDftPower(frame);
    EXPECT_LT(testing::NormRelativeError(p.data, oracle), 1e-9);
  }
}

TEST(Stft, BinCenteredToneWithRectangularWindow) {
  FeatureConfig cfg;
  cfg.center_pad = false;
  cfg.window = WindowKind::kRectangular;
  const int k = 40;
  AudioClip clip{std::vector<float>(1024), 16000, "tone"};
  for (size_t i = 0; i < 1024; ++i) {
    clip.samples[i] = float(0.5 * std::cos(2 * std::numbers::pi * k * double(i) / 1024.0));
  }
  const Matrix p = StftPower(clip, cfg);
  std::vector<double> frame(clip.samples.begin(), clip.samples.end());
  const auto oracle = testing::NaiveDftPower(frame);
  double total = 0;
  for (double v : p.data) total += v;
  EXPECT_GT(p(0, k) / total, 0.999);
  EXPECT_LT(testing::NormRelativeError(p.data, oracle), 1e-9);
}

TEST(Mel, ScaleRoundTrip) {
  EXPECT_NEAR(HzToMel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  for (double hz : {0.0, 50.0, 440.0, 1000.0, 7999.0}) {
    EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9);
  }
}

TEST(Mel, FilterbankShapeAndRows) {
  const FeatureConfig cfg;
  const Matrix fb = MelFilterbank(cfg, 16000);
  ASSERT_EQ(fb.rows, 128u);
  ASSERT_EQ(fb.cols, 513u);
  for (size_t r = 0; r < fb.rows; ++r) {
    double peak = 0;
    for (size_t c = 0; c < fb.cols; ++c) {
      ASSERT_GE(fb(r, c), 0.0);
      peak = std::max(peak, fb(r, c));
    }
    EXPECT_GT(peak, 0.0) << "row " << r;
  }
}

TEST(Mel, CentersAreStrictlyIncreasingAndMatchTheMelGrid) {
  const FeatureConfig cfg;
  const Matrix fb = MelFilterbank(cfg, 16000);
  // Independent centers: 130 points equally spaced in mel between 0 and
  // Nyquist; filter m peaks at point m + 1.
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  size_t prev = 0;
  for (size_t m = 0; m < 128; ++m) {
    size_t arg = 0;
    for (size_t c = 1; c < fb.cols; ++c) {
      if (fb(m, c) > fb(m, arg)) arg = c;
    }
    if (m > 0) EXPECT_GE(arg, prev) << m;
    const double mel = top * double(m + 1) / 129.0;
    const double hz = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    EXPECT_LE(std::abs(double(arg) - hz * 1024.0 / 16000.0), 1.0) << m;
    prev = arg;
  }
  // Strictly increasing once the filters are wider than one bin.
  std::vector<double> centers;
  for (size_t m = 0; m < 128; ++m) {
    double num = 0, den = 0;
    for (size_t c = 0; c < fb.cols; ++c) {
      num += double(c) * fb(m, c);
      den += fb(m, c);
    }
    centers.push_back(num / den);
  }
  for (size_t m = 1; m < centers.size(); ++m) EXPECT_GT(centers[m], centers[m - 1]);
}

TEST(Mel, TooManyFiltersIsAnError) {
  FeatureConfig cfg;
  cfg.n_fft = 64;
  cfg.hop = 32;
  cfg.n_mels = 33;
  EXPECT_THROW(MelFilterbank(cfg, 16000), Error);
}

TEST(LogMel, TenSecondClipShape) {
  const MelSpectrogram m = LogMel(Noise(160000, 1), FeatureConfig{});
  EXPECT_EQ(m.frames(), 313u);
  EXPECT_EQ(m.n_mels(), 128u);
}

TEST(LogMel, SilenceHitsTheFloor) {
  const MelSpectrogram m = LogMel(Silence(16000), FeatureConfig{});
  for (double v : m.values.data) EXPECT_EQ(v, -10.0);
}

TEST(LogMel, ScalingByTenAddsTwo) {
  const AudioClip a = Noise(8000, 5, 0.05);
  AudioClip b = a;
  for (auto& s : b.samples) s *= 10.0f;
  const MelSpectrogram ma = LogMel(a, FeatureConfig{});
  const MelSpectrogram mb = LogMel(b, FeatureConfig{});
  for (size_t i = 0; i < ma.values.data.size(); ++i) {
    if (ma.values.data[i] > -9.0) {
      EXPECT_NEAR(mb.values.data[i] - ma.values.data[i], 2.0, 1e-5);
    }
    EXPECT_GE(mb.values.data[i], ma.values.data[i]);
  }
}

TEST(LogMel, RejectsOtherSampleRates) {
  try {
    LogMel(Silence(8000, 8000), FeatureConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSampleRateMismatch);
  }
}

MelSpectrogram Ramp(size_t frames) {
  MelSpectrogram m;
  m.values = Matrix(frames, 128);
  for (size_t i = 0; i < m.values.data.size(); ++i) m.values.data[i] = double(i);
  m.source_id = "ramp";
  return m;
}

TEST(Crops, NineFromThreeHundredThirteenFrames) {
  const MelSpectrogram m = Ramp(313);
  const auto crops = CropWindows(m);
  ASSERT_EQ(crops.size(), 9u);
  for (size_t k = 0; k < crops.size(); ++k) {
    EXPECT_EQ(crops[k].crop_index, k);
    EXPECT_EQ(crops[k].clip_ref, "ramp");
    ASSERT_EQ(crops[k].values.rows, 32u);
    ASSERT_EQ(crops[k].values.cols, 128u);
    for (size_t r = 0; r < 32; ++r) {
      for (size_t c = 0; c < 128; ++c) {
        ASSERT_EQ(crops[k].values(r, c), m.values(32 * k + r, c));
      }
    }
  }
  EXPECT_EQ(crops.size() * 32 + 25, 313u);
}

TEST(Crops, CountLawAndEdgeCases) {
  for (size_t frames : {32u, 33u, 63u, 64u, 100u, 313u}) {
    EXPECT_EQ(CropWindows(Ramp(frames)).size(), frames / 32) << frames;
  }
  const auto one = CropWindows(Ramp(32));
  EXPECT_EQ(one[0].values.data, Ramp(32).values.data);
  EXPECT_THROW(CropWindows(Ramp(31)), Error);
}

TEST(Crops, DurationSeconds) {
  FeatureConfig cfg;
  EXPECT_DOUBLE_EQ(CropDurationSeconds(cfg, 16000), 1.024);
  EXPECT_DOUBLE_EQ(CropDurationSeconds(cfg, 32000), 0.512);
  cfg.hop = 256;
  EXPECT_DOUBLE_EQ(CropDurationSeconds(cfg, 16000), 0.512);
}

TEST(MelsFile, RoundTripAndLayout) {
  testing::TempDir dir("mels");
  Matrix m(3, 4);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = double(i) - 0.5;
  WriteMelsFile(dir / "a.mels", m);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.mels"),
            kMelsHeaderBytes + 4 * m.data.size());
  const Matrix back = ReadMelsFile(dir / "a.mels");
  EXPECT_EQ(back.rows, 3u);
  EXPECT_EQ(back.cols, 4u);
  EXPECT_EQ(back.data, m.data);
}

TEST(Config, Validation) {
  FeatureConfig cfg;
  cfg.n_fft = 1000;
  EXPECT_THROW(ValidateFeatureConfig(cfg), Error);
  cfg = FeatureConfig{};
  cfg.hop = 2048;
  EXPECT_THROW(ValidateFeatureConfig(cfg), Error);
  cfg = FeatureConfig{};
  cfg.n_mels = 600;
  EXPECT_THROW(ValidateFeatureConfig(cfg), Error);
}

}  // namespace
}  // namespace outliernet
