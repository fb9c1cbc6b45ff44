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

#ifndef OUTLIERNET_ANOMALY_H_
#define OUTLIERNET_ANOMALY_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "outliernet/arch.h"
#include "outliernet/audio_io.h"
#include "outliernet/features.h"
#include "outliernet/model_io.h"
#include "outliernet/nn/tensor.h"

namespace outliernet {

// --- Normalization ---------------------------------------------------------

NormStats ComputeNormStats(std::span<const CropWindow> crops);

// (v - min) / (max - min), clamped to [0, 1]. Throws kDegenerateStats when
// max <= min.
double Normalize(double value, const NormStats& stats);
double Denormalize(double value, const NormStats& stats);
std::vector<CropWindow> NormalizeCrops(std::span<const CropWindow> crops,
                                       const NormStats& stats);

// Stacks crops into an (n, 1, 32, 128) float tensor, normalizing with
// `stats`.
nn::Tensor4<float> CropsToTensor(std::span<const CropWindow> crops,
                                 const NormStats& stats);

// log-Mel crops of every clip, in clip order.
std::vector<CropWindow> ExtractCrops(std::span<const AudioClip> clips,
                                     const FeatureConfig& cfg, int workers = 1);

// --- Training --------------------------------------------------------------

struct TrainConfig {
  int epochs_max = 200;
  int batch_size = 64;
  double lr = 1e-3;
  // Stop after this many epochs without a new best validation MSE.
  int patience = 10;
  double val_fraction = 0.1;
  uint64_t seed = 0;
};

void ValidateTrainConfig(const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> train_mse;  // per epoch, mean over training crops
  std::vector<double> val_mse;    // per epoch
  int best_epoch = -1;            // 0-based; weights of this epoch are kept
  bool early_stopped = false;
};

struct TrainResult {
  ModelBundle bundle;
  TrainHistory history;
};

// Fits the autoencoder to normal crops only, keeping the weights of the
// epoch with the lowest validation MSE. Deterministic for a fixed config.
TrainResult Train(const ArchSpec& arch, std::span<const CropWindow> train_crops,
                  const TrainConfig& cfg);

// --- Scoring ---------------------------------------------------------------

enum class Aggregation { kMax, kMean };

struct AnomalyScore {
  std::string clip_id;
  std::vector<double> per_crop_mse;
  double clip_score = 0.0;
  std::optional<Label> label;
};

AnomalyScore ScoreCrops(const nn::Network<float>& net, const NormStats& stats,
                        std::span<const CropWindow> crops,
                        Aggregation aggregation = Aggregation::kMax);

AnomalyScore ScoreClip(const ModelBundle& bundle, const AudioClip& clip,
                       const FeatureConfig& cfg,
                       Aggregation aggregation = Aggregation::kMax);

// Probability that a random anomalous score exceeds a random normal score,
// ties counting one half (Mann-Whitney U / (n_a * n_n)). Throws kSingleClass
// unless both labels are present.
double ComputeAuc(std::span<const std::pair<double, Label>> scores);

// --- Evaluation ------------------------------------------------------------

struct MachineTag {
  std::string type;
  std::string id;
  std::string snr;
};

struct EvalReport {
  double auc = 0.0;
  double crop_auc = 0.0;  // diagnostic: every crop scored with its clip label
  size_t n_normal = 0;
  size_t n_anomalous = 0;
  std::vector<AnomalyScore> scores;
  EfficiencyReport efficiency;
  MachineTag machine;
};

struct EvalOptions {
  Aggregation aggregation = Aggregation::kMax;
  int workers = 1;
};

EvalReport Evaluate(const ModelBundle& bundle,
                    std::span<const LabeledClip> test_set,
                    const FeatureConfig& cfg, const EvalOptions& options = {});

// Same as Evaluate for clips that were already cut into crops.
struct LabeledCrops {
  std::string clip_id;
  std::vector<CropWindow> crops;
  Label label;
};

EvalReport EvaluateCrops(const ModelBundle& bundle,
                         std::span<const LabeledCrops> test_set,
                         const EvalOptions& options = {});

}  // namespace outliernet

#endif  // OUTLIERNET_ANOMALY_H_
