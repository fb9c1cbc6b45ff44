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

#include "outliernet/anomaly.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "outliernet/error.h"
#include "outliernet/nn/network.h"
#include "outliernet/parallel.h"
#include "outliernet/rng.h"

namespace outliernet {

namespace {

void CheckStats(const NormStats& stats) {
  if (!(stats.max > stats.min) || !std::isfinite(stats.min) ||
      !std::isfinite(stats.max)) {
    throw Error(ErrorCode::kDegenerateStats,
                "normalization needs finite min < max (got " +
                    std::to_string(stats.min) + ", " +
                    std::to_string(stats.max) + ")");
  }
}

// Batch of the selected crops, already normalized.
nn::Tensor4<float> Gather(const nn::Tensor4<float>& all,
                          std::span<const size_t> idx) {
  const nn::Shape s = all.shape();
  const size_t per = s.sample_size();
  nn::Tensor4<float> batch({idx.size(), s.c, s.h, s.w});
  for (size_t b = 0; b < idx.size(); ++b) {
    std::copy_n(all.data() + idx[b] * per, per, batch.data() + b * per);
  }
  return batch;
}

double MeanReconstructionMse(const nn::Network<float>& net,
                             const nn::Tensor4<float>& data,
                             std::span<const size_t> idx, size_t batch) {
  double sum = 0.0;
  for (size_t start = 0; start < idx.size(); start += batch) {
    const auto chunk = idx.subspan(start, std::min(batch, idx.size() - start));
    const nn::Tensor4<float> x = Gather(data, chunk);
    const nn::Tensor4<float> y = net.Infer(x);
    sum += nn::MseLoss(y, x).loss * double(chunk.size());
  }
  return sum / double(idx.size());
}

}  // namespace

NormStats ComputeNormStats(std::span<const CropWindow> crops) {
  NormStats stats{std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (const auto& crop : crops) {
    for (double v : crop.values.data) {
      stats.min = std::min(stats.min, v);
      stats.max = std::max(stats.max, v);
    }
  }
  CheckStats(stats);
  return stats;
}

double Normalize(double value, const NormStats& stats) {
  CheckStats(stats);
  return std::clamp((value - stats.min) / (stats.max - stats.min), 0.0, 1.0);
}

double Denormalize(double value, const NormStats& stats) {
  CheckStats(stats);
  return stats.min + value * (stats.max - stats.min);
}

std::vector<CropWindow> NormalizeCrops(std::span<const CropWindow> crops,
                                       const NormStats& stats) {
  CheckStats(stats);
  std::vector<CropWindow> out(crops.begin(), crops.end());
  for (auto& crop : out) {
    for (double& v : crop.values.data) v = Normalize(v, stats);
  }
  return out;
}

nn::Tensor4<float> CropsToTensor(std::span<const CropWindow> crops,
                                 const NormStats& stats) {
  CheckStats(stats);
  if (crops.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no crops to stack");
  }
  const size_t h = kInputShape.h, w = kInputShape.w;
  nn::Tensor4<float> t({crops.size(), 1, h, w});
  const double scale = 1.0 / (stats.max - stats.min);
  for (size_t i = 0; i < crops.size(); ++i) {
    const Matrix& m = crops[i].values;
    if (m.rows != h || m.cols != w) {
      throw Error(ErrorCode::kShape,
                  "crop " + std::to_string(i) + " of '" + crops[i].clip_ref +
                      "' is " + std::to_string(m.rows) + "x" +
                      std::to_string(m.cols) + ", expected 32x128");
    }
    float* dst = t.plane(i, 0);
    for (size_t k = 0; k < h * w; ++k) {
      dst[k] = static_cast<float>(
          std::clamp((m.data[k] - stats.min) * scale, 0.0, 1.0));
    }
  }
  return t;
}

std::vector<CropWindow> ExtractCrops(std::span<const AudioClip> clips,
                                     const FeatureConfig& cfg, int workers) {
  std::vector<std::vector<CropWindow>> per_clip(clips.size());
  ParallelFor(clips.size(), workers, [&](size_t i) {
    per_clip[i] = CropWindows(LogMel(clips[i], cfg));
  });
  std::vector<CropWindow> all;
  for (auto& crops : per_clip) {
    std::move(crops.begin(), crops.end(), std::back_inserter(all));
  }
  return all;
}

void ValidateTrainConfig(const TrainConfig& cfg) {
  if (cfg.epochs_max <= 0 || cfg.batch_size <= 0 || !(cfg.lr > 0.0) ||
      cfg.patience <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "train config: epochs, batch size, lr and patience must be "
                "positive");
  }
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument,
                "train config: val_fraction must lie in (0, 0.5)");
  }
}

TrainResult Train(const ArchSpec& arch, std::span<const CropWindow> train_crops,
                  const TrainConfig& cfg) {
  ValidateTrainConfig(cfg);
  ValidateArch(arch);
  const size_t total = train_crops.size();
  if (total < size_t(cfg.batch_size)) {
    throw Error(ErrorCode::kInvalidArgument,
                "training needs at least batch_size (" +
                    std::to_string(cfg.batch_size) + ") crops, got " +
                    std::to_string(total));
  }

  const NormStats stats = ComputeNormStats(train_crops);
  const nn::Tensor4<float> data = CropsToTensor(train_crops, stats);

  std::vector<size_t> order(total);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng split_rng(DeriveSeed(cfg.seed, "val-split"));
  split_rng.Shuffle(std::span<size_t>(order));
  const size_t n_val = std::clamp<size_t>(
      size_t(std::llround(cfg.val_fraction * double(total))), 1, total - 1);
  std::vector<size_t> val_idx(order.begin(), order.begin() + long(n_val));
  std::vector<size_t> train_idx(order.begin() + long(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  nn::Network<float> net(arch.layers, arch.input, cfg.seed);
  nn::Adam<float> adam(nn::AdamConfig{cfg.lr}, net.params());
  Rng shuffle_rng(DeriveSeed(cfg.seed, "batch-order"));

  TrainResult result;
  TrainHistory& h = result.history;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<float> best_params = net.FlatParams();
  const size_t batch = size_t(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    shuffle_rng.Shuffle(std::span<size_t>(train_idx));
    double epoch_loss = 0.0;
    for (size_t start = 0; start < train_idx.size(); start += batch) {
      const auto chunk = std::span<const size_t>(train_idx).subspan(
          start, std::min(batch, train_idx.size() - start));
      const nn::Tensor4<float> x = Gather(data, chunk);
      const nn::Tensor4<float> y = net.Forward(x);
      const auto loss = nn::MseLoss(y, x);
      if (!std::isfinite(loss.loss)) {
        throw Error(ErrorCode::kTrainingDiverged,
                    "training diverged (non-finite loss) at epoch " +
                        std::to_string(epoch));
      }
      net.Backward(loss.grad);
      adam.Step(net.params());
      epoch_loss += loss.loss * double(chunk.size());
    }
    const double val = MeanReconstructionMse(net, data, val_idx, batch);
    if (!std::isfinite(val)) {
      throw Error(ErrorCode::kTrainingDiverged,
                  "training diverged (non-finite validation loss) at epoch " +
                      std::to_string(epoch));
    }
    h.train_mse.push_back(epoch_loss / double(train_idx.size()));
    h.val_mse.push_back(val);
    if (val < best_val) {
      best_val = val;
      h.best_epoch = epoch;
      best_params = net.FlatParams();
    } else if (epoch - h.best_epoch >= cfg.patience) {
      h.early_stopped = true;
      break;
    }
  }

  result.bundle.arch = arch;
  result.bundle.weights = std::move(best_params);
  result.bundle.norm = stats;
  return result;
}

AnomalyScore ScoreCrops(const nn::Network<float>& net, const NormStats& stats,
                        std::span<const CropWindow> crops,
                        Aggregation aggregation) {
  if (crops.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no crops to score");
  }
  const nn::Tensor4<float> x = CropsToTensor(crops, stats);
  const nn::Tensor4<float> y = net.Infer(x);
  AnomalyScore score;
  score.clip_id = crops.front().clip_ref;
  const size_t per = x.shape().sample_size();
  for (size_t i = 0; i < crops.size(); ++i) {
    double sum = 0.0;
    const float* a = x.data() + i * per;
    const float* b = y.data() + i * per;
    for (size_t k = 0; k < per; ++k) {
      const double d = double(b[k]) - double(a[k]);
      sum += d * d;
    }
    score.per_crop_mse.push_back(sum / double(per));
  }
  if (aggregation == Aggregation::kMax) {
    score.clip_score =
        *std::max_element(score.per_crop_mse.begin(), score.per_crop_mse.end());
  } else {
    score.clip_score = std::accumulate(score.per_crop_mse.begin(),
                                       score.per_crop_mse.end(), 0.0) /
                       double(score.per_crop_mse.size());
  }
  return score;
}

AnomalyScore ScoreClip(const ModelBundle& bundle, const AudioClip& clip,
                       const FeatureConfig& cfg, Aggregation aggregation) {
  const auto crops = CropWindows(LogMel(clip, cfg));
  AnomalyScore s = ScoreCrops(MakeNetwork(bundle), bundle.norm, crops,
                              aggregation);
  s.clip_id = clip.source_id;
  return s;
}

double ComputeAuc(std::span<const std::pair<double, Label>> scores) {
  std::vector<std::pair<double, Label>> sorted(scores.begin(), scores.end());
  for (const auto& [s, label] : sorted) {
    if (std::isnan(s)) {
      throw Error(ErrorCode::kInvalidArgument, "AUC input contains NaN");
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Twice the U statistic stays an exact integer: each (anomalous, normal)
  // pair contributes 2 when ordered correctly and 1 when tied.
  uint64_t twice_u = 0, normals_below = 0, n_normal = 0, n_anomalous = 0;
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    uint64_t tie_normal = 0, tie_anomalous = 0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      (sorted[j].second == Label::kNormal ? tie_normal : tie_anomalous)++;
      ++j;
    }
    twice_u += tie_anomalous * (2 * normals_below + tie_normal);
    normals_below += tie_normal;
    n_normal += tie_normal;
    n_anomalous += tie_anomalous;
    i = j;
  }
  if (n_normal == 0 || n_anomalous == 0) {
    throw Error(ErrorCode::kSingleClass,
                "AUC needs both normal and anomalous labels (got " +
                    std::to_string(n_normal) + " normal, " +
                    std::to_string(n_anomalous) + " anomalous)");
  }
  return double(twice_u) / (2.0 * double(n_normal) * double(n_anomalous));
}

EvalReport EvaluateCrops(const ModelBundle& bundle,
                         std::span<const LabeledCrops> test_set,
                         const EvalOptions& options) {
  const nn::Network<float> net = MakeNetwork(bundle);
  EvalReport report;
  report.scores.resize(test_set.size());
  ParallelFor(test_set.size(), options.workers, [&](size_t i) {
    report.scores[i] = ScoreCrops(net, bundle.norm, test_set[i].crops,
                                  options.aggregation);
    report.scores[i].clip_id = test_set[i].clip_id;
    report.scores[i].label = test_set[i].label;
  });
  std::vector<std::pair<double, Label>> clip_level, crop_level;
  for (const auto& s : report.scores) {
    (*s.label == Label::kNormal ? report.n_normal : report.n_anomalous)++;
    clip_level.emplace_back(s.clip_score, *s.label);
    for (double m : s.per_crop_mse) crop_level.emplace_back(m, *s.label);
  }
  report.auc = ComputeAuc(clip_level);
  report.crop_auc = ComputeAuc(crop_level);
  report.efficiency = Efficiency(bundle.arch);
  report.efficiency.model_bytes = BundleFileBytes(bundle);
  return report;
}

EvalReport Evaluate(const ModelBundle& bundle,
                    std::span<const LabeledClip> test_set,
                    const FeatureConfig& cfg, const EvalOptions& options) {
  size_t normals = 0;
  for (const auto& c : test_set) normals += c.label == Label::kNormal;
  if (normals == 0 || normals == test_set.size()) {
    throw Error(ErrorCode::kSingleClass,
                "evaluation needs a test set with both normal and anomalous "
                "clips (single-class input)");
  }
  std::vector<LabeledCrops> prepared(test_set.size());
  ParallelFor(test_set.size(), options.workers, [&](size_t i) {
    prepared[i] = {test_set[i].clip.source_id,
                   CropWindows(LogMel(test_set[i].clip, cfg)),
                   test_set[i].label};
  });
  return EvaluateCrops(bundle, prepared, options);
}

}  // namespace outliernet
