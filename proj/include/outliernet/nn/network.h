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

#ifndef OUTLIERNET_NN_NETWORK_H_
#define OUTLIERNET_NN_NETWORK_H_

#include <cstdint>
#include <span>
#include <vector>

#include "outliernet/nn/layers.h"
#include "outliernet/nn/tensor.h"

namespace outliernet::nn {

// Propagates a sample shape (n = 1) through `layers`, throwing kShape with
// the offending layer index on the first mismatch. Returns the output shape.
Shape InferShapes(const std::vector<LayerKind>& layers, const Shape& input);

// A sequential stack of layers with its parameters.
//
// Forward() records every layer input so that Backward() can be called
// once afterwards; the pair mutates the network and must not run
// concurrently. Infer() keeps no state and may be called from any number
// of threads on a network that is not being trained.
template <typename T>
class Network {
 public:
  Network(std::vector<LayerKind> layers, Shape sample_shape, uint64_t seed);
  Network(std::vector<LayerKind> layers, Shape sample_shape,
          std::vector<LayerParams<T>> params);

  const std::vector<LayerKind>& layers() const { return layers_; }
  std::vector<LayerParams<T>>& params() { return params_; }
  const std::vector<LayerParams<T>>& params() const { return params_; }
  const Shape& sample_shape() const { return sample_shape_; }

  Tensor4<T> Forward(const Tensor4<T>& x);
  Tensor4<T> Backward(const Tensor4<T>& grad_out);
  Tensor4<T> Infer(const Tensor4<T>& x) const;

  void ZeroGrad();
  size_t ParamCount() const;

  // Weights then bias of each layer, in layer order.
  std::vector<T> FlatParams() const;
  void SetFlatParams(std::span<const T> flat);

 private:
  void CheckInput(const Tensor4<T>& x) const;

  std::vector<LayerKind> layers_;
  Shape sample_shape_;
  std::vector<LayerParams<T>> params_;
  std::vector<Tensor4<T>> inputs_;  // per-layer inputs of the last Forward
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor4<T> grad;
};

// Mean of squared differences over all elements; grad = 2 (pred - target) / N.
template <typename T>
LossResult<T> MseLoss(const Tensor4<T>& pred, const Tensor4<T>& target);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam(AdamConfig config, const std::vector<LayerParams<T>>& params);

  // Applies one bias-corrected update from the accumulated gradients, then
  // zeroes them.
  void Step(std::vector<LayerParams<T>>& params);

  int64_t step() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m_w, v_w, m_b, v_b;
  };

  AdamConfig config_;
  std::vector<Moments> moments_;
  int64_t step_ = 0;
};

}  // namespace outliernet::nn

#endif  // OUTLIERNET_NN_NETWORK_H_
