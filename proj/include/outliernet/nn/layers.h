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

#ifndef OUTLIERNET_NN_LAYERS_H_
#define OUTLIERNET_NN_LAYERS_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "outliernet/nn/tensor.h"

namespace outliernet::nn {

// Every spatial convolution uses 3x3 kernels; pointwise is 1x1.
inline constexpr int kKernel = 3;

// Standard convolution (cross-correlation, no kernel flip).
struct Conv2d {
  int in_ch = 1;
  int out_ch = 1;
  int stride = 1;
  int pad = 1;
  bool operator==(const Conv2d&) const = default;
};

// One 3x3 filter per channel; channels never mix.
struct DepthwiseConv2d {
  int channels = 1;
  int stride = 1;
  int pad = 1;
  bool operator==(const DepthwiseConv2d&) const = default;
};

struct PointwiseConv2d {
  int in_ch = 1;
  int out_ch = 1;
  bool operator==(const PointwiseConv2d&) const = default;
};

// Nearest-neighbour upsampling: every pixel becomes a factor x factor block.
struct Replicator {
  int factor = 2;
  bool operator==(const Replicator&) const = default;
};

// Affine map on the flattened sample; output shape (n, out_dim, 1, 1).
struct Dense {
  int in_dim = 1;
  int out_dim = 1;
  bool operator==(const Dense&) const = default;
};

enum class ActivationKind { kReLU, kSigmoid, kLinear };

struct Activation {
  ActivationKind kind = ActivationKind::kReLU;
  bool operator==(const Activation&) const = default;
};

struct Flatten {
  bool operator==(const Flatten&) const = default;
};

struct Reshape {
  int c = 1, h = 1, w = 1;
  bool operator==(const Reshape&) const = default;
};

using LayerKind = std::variant<Conv2d, DepthwiseConv2d, PointwiseConv2d,
                               Replicator, Dense, Activation, Flatten, Reshape>;

std::string LayerName(const LayerKind& layer);

// Output shape for an input shape; throws kShape naming `layer_index` when
// the input does not fit the layer.
Shape OutputShape(const LayerKind& layer, const Shape& in, int layer_index = -1);

// out = floor((in + 2*pad - kernel) / stride) + 1
int ConvOutputSize(int in, int kernel, int stride, int pad);

size_t WeightCount(const LayerKind& layer);
size_t BiasCount(const LayerKind& layer);
inline size_t ParamCount(const LayerKind& layer) {
  return WeightCount(layer) + BiasCount(layer);
}
// Inputs feeding one output unit; 0 for parameter-free layers.
size_t FanIn(const LayerKind& layer);

template <typename T>
struct LayerParams {
  std::vector<T> weights;
  std::vector<T> bias;
  std::vector<T> grad_weights;
  std::vector<T> grad_bias;

  void ZeroGrad();
};

// Zero-filled parameter and gradient buffers sized for `layer`.
template <typename T>
LayerParams<T> AllocateParams(const LayerKind& layer);

// He-uniform weights (bound sqrt(6 / fan_in)) and zero biases, fully
// determined by `seed`.
template <typename T>
std::vector<LayerParams<T>> SeededInit(const std::vector<LayerKind>& layers,
                                       uint64_t seed);

template <typename T>
Tensor4<T> Forward(const LayerKind& layer, const LayerParams<T>& params,
                   const Tensor4<T>& x, int layer_index = -1);

// Returns dL/dx for the forward input `x` and accumulates dL/dW, dL/db into
// the gradient buffers of `params`.
template <typename T>
Tensor4<T> Backward(const LayerKind& layer, LayerParams<T>& params,
                    const Tensor4<T>& x, const Tensor4<T>& grad_out,
                    int layer_index = -1);

}  // namespace outliernet::nn

#endif  // OUTLIERNET_NN_LAYERS_H_
