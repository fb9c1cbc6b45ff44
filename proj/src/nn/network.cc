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

#include "outliernet/nn/network.h"

#include <algorithm>
#include <cmath>

#include "outliernet/error.h"

namespace outliernet::nn {

Shape InferShapes(const std::vector<LayerKind>& layers, const Shape& input) {
  Shape s = input;
  for (size_t i = 0; i < layers.size(); ++i) {
    s = OutputShape(layers[i], s, static_cast<int>(i));
  }
  return s;
}

template <typename T>
Network<T>::Network(std::vector<LayerKind> layers, Shape sample_shape,
                    uint64_t seed)
    : layers_(std::move(layers)), sample_shape_(sample_shape) {
  sample_shape_.n = 1;
  InferShapes(layers_, sample_shape_);
  params_ = SeededInit<T>(layers_, seed);
}

template <typename T>
Network<T>::Network(std::vector<LayerKind> layers, Shape sample_shape,
                    std::vector<LayerParams<T>> params)
    : layers_(std::move(layers)),
      sample_shape_(sample_shape),
      params_(std::move(params)) {
  sample_shape_.n = 1;
  InferShapes(layers_, sample_shape_);
  if (params_.size() != layers_.size()) {
    throw Error(ErrorCode::kWeightCountMismatch,
                "parameter list has " + std::to_string(params_.size()) +
                    " entries for " + std::to_string(layers_.size()) +
                    " layers");
  }
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (params_[i].weights.size() != WeightCount(layers_[i]) ||
        params_[i].bias.size() != BiasCount(layers_[i])) {
      throw Error(ErrorCode::kWeightCountMismatch,
                  "layer " + std::to_string(i) + " (" + LayerName(layers_[i]) +
                      ") has wrongly sized parameters");
    }
    params_[i].grad_weights.assign(params_[i].weights.size(), T(0));
    params_[i].grad_bias.assign(params_[i].bias.size(), T(0));
  }
}

template <typename T>
void Network<T>::CheckInput(const Tensor4<T>& x) const {
  const Shape& s = x.shape();
  if (s.c != sample_shape_.c || s.h != sample_shape_.h ||
      s.w != sample_shape_.w || s.n == 0) {
    throw Error(ErrorCode::kShape,
                "network input " + s.ToString() + " does not match (n, " +
                    std::to_string(sample_shape_.c) + ", " +
                    std::to_string(sample_shape_.h) + ", " +
                    std::to_string(sample_shape_.w) + ")");
  }
}

template <typename T>
Tensor4<T> Network<T>::Forward(const Tensor4<T>& x) {
  CheckInput(x);
  inputs_.resize(layers_.size());
  Tensor4<T> cur = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    Tensor4<T> next = nn::Forward(layers_[i], params_[i], cur, int(i));
    inputs_[i] = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

template <typename T>
Tensor4<T> Network<T>::Backward(const Tensor4<T>& grad_out) {
  if (inputs_.size() != layers_.size() ||
      (!layers_.empty() && inputs_.front().size() == 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "Backward() called without a preceding Forward()");
  }
  Tensor4<T> g = grad_out;
  for (size_t i = layers_.size(); i-- > 0;) {
    g = nn::Backward(layers_[i], params_[i], inputs_[i], g, int(i));
  }
  inputs_.clear();
  return g;
}

template <typename T>
Tensor4<T> Network<T>::Infer(const Tensor4<T>& x) const {
  CheckInput(x);
  Tensor4<T> cur = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    cur = nn::Forward(layers_[i], params_[i], cur, int(i));
  }
  return cur;
}

template <typename T>
void Network<T>::ZeroGrad() {
  for (auto& p : params_) p.ZeroGrad();
}

template <typename T>
size_t Network<T>::ParamCount() const {
  size_t total = 0;
  for (const auto& p : params_) total += p.weights.size() + p.bias.size();
  return total;
}

template <typename T>
std::vector<T> Network<T>::FlatParams() const {
  std::vector<T> flat;
  flat.reserve(ParamCount());
  for (const auto& p : params_) {
    flat.insert(flat.end(), p.weights.begin(), p.weights.end());
    flat.insert(flat.end(), p.bias.begin(), p.bias.end());
  }
  return flat;
}

template <typename T>
void Network<T>::SetFlatParams(std::span<const T> flat) {
  if (flat.size() != ParamCount()) {
    throw Error(ErrorCode::kWeightCountMismatch,
                "expected " + std::to_string(ParamCount()) + " weights, got " +
                    std::to_string(flat.size()));
  }
  auto it = flat.begin();
  for (auto& p : params_) {
    std::copy(it, it + long(p.weights.size()), p.weights.begin());
    it += long(p.weights.size());
    std::copy(it, it + long(p.bias.size()), p.bias.begin());
    it += long(p.bias.size());
  }
}

template <typename T>
LossResult<T> MseLoss(const Tensor4<T>& pred, const Tensor4<T>& target) {
  if (pred.shape() != target.shape()) {
    throw Error(ErrorCode::kShape, "mse: prediction " +
                                       pred.shape().ToString() +
                                       " vs target " +
                                       target.shape().ToString());
  }
  LossResult<T> r;
  r.grad = Tensor4<T>(pred.shape());
  const size_t n = pred.size();
  const T scale = T(2) / T(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const T d = pred.data()[i] - target.data()[i];
    sum += double(d) * double(d);
    r.grad.data()[i] = scale * d;
  }
  r.loss = sum / double(n);
  return r;
}

template <typename T>
Adam<T>::Adam(AdamConfig config, const std::vector<LayerParams<T>>& params)
    : config_(config) {
  moments_.reserve(params.size());
  for (const auto& p : params) {
    moments_.push_back({std::vector<double>(p.weights.size(), 0.0),
                        std::vector<double>(p.weights.size(), 0.0),
                        std::vector<double>(p.bias.size(), 0.0),
                        std::vector<double>(p.bias.size(), 0.0)});
  }
}

template <typename T>
void Adam<T>::Step(std::vector<LayerParams<T>>& params) {
  if (params.size() != moments_.size()) {
    throw Error(ErrorCode::kShape, "optimizer was built for " +
                                       std::to_string(moments_.size()) +
                                       " layers");
  }
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, double(step_));
  const double c2 = 1.0 - std::pow(b2, double(step_));
  auto update = [&](std::vector<T>& w, std::vector<T>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] = static_cast<T>(double(w[i]) -
                            config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
      g[i] = T(0);
    }
  };
  for (size_t l = 0; l < params.size(); ++l) {
    update(params[l].weights, params[l].grad_weights, moments_[l].m_w,
           moments_[l].v_w);
    update(params[l].bias, params[l].grad_bias, moments_[l].m_b,
           moments_[l].v_b);
  }
}

template class Network<float>;
template class Network<double>;
template LossResult<float> MseLoss(const Tensor4<float>&, const Tensor4<float>&);
template LossResult<double> MseLoss(const Tensor4<double>&,
                                    const Tensor4<double>&);
template class Adam<float>;
template class Adam<double>;

}  // namespace outliernet::nn
