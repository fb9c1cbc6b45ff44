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

#include "outliernet/nn/layers.h"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "outliernet/error.h"
#include "outliernet/rng.h"

namespace outliernet::nn {

template <typename T>
Tensor4<T>::Tensor4(Shape shape, std::vector<T> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error(ErrorCode::kShape, "tensor buffer of " +
                                       std::to_string(data_.size()) +
                                       " values does not match shape " +
                                       shape_.ToString());
  }
}

template <typename T>
Tensor4<T> Tensor4<T>::Reshaped(Shape shape) const& {
  return Tensor4<T>(shape, data_);
}

template <typename T>
Tensor4<T> Tensor4<T>::Reshaped(Shape shape) && {
  return Tensor4<T>(shape, std::move(data_));
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void ShapeFail(const LayerKind& layer, int index,
                            const std::string& expected, const Shape& actual) {
  std::string where = index >= 0 ? "layer " + std::to_string(index) + " (" +
                                       LayerName(layer) + ")"
                                 : LayerName(layer);
  throw Error(ErrorCode::kShape, where + ": expected input " + expected +
                                     ", got " + actual.ToString());
}

// Geometry of one 2-D cross-correlation with a 3x3 kernel.
struct Plane {
  size_t ih, iw, oh, ow;
  long stride, pad;

  // Output columns [lo, hi) whose tap `k` lands inside the input row.
  void Cols(long k, size_t& lo, size_t& hi) const {
    RangeFor(k, iw, ow, lo, hi);
  }
  void Rows(long k, size_t& lo, size_t& hi) const {
    RangeFor(k, ih, oh, lo, hi);
  }

 private:
  void RangeFor(long k, size_t in, size_t out, size_t& lo, size_t& hi) const {
    const long first = pad - k;  // need o*stride >= first
    const long last = long(in) - 1 + pad - k;  // need o*stride <= last
    lo = first <= 0 ? 0 : size_t((first + stride - 1) / stride);
    hi = last < 0 ? 0 : std::min(out, size_t(last / stride + 1));
    if (lo > hi) lo = hi;
  }
};

// Eight independent partial sums so the compiler can vectorize the
// reduction without reassociation flags.
template <typename T>
T Dot(const T* a, const T* b, size_t n) {
  T acc[8] = {};
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (size_t k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  }
  T s = 0;
  for (; i < n; ++i) s += a[i] * b[i];
  for (T v : acc) s += v;
  return s;
}

template <typename T>
T PlaneSum(const T* v, size_t n) {
  T acc[8] = {};
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (size_t k = 0; k < 8; ++k) acc[k] += v[i + k];
  }
  T s = 0;
  for (; i < n; ++i) s += v[i];
  for (T x : acc) s += x;
  return s;
}

// out += xcorr(in, kernel)
template <typename T>
void CorrAccumulate(T* out, const T* in, const T* kernel, const Plane& p) {
  for (long ky = 0; ky < kKernel; ++ky) {
    size_t y0, y1;
    p.Rows(ky, y0, y1);
    for (long kx = 0; kx < kKernel; ++kx) {
      const T w = kernel[ky * kKernel + kx];
      size_t x0, x1;
      p.Cols(kx, x0, x1);
      for (size_t oy = y0; oy < y1; ++oy) {
        const long base = (long(oy) * p.stride - p.pad + ky) * long(p.iw) +
                          (kx - p.pad);
        T* dst = out + oy * p.ow;
        if (p.stride == 1) {
          for (size_t ox = x0; ox < x1; ++ox) dst[ox] += w * in[base + long(ox)];
        } else {
          for (size_t ox = x0; ox < x1; ++ox) {
            dst[ox] += w * in[base + long(ox) * p.stride];
          }
        }
      }
    }
  }
}

// grad_in += transpose-xcorr(grad_out, kernel); grad_kernel += xcorr terms.
template <typename T>
void CorrBackward(const T* grad_out, const T* in, const T* kernel, T* grad_in,
                  T* grad_kernel, const Plane& p) {
  for (long ky = 0; ky < kKernel; ++ky) {
    size_t y0, y1;
    p.Rows(ky, y0, y1);
    for (long kx = 0; kx < kKernel; ++kx) {
      const T w = kernel[ky * kKernel + kx];
      size_t x0, x1;
      p.Cols(kx, x0, x1);
      T gk = 0;
      for (size_t oy = y0; oy < y1; ++oy) {
        const long base = (long(oy) * p.stride - p.pad + ky) * long(p.iw) +
                          (kx - p.pad);
        const T* g = grad_out + oy * p.ow;
        if (p.stride == 1 && x1 > x0) {
          const size_t len = x1 - x0;
          gk += Dot(g + x0, in + base + long(x0), len);
          T* gin = grad_in + base + long(x0);
          const T* gx = g + x0;
          for (size_t k = 0; k < len; ++k) gin[k] += w * gx[k];
        } else {
          for (size_t ox = x0; ox < x1; ++ox) {
            const long off = base + long(ox) * p.stride;
            gk += g[ox] * in[off];
            grad_in[off] += w * g[ox];
          }
        }
      }
      grad_kernel[ky * kKernel + kx] += gk;
    }
  }
}


Shape ConvShape(const Shape& in, size_t out_ch, int stride, int pad) {
  return {in.n, out_ch,
          size_t(ConvOutputSize(int(in.h), kKernel, stride, pad)),
          size_t(ConvOutputSize(int(in.w), kKernel, stride, pad))};
}

}  // namespace

std::string LayerName(const LayerKind& layer) {
  return std::visit(
      Overloaded{
          [](const Conv2d& l) {
            return "Conv2d(" + std::to_string(l.in_ch) + "->" +
                   std::to_string(l.out_ch) + ", s" + std::to_string(l.stride) +
                   ")";
          },
          [](const DepthwiseConv2d& l) {
            return "DepthwiseConv2d(" + std::to_string(l.channels) + ", s" +
                   std::to_string(l.stride) + ")";
          },
          [](const PointwiseConv2d& l) {
            return "PointwiseConv2d(" + std::to_string(l.in_ch) + "->" +
                   std::to_string(l.out_ch) + ")";
          },
          [](const Replicator& l) {
            return "Replicator(" + std::to_string(l.factor) + ")";
          },
          [](const Dense& l) {
            return "Dense(" + std::to_string(l.in_dim) + "->" +
                   std::to_string(l.out_dim) + ")";
          },
          [](const Activation& l) {
            switch (l.kind) {
              case ActivationKind::kReLU: return std::string("ReLU");
              case ActivationKind::kSigmoid: return std::string("Sigmoid");
              case ActivationKind::kLinear: return std::string("Linear");
            }
            return std::string("Activation");
          },
          [](const Flatten&) { return std::string("Flatten"); },
          [](const Reshape& l) {
            return "Reshape(" + std::to_string(l.c) + ", " +
                   std::to_string(l.h) + ", " + std::to_string(l.w) + ")";
          },
      },
      layer);
}

int ConvOutputSize(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

Shape OutputShape(const LayerKind& layer, const Shape& in, int layer_index) {
  auto check_spatial = [&](size_t channels, int stride, int pad) {
    if (in.c != channels || stride < 1 || pad < 0 ||
        ConvOutputSize(int(in.h), kKernel, stride, pad) < 1 ||
        ConvOutputSize(int(in.w), kKernel, stride, pad) < 1) {
      ShapeFail(layer, layer_index,
                "(n, " + std::to_string(channels) + ", h, w) with h, w >= " +
                    std::to_string(kKernel - 2 * pad),
                in);
    }
  };
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) {
            check_spatial(size_t(l.in_ch), l.stride, l.pad);
            return ConvShape(in, size_t(l.out_ch), l.stride, l.pad);
          },
          [&](const DepthwiseConv2d& l) {
            check_spatial(size_t(l.channels), l.stride, l.pad);
            return ConvShape(in, size_t(l.channels), l.stride, l.pad);
          },
          [&](const PointwiseConv2d& l) {
            if (in.c != size_t(l.in_ch)) {
              ShapeFail(layer, layer_index,
                        "(n, " + std::to_string(l.in_ch) + ", h, w)", in);
            }
            return Shape{in.n, size_t(l.out_ch), in.h, in.w};
          },
          [&](const Replicator& l) {
            if (l.factor < 1) ShapeFail(layer, layer_index, "factor >= 1", in);
            return Shape{in.n, in.c, in.h * size_t(l.factor),
                         in.w * size_t(l.factor)};
          },
          [&](const Dense& l) {
            if (in.sample_size() != size_t(l.in_dim)) {
              ShapeFail(layer, layer_index,
                        std::to_string(l.in_dim) + " values per sample", in);
            }
            return Shape{in.n, size_t(l.out_dim), 1, 1};
          },
          [&](const Activation&) { return in; },
          [&](const Flatten&) { return Shape{in.n, in.sample_size(), 1, 1}; },
          [&](const Reshape& l) {
            const size_t target = size_t(l.c) * size_t(l.h) * size_t(l.w);
            if (in.sample_size() != target) {
              ShapeFail(layer, layer_index,
                        std::to_string(target) + " values per sample", in);
            }
            return Shape{in.n, size_t(l.c), size_t(l.h), size_t(l.w)};
          },
      },
      layer);
}

size_t WeightCount(const LayerKind& layer) {
  return std::visit(
      Overloaded{
          [](const Conv2d& l) {
            return size_t(kKernel * kKernel) * size_t(l.in_ch) * size_t(l.out_ch);
          },
          [](const DepthwiseConv2d& l) {
            return size_t(kKernel * kKernel) * size_t(l.channels);
          },
          [](const PointwiseConv2d& l) {
            return size_t(l.in_ch) * size_t(l.out_ch);
          },
          [](const Dense& l) { return size_t(l.in_dim) * size_t(l.out_dim); },
          [](const auto&) { return size_t(0); },
      },
      layer);
}

size_t BiasCount(const LayerKind& layer) {
  return std::visit(
      Overloaded{
          [](const Conv2d& l) { return size_t(l.out_ch); },
          [](const DepthwiseConv2d& l) { return size_t(l.channels); },
          [](const PointwiseConv2d& l) { return size_t(l.out_ch); },
          [](const Dense& l) { return size_t(l.out_dim); },
          [](const auto&) { return size_t(0); },
      },
      layer);
}

size_t FanIn(const LayerKind& layer) {
  return std::visit(
      Overloaded{
          [](const Conv2d& l) { return size_t(kKernel * kKernel * l.in_ch); },
          [](const DepthwiseConv2d&) { return size_t(kKernel * kKernel); },
          [](const PointwiseConv2d& l) { return size_t(l.in_ch); },
          [](const Dense& l) { return size_t(l.in_dim); },
          [](const auto&) { return size_t(0); },
      },
      layer);
}

template <typename T>
void LayerParams<T>::ZeroGrad() {
  grad_weights.assign(weights.size(), T(0));
  grad_bias.assign(bias.size(), T(0));
}

template <typename T>
LayerParams<T> AllocateParams(const LayerKind& layer) {
  LayerParams<T> p;
  p.weights.assign(WeightCount(layer), T(0));
  p.bias.assign(BiasCount(layer), T(0));
  p.grad_weights.assign(p.weights.size(), T(0));
  p.grad_bias.assign(p.bias.size(), T(0));
  return p;
}

template <typename T>
std::vector<LayerParams<T>> SeededInit(const std::vector<LayerKind>& layers,
                                       uint64_t seed) {
  Rng rng(DeriveSeed(seed, "init"));
  std::vector<LayerParams<T>> params;
  params.reserve(layers.size());
  for (const auto& layer : layers) {
    LayerParams<T> p = AllocateParams<T>(layer);
    if (const size_t fan_in = FanIn(layer); fan_in > 0) {
      const double bound = std::sqrt(6.0 / double(fan_in));
      for (T& w : p.weights) w = static_cast<T>(rng.Uniform(-bound, bound));
    }
    params.push_back(std::move(p));
  }
  return params;
}

template <typename T>
Tensor4<T> Forward(const LayerKind& layer, const LayerParams<T>& params,
                   const Tensor4<T>& x, int layer_index) {
  const Shape in = x.shape();
  const Shape out_shape = OutputShape(layer, in, layer_index);
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) {
            Tensor4<T> y(out_shape);
            const Plane p{in.h, in.w, out_shape.h, out_shape.w, l.stride, l.pad};
            const size_t plane = out_shape.h * out_shape.w;
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t o = 0; o < out_shape.c; ++o) {
                T* dst = y.plane(n, o);
                std::fill(dst, dst + plane, params.bias[o]);
                for (size_t i = 0; i < in.c; ++i) {
                  CorrAccumulate(
                      dst, x.plane(n, i),
                      &params.weights[(o * in.c + i) * kKernel * kKernel], p);
                }
              }
            }
            return y;
          },
          [&](const DepthwiseConv2d& l) {
            Tensor4<T> y(out_shape);
            const Plane p{in.h, in.w, out_shape.h, out_shape.w, l.stride, l.pad};
            const size_t plane = out_shape.h * out_shape.w;
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t c = 0; c < in.c; ++c) {
                T* dst = y.plane(n, c);
                std::fill(dst, dst + plane, params.bias[c]);
                CorrAccumulate(dst, x.plane(n, c),
                               &params.weights[c * kKernel * kKernel], p);
              }
            }
            return y;
          },
          [&](const PointwiseConv2d&) {
            Tensor4<T> y(out_shape);
            const size_t plane = in.h * in.w;
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t o = 0; o < out_shape.c; ++o) {
                T* dst = y.plane(n, o);
                std::fill(dst, dst + plane, params.bias[o]);
                for (size_t i = 0; i < in.c; ++i) {
                  const T w = params.weights[o * in.c + i];
                  const T* src = x.plane(n, i);
                  for (size_t k = 0; k < plane; ++k) dst[k] += w * src[k];
                }
              }
            }
            return y;
          },
          [&](const Replicator& l) {
            Tensor4<T> y(out_shape);
            const size_t f = size_t(l.factor);
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t c = 0; c < in.c; ++c) {
                const T* src = x.plane(n, c);
                T* dst = y.plane(n, c);
                for (size_t oy = 0; oy < out_shape.h; ++oy) {
                  const T* row = src + (oy / f) * in.w;
                  T* out_row = dst + oy * out_shape.w;
                  for (size_t ox = 0; ox < out_shape.w; ++ox) {
                    out_row[ox] = row[ox / f];
                  }
                }
              }
            }
            return y;
          },
          [&](const Dense& l) {
            Tensor4<T> y(out_shape);
            const size_t d_in = size_t(l.in_dim);
            for (size_t n = 0; n < in.n; ++n) {
              const T* src = x.data() + n * d_in;
              for (size_t o = 0; o < size_t(l.out_dim); ++o) {
                const T* w = &params.weights[o * d_in];
                T acc = params.bias[o];
                for (size_t i = 0; i < d_in; ++i) acc += w[i] * src[i];
                y.data()[n * size_t(l.out_dim) + o] = acc;
              }
            }
            return y;
          },
          [&](const Activation& l) {
            Tensor4<T> y(out_shape);
            const T* src = x.data();
            T* dst = y.data();
            const size_t count = x.size();
            switch (l.kind) {
              case ActivationKind::kReLU:
                for (size_t i = 0; i < count; ++i) {
                  dst[i] = src[i] > T(0) ? src[i] : T(0);
                }
                break;
              case ActivationKind::kSigmoid:
                for (size_t i = 0; i < count; ++i) {
                  dst[i] = T(1) / (T(1) + std::exp(-src[i]));
                }
                break;
              case ActivationKind::kLinear:
                std::copy(src, src + count, dst);
                break;
            }
            return y;
          },
          [&](const Flatten&) { return x.Reshaped(out_shape); },
          [&](const Reshape&) { return x.Reshaped(out_shape); },
      },
      layer);
}

template <typename T>
Tensor4<T> Backward(const LayerKind& layer, LayerParams<T>& params,
                    const Tensor4<T>& x, const Tensor4<T>& grad_out,
                    int layer_index) {
  const Shape in = x.shape();
  const Shape out_shape = OutputShape(layer, in, layer_index);
  if (grad_out.shape() != out_shape) {
    throw Error(ErrorCode::kShape,
                "layer " + std::to_string(layer_index) + " (" +
                    LayerName(layer) + "): gradient shape " +
                    grad_out.shape().ToString() + " does not match output " +
                    out_shape.ToString());
  }
  return std::visit(
      Overloaded{
          [&](const Conv2d& l) {
            Tensor4<T> gx(in);
            const Plane p{in.h, in.w, out_shape.h, out_shape.w, l.stride, l.pad};
            const size_t plane = out_shape.h * out_shape.w;
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t o = 0; o < out_shape.c; ++o) {
                const T* g = grad_out.plane(n, o);
                params.grad_bias[o] += PlaneSum(g, plane);
                for (size_t i = 0; i < in.c; ++i) {
                  const size_t k = (o * in.c + i) * kKernel * kKernel;
                  CorrBackward(g, x.plane(n, i), &params.weights[k],
                               gx.plane(n, i), &params.grad_weights[k], p);
                }
              }
            }
            return gx;
          },
          [&](const DepthwiseConv2d& l) {
            Tensor4<T> gx(in);
            const Plane p{in.h, in.w, out_shape.h, out_shape.w, l.stride, l.pad};
            const size_t plane = out_shape.h * out_shape.w;
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t c = 0; c < in.c; ++c) {
                const T* g = grad_out.plane(n, c);
                params.grad_bias[c] += PlaneSum(g, plane);
                const size_t k = c * kKernel * kKernel;
                CorrBackward(g, x.plane(n, c), &params.weights[k],
                             gx.plane(n, c), &params.grad_weights[k], p);
              }
            }
            return gx;
          },
          [&](const PointwiseConv2d&) {
            Tensor4<T> gx(in);
            const size_t plane = in.h * in.w;
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t o = 0; o < out_shape.c; ++o) {
                const T* g = grad_out.plane(n, o);
                params.grad_bias[o] += PlaneSum(g, plane);
                for (size_t i = 0; i < in.c; ++i) {
                  const T* src = x.plane(n, i);
                  T* gin = gx.plane(n, i);
                  const T w = params.weights[o * in.c + i];
                  for (size_t k = 0; k < plane; ++k) gin[k] += w * g[k];
                  params.grad_weights[o * in.c + i] += Dot(g, src, plane);
                }
              }
            }
            return gx;
          },
          [&](const Replicator& l) {
            Tensor4<T> gx(in);
            const size_t f = size_t(l.factor);
            for (size_t n = 0; n < in.n; ++n) {
              for (size_t c = 0; c < in.c; ++c) {
                const T* g = grad_out.plane(n, c);
                T* dst = gx.plane(n, c);
                for (size_t oy = 0; oy < out_shape.h; ++oy) {
                  T* row = dst + (oy / f) * in.w;
                  const T* g_row = g + oy * out_shape.w;
                  for (size_t ox = 0; ox < out_shape.w; ++ox) {
                    row[ox / f] += g_row[ox];
                  }
                }
              }
            }
            return gx;
          },
          [&](const Dense& l) {
            Tensor4<T> gx(in);
            const size_t d_in = size_t(l.in_dim);
            const size_t d_out = size_t(l.out_dim);
            for (size_t n = 0; n < in.n; ++n) {
              const T* src = x.data() + n * d_in;
              T* gin = gx.data() + n * d_in;
              for (size_t o = 0; o < d_out; ++o) {
                const T g = grad_out.data()[n * d_out + o];
                params.grad_bias[o] += g;
                const T* w = &params.weights[o * d_in];
                T* gw = &params.grad_weights[o * d_in];
                for (size_t i = 0; i < d_in; ++i) {
                  gw[i] += g * src[i];
                  gin[i] += w[i] * g;
                }
              }
            }
            return gx;
          },
          [&](const Activation& l) {
            Tensor4<T> gx(in);
            const T* src = x.data();
            const T* g = grad_out.data();
            T* dst = gx.data();
            const size_t count = x.size();
            switch (l.kind) {
              case ActivationKind::kReLU:
                for (size_t i = 0; i < count; ++i) {
                  dst[i] = src[i] > T(0) ? g[i] : T(0);
                }
                break;
              case ActivationKind::kSigmoid:
                for (size_t i = 0; i < count; ++i) {
                  const T s = T(1) / (T(1) + std::exp(-src[i]));
                  dst[i] = g[i] * s * (T(1) - s);
                }
                break;
              case ActivationKind::kLinear:
                std::copy(g, g + count, dst);
                break;
            }
            return gx;
          },
          [&](const Flatten&) { return grad_out.Reshaped(in); },
          [&](const Reshape&) { return grad_out.Reshaped(in); },
      },
      layer);
}

#define OUTLIERNET_INSTANTIATE_LAYERS(T)                                      \
  template class Tensor4<T>;                                                  \
  template struct LayerParams<T>;                                             \
  template LayerParams<T> AllocateParams<T>(const LayerKind&);                \
  template std::vector<LayerParams<T>> SeededInit<T>(                         \
      const std::vector<LayerKind>&, uint64_t);                               \
  template Tensor4<T> Forward<T>(const LayerKind&, const LayerParams<T>&,     \
                                 const Tensor4<T>&, int);                     \
  template Tensor4<T> Backward<T>(const LayerKind&, LayerParams<T>&,          \
                                  const Tensor4<T>&, const Tensor4<T>&, int);

OUTLIERNET_INSTANTIATE_LAYERS(float)
OUTLIERNET_INSTANTIATE_LAYERS(double)

#undef OUTLIERNET_INSTANTIATE_LAYERS

}  // namespace outliernet::nn
