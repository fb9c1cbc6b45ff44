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

#include <gtest/gtest.h>

#include <cmath>

#include "outliernet/error.h"
#include "outliernet/nn/layers.h"
#include "outliernet/nn/network.h"
#include "outliernet/rng.h"
#include "support/test_support.h"

namespace outliernet::nn {
namespace {

Tensor4<double> Filled(Shape s, double v) { return Tensor4<double>(s, v); }

TEST(Replicator, NearestNeighborUpsample) {
  const Tensor4<double> x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  const LayerParams<double> p;
  const auto y = Forward<double>(Replicator{2}, p, x);
  const std::vector<double> want = {1, 1, 2, 2, 1, 1, 2, 2,
                                    3, 3, 4, 4, 3, 3, 4, 4};
  EXPECT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), want);
}

TEST(Replicator, BackwardSumsBlocks) {
  LayerParams<double> p;
  const auto x = Filled({1, 1, 2, 2}, 0.0);
  const auto g = Backward<double>(Replicator{2}, p, x, Filled({1, 1, 4, 4}, 1.0));
  for (double v : g.values()) EXPECT_EQ(v, 4.0);
  // Forward then backward on a constant field scales by f^2.
  const auto y = Forward<double>(Replicator{3}, p, Filled({1, 2, 3, 3}, 0.5));
  const auto gb = Backward<double>(Replicator{3}, p, Filled({1, 2, 3, 3}, 0), y);
  for (double v : gb.values()) EXPECT_EQ(v, 4.5);
}

TEST(Depthwise, IdentityKernelPassesInputThrough) {
  const LayerKind layer = DepthwiseConv2d{3, 1, 1};
  auto p = AllocateParams<double>(layer);
  for (int c = 0; c < 3; ++c) p.weights[size_t(c) * 9 + 4] = 1.0;
  Rng rng(1);
  Tensor4<double> x({2, 3, 5, 7});
  for (auto& v : x.values()) v = rng.Normal();
  const auto y = Forward(layer, p, x);
  EXPECT_EQ(y.shape(), x.shape());
  for (size_t i = 0; i < x.values().size(); ++i) {
    EXPECT_EQ(y.values()[i], x.values()[i]);
  }
}

TEST(Depthwise, NeverMixesChannels) {
  const LayerKind layer = DepthwiseConv2d{4, 2, 1};
  const auto p = SeededInit<double>({layer}, 3)[0];
  Rng rng(2);
  Tensor4<double> x({1, 4, 8, 8});
  for (auto& v : x.values()) v = rng.Normal();
  const auto base = Forward(layer, p, x);
  Tensor4<double> perturbed = x;
  for (size_t h = 0; h < 8; ++h) {
    for (size_t w = 0; w < 8; ++w) perturbed.at(0, 1, h, w) += 1.0;
  }
  const auto y = Forward(layer, p, perturbed);
  for (size_t c = 0; c < 4; ++c) {
    bool changed = false;
    for (size_t h = 0; h < 4; ++h) {
      for (size_t w = 0; w < 4; ++w) {
        changed |= y.at(0, c, h, w) != base.at(0, c, h, w);
      }
    }
    EXPECT_EQ(changed, c == 1) << "channel " << c;
  }
}

// Six nested loops, no shortcuts.
Tensor4<double> NaiveConv(const Tensor4<double>& x, const std::vector<double>& w,
                          const std::vector<double>& b, int out_ch, int stride,
                          int pad) {
  const Shape s = x.shape();
  const int ho = (int(s.h) + 2 * pad - 3) / stride + 1;
  const int wo = (int(s.w) + 2 * pad - 3) / stride + 1;
  Tensor4<double> y({s.n, size_t(out_ch), size_t(ho), size_t(wo)});
  for (size_t n = 0; n < s.n; ++n)
    for (int o = 0; o < out_ch; ++o)
      for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j) {
          double acc = b[size_t(o)];
          for (size_t c = 0; c < s.c; ++c)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int yy = i * stride + ky - pad;
                const int xx = j * stride + kx - pad;
                if (yy < 0 || xx < 0 || yy >= int(s.h) || xx >= int(s.w)) continue;
                acc += w[((size_t(o) * s.c + c) * 3 + size_t(ky)) * 3 + size_t(kx)] *
                       x.at(n, c, size_t(yy), size_t(xx));
              }
          y.at(n, size_t(o), size_t(i), size_t(j)) = acc;
        }
  return y;
}

TEST(Conv2d, AllOnesKernelSums) {
  const LayerKind layer = Conv2d{1, 1, 1, 1};
  auto p = AllocateParams<double>(layer);
  std::fill(p.weights.begin(), p.weights.end(), 1.0);
  const auto y = Forward(layer, p, Filled({1, 1, 4, 4}, 1.0));
  const double want[4][4] = {{4, 6, 6, 4}, {6, 9, 9, 6}, {6, 9, 9, 6}, {4, 6, 6, 4}};
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = 0; j < 4; ++j) EXPECT_EQ(y.at(0, 0, i, j), want[i][j]);
}

TEST(Conv2d, MatchesNaiveLoops) {
  for (int stride : {1, 2}) {
    for (int pad : {0, 1}) {
      const LayerKind layer = Conv2d{3, 5, stride, pad};
      const auto p = SeededInit<double>({layer}, uint64_t(stride * 10 + pad))[0];
      std::vector<double> bias(5);
      for (size_t i = 0; i < 5; ++i) bias[i] = 0.1 * double(i);
      auto pb = p;
      pb.bias = bias;
      Rng rng(7);
      Tensor4<double> x({2, 3, 9, 11});
      for (auto& v : x.values()) v = rng.Normal();
      const auto y = Forward(layer, pb, x);
      const auto want = NaiveConv(x, pb.weights, bias, 5, stride, pad);
      ASSERT_EQ(y.shape(), want.shape());
      for (size_t i = 0; i < y.values().size(); ++i) {
        EXPECT_NEAR(y.values()[i], want.values()[i], 1e-12);
      }
    }
  }
}

TEST(Shapes, ConvOutputLawSweep) {
  for (int in = 1; in <= 20; ++in) {
    for (int pad = 0; pad <= 2; ++pad) {
      for (int stride = 1; stride <= 2; ++stride) {
        if (in + 2 * pad < 3) continue;
        const Shape out =
            OutputShape(DepthwiseConv2d{2, stride, pad}, Shape{1, 2, size_t(in), 5});
        EXPECT_EQ(int(out.h), (in + 2 * pad - 3) / stride + 1);
        EXPECT_EQ(ConvOutputSize(in, 3, stride, pad), (in + 2 * pad - 3) / stride + 1);
      }
    }
  }
}

TEST(Shapes, MismatchNamesLayerIndex) {
  try {
    OutputShape(PointwiseConv2d{4, 2}, Shape{1, 3, 8, 8}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
  }
  EXPECT_THROW(InferShapes({Dense{10, 2}}, Shape{1, 1, 3, 3}), Error);
}

TEST(Dense, ZeroWeightsGiveZeroInputGradient) {
  const LayerKind layer = Dense{6, 3};
  auto p = AllocateParams<double>(layer);
  Tensor4<double> x({2, 6, 1, 1}, 0.3);
  Tensor4<double> g({2, 3, 1, 1}, 1.7);
  const auto gi = Backward(layer, p, x, g);
  for (double v : gi.values()) EXPECT_EQ(v, 0.0);
}

// Gradient checks: 20 random tensors per layer kind.
struct GradCase {
  const char* name;
  LayerKind layer;
  Shape in;
  bool away_from_zero;
};

class GradCheck : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradCheck, CentralDifferences) {
  const GradCase& gc = GetParam();
  for (uint64_t trial = 0; trial < 20; ++trial) {
    const auto r = testing::CheckLayerGradients(gc.layer, gc.in, 1000 + trial,
                                                gc.away_from_zero);
    ASSERT_LT(r.worst(), 1e-4) << gc.name << " trial " << trial << " input "
                               << r.input_err << " weight " << r.weight_err
                               << " bias " << r.bias_err;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllLayers, GradCheck,
    ::testing::Values(
        GradCase{"conv_s1", Conv2d{3, 4, 1, 1}, {2, 3, 8, 8}, false},
        GradCase{"conv_s2", Conv2d{3, 2, 2, 1}, {2, 3, 8, 8}, false},
        GradCase{"dw_s1", DepthwiseConv2d{3, 1, 1}, {2, 3, 8, 8}, false},
        GradCase{"dw_s2", DepthwiseConv2d{3, 2, 1}, {2, 3, 8, 8}, false},
        GradCase{"pw", PointwiseConv2d{3, 5}, {2, 3, 8, 8}, false},
        GradCase{"rep", Replicator{2}, {2, 3, 8, 8}, false},
        GradCase{"dense", Dense{12, 7}, {2, 12, 1, 1}, false},
        GradCase{"relu", Activation{ActivationKind::kReLU}, {2, 3, 8, 8}, true},
        GradCase{"sigmoid", Activation{ActivationKind::kSigmoid}, {2, 3, 8, 8}, false},
        GradCase{"linear", Activation{ActivationKind::kLinear}, {2, 3, 8, 8}, false},
        GradCase{"flatten", Flatten{}, {2, 3, 4, 4}, false},
        GradCase{"reshape", Reshape{2, 4, 6}, {2, 3, 4, 4}, false}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(MseLoss, Examples) {
  const auto a = Filled({1, 1, 2, 3}, 0.25);
  auto same = MseLoss(a, a);
  EXPECT_EQ(same.loss, 0.0);
  for (double v : same.grad.values()) EXPECT_EQ(v, 0.0);
  const auto off = MseLoss(Filled({1, 1, 2, 3}, 1.25), a);
  EXPECT_DOUBLE_EQ(off.loss, 1.0);
  for (double v : off.grad.values()) EXPECT_DOUBLE_EQ(v, 2.0 / 6.0);
  EXPECT_THROW(MseLoss(a, Filled({1, 1, 3, 2}, 0.0)), Error);
}

TEST(MseLoss, MatchesScalarLoop) {
  Rng rng(4);
  Tensor4<double> p({3, 2, 5, 4}), t({3, 2, 5, 4});
  for (auto& v : p.values()) v = rng.Normal();
  for (auto& v : t.values()) v = rng.Normal();
  double acc = 0;
  for (size_t i = 0; i < p.values().size(); ++i) {
    const double d = p.values()[i] - t.values()[i];
    acc += d * d;
  }
  EXPECT_NEAR(MseLoss(p, t).loss, acc / double(p.values().size()), 1e-12);
}

TEST(Adam, ZeroGradientLeavesParams) {
  std::vector<LayerParams<double>> params(1);
  params[0].weights = {0.5, -0.25};
  params[0].bias = {0.1};
  params[0].ZeroGrad();
  Adam<double> opt({}, params);
  opt.Step(params);
  EXPECT_EQ(params[0].weights, (std::vector<double>{0.5, -0.25}));
  EXPECT_EQ(params[0].bias, (std::vector<double>{0.1}));
  EXPECT_EQ(opt.step(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<LayerParams<double>> params(1);
  params[0].weights = {1.0};
  params[0].bias = {};
  params[0].ZeroGrad();
  Adam<double> opt({}, params);
  params[0].grad_weights[0] = 3.0;
  opt.Step(params);
  // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps).
  EXPECT_NEAR(params[0].weights[0], 1.0 - 1e-3 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_EQ(params[0].grad_weights[0], 0.0);
  // Second step with the same gradient: closed form from the moment
  // recursions.
  params[0].grad_weights[0] = 3.0;
  opt.Step(params);
  const double m = (0.9 * 0.1 * 3 + 0.1 * 3) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 9 + 0.001 * 9) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(params[0].weights[0],
              1.0 - 1e-3 * 3.0 / (3.0 + 1e-8) - 1e-3 * m / (std::sqrt(v) + 1e-8),
              1e-14);
}

TEST(Init, HeUniformBoundsAndDeterminism) {
  const std::vector<LayerKind> layers = {Conv2d{8, 16, 1, 1}, Dense{100, 100},
                                         DepthwiseConv2d{4, 2, 1}};
  const auto a = SeededInit<double>(layers, 42);
  const auto b = SeededInit<double>(layers, 42);
  const auto c = SeededInit<double>(layers, 43);
  for (size_t l = 0; l < layers.size(); ++l) {
    EXPECT_EQ(a[l].weights, b[l].weights);
    EXPECT_NE(a[l].weights, c[l].weights);
    const double bound = std::sqrt(6.0 / double(FanIn(layers[l])));
    for (double w : a[l].weights) EXPECT_LE(std::abs(w), bound);
    for (double v : a[l].bias) EXPECT_EQ(v, 0.0);
  }
  // Dense 100x100: mean of 10k U(-b, b) draws lies within 3 sigma of 0.
  const double bound = std::sqrt(6.0 / 100.0);
  double mean = 0;
  for (double w : a[1].weights) mean += w;
  mean /= double(a[1].weights.size());
  const double sigma = bound / std::sqrt(3.0) / std::sqrt(double(a[1].weights.size()));
  EXPECT_LT(std::abs(mean), 3 * sigma);
}

TEST(Network, GradientOfAWholeAutoencoder) {
  const std::vector<LayerKind> layers = {
      DepthwiseConv2d{1, 2, 1}, PointwiseConv2d{1, 3}, Activation{ActivationKind::kSigmoid},
      Replicator{2},            DepthwiseConv2d{3, 1, 1}, PointwiseConv2d{3, 1},
      Activation{ActivationKind::kLinear}};
  Network<double> net(layers, Shape{1, 1, 8, 8}, 5);
  Rng rng(6);
  Tensor4<double> x({2, 1, 8, 8});
  for (auto& v : x.values()) v = rng.Uniform();
  net.ZeroGrad();
  const auto y = net.Forward(x);
  const auto loss = MseLoss(y, x);
  net.Backward(loss.grad);
  std::vector<double> analytic;
  for (const auto& p : net.params()) {
    analytic.insert(analytic.end(), p.grad_weights.begin(), p.grad_weights.end());
    analytic.insert(analytic.end(), p.grad_bias.begin(), p.grad_bias.end());
  }
  std::vector<double> flat = net.FlatParams();
  std::vector<double> numeric(flat.size());
  for (size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + 1e-5;
    net.SetFlatParams(flat);
    const double up = MseLoss(net.Infer(x), x).loss;
    flat[i] = keep - 1e-5;
    net.SetFlatParams(flat);
    const double down = MseLoss(net.Infer(x), x).loss;
    flat[i] = keep;
    numeric[i] = (up - down) / 2e-5;
  }
  EXPECT_LT(testing::NormRelativeError(analytic, numeric), 1e-4);
}

TEST(Network, IdenticalSetupsTrainIdentically) {
  const std::vector<LayerKind> layers = {PointwiseConv2d{1, 2}, Activation{},
                                         PointwiseConv2d{2, 1}};
  auto run = [&] {
    Network<float> net(layers, Shape{1, 1, 4, 4}, 9);
    Adam<float> opt({}, net.params());
    Tensor4<float> x({3, 1, 4, 4});
    Rng rng(1);
    for (auto& v : x.values()) v = float(rng.Uniform());
    for (int s = 0; s < 5; ++s) {
      net.ZeroGrad();
      const auto y = net.Forward(x);
      net.Backward(MseLoss(y, x).grad);
      opt.Step(net.params());
    }
    return net.FlatParams();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace outliernet::nn
