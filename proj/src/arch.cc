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

#include "outliernet/arch.h"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "outliernet/error.h"
#include "outliernet/nn/network.h"

namespace outliernet {

namespace {

using nn::Activation;
using nn::ActivationKind;
using nn::Conv2d;
using nn::Dense;
using nn::DepthwiseConv2d;
using nn::Flatten;
using nn::LayerKind;
using nn::PointwiseConv2d;
using nn::Replicator;
using nn::Reshape;
using nn::Shape;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kMaxDepth = 5;  // 32 rows halve to 1 after five stages
constexpr int kBaseChannels = 4;

LayerCost CostOf(const LayerKind& layer, const Shape& in, int index) {
  const Shape out = nn::OutputShape(layer, in, index);
  const uint64_t out_pixels = uint64_t(out.h) * out.w;
  const uint64_t k2 = nn::kKernel * nn::kKernel;
  LayerCost cost;
  cost.layer = nn::LayerName(layer);
  cost.output = out;
  cost.params = nn::ParamCount(layer);
  std::visit(
      Overloaded{
          [&](const Conv2d& l) {
            cost.macs = k2 * l.in_ch * l.out_ch * out_pixels;
            cost.flops = 2 * cost.macs + uint64_t(l.out_ch) * out_pixels;
          },
          [&](const DepthwiseConv2d& l) {
            cost.macs = k2 * l.channels * out_pixels;
            cost.flops = 2 * cost.macs + uint64_t(l.channels) * out_pixels;
          },
          [&](const PointwiseConv2d& l) {
            cost.macs = uint64_t(l.in_ch) * l.out_ch * out_pixels;
            cost.flops = 2 * cost.macs + uint64_t(l.out_ch) * out_pixels;
          },
          [&](const Dense& l) {
            cost.macs = uint64_t(l.in_dim) * l.out_dim;
            cost.flops = 2 * cost.macs + uint64_t(l.out_dim);
          },
          [&](const Activation& l) {
            // Identity output costs nothing.
            if (l.kind != ActivationKind::kLinear) {
              cost.flops = out.sample_size();
            }
          },
          [&](const auto&) {},
      },
      layer);
  return cost;
}

std::string ActivationToken(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kReLU: return "relu";
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kLinear: return "linear";
  }
  return "?";
}

}  // namespace

const char* FamilyName(Family family) {
  return family == Family::kFanConv ? "fan_conv" : "slider_dense_bottleneck";
}

Family ParseFamily(std::string_view name) {
  if (name == "fan_conv" || name == "fan") return Family::kFanConv;
  if (name == "slider_dense_bottleneck" || name == "slider") {
    return Family::kSliderDenseBottleneck;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown family '" + std::string(name) + "'");
}

void ValidateArch(const ArchSpec& arch) {
  if (arch.input != kInputShape) {
    throw Error(ErrorCode::kShape, "architecture '" + arch.name +
                                       "' must take input " +
                                       kInputShape.ToString());
  }
  const Shape out = nn::InferShapes(arch.layers, arch.input);
  if (out != arch.input) {
    throw Error(ErrorCode::kShape, "architecture '" + arch.name +
                                       "' maps " + arch.input.ToString() +
                                       " to " + out.ToString() +
                                       "; an autoencoder must reproduce its "
                                       "input shape");
  }
  size_t dense = 0;
  for (const auto& l : arch.layers) dense += std::holds_alternative<Dense>(l);
  if (arch.family == Family::kFanConv && dense > 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "fan_conv architecture '" + arch.name +
                    "' must not contain Dense layers");
  }
  if (arch.family == Family::kSliderDenseBottleneck && dense == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "slider architecture '" + arch.name +
                    "' needs a Dense bottleneck");
  }
}

EfficiencyReport Efficiency(const ArchSpec& arch) {
  EfficiencyReport r;
  r.name = arch.name;
  Shape s = arch.input;
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    LayerCost c = CostOf(arch.layers[i], s, int(i));
    s = c.output;
    r.param_count += c.params;
    r.macs += c.macs;
    r.flops += c.flops;
    r.per_layer.push_back(std::move(c));
  }
  // Header: magic, version, param count, text length, two f64 norm stats.
  r.model_bytes = 32 + SerializeArch(arch).size() + 4 * r.param_count;
  return r;
}

uint64_t CountParams(const ArchSpec& arch) {
  uint64_t total = 0;
  for (const auto& l : arch.layers) total += nn::ParamCount(l);
  return total;
}

uint64_t CountMacs(const ArchSpec& arch) { return Efficiency(arch).macs; }
uint64_t CountFlops(const ArchSpec& arch) { return Efficiency(arch).flops; }

ArchSpec BuildAutoencoder(Family family, const std::vector<int>& channels,
                          std::optional<int> bottleneck_dim, std::string name) {
  const int depth = static_cast<int>(channels.size());
  if (depth < 1 || depth > kMaxDepth) {
    throw Error(ErrorCode::kInvalidArgument,
                "depth must lie in [1, " + std::to_string(kMaxDepth) +
                    "] for a 32 x 128 input");
  }
  for (int c : channels) {
    if (c < 1) throw Error(ErrorCode::kInvalidArgument, "channel width < 1");
  }
  const bool slider = family == Family::kSliderDenseBottleneck;
  if (slider != bottleneck_dim.has_value()) {
    throw Error(ErrorCode::kInvalidArgument,
                slider ? "slider family requires a bottleneck dimension"
                       : "fan_conv family takes no bottleneck dimension");
  }
  if (slider && *bottleneck_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bottleneck dimension < 1");
  }

  ArchSpec arch;
  arch.family = family;
  if (name.empty()) {
    name = std::string(slider ? "slider" : "fan") + "-c";
    for (size_t i = 0; i < channels.size(); ++i) {
      name += (i ? "." : "") + std::to_string(channels[i]);
    }
    if (slider) name += "-b" + std::to_string(*bottleneck_dim);
  }
  arch.name = std::move(name);
  auto& L = arch.layers;
  const Activation relu{ActivationKind::kReLU};

  int prev = 1;
  for (int c : channels) {
    L.push_back(DepthwiseConv2d{prev, 2, 1});
    L.push_back(PointwiseConv2d{prev, c});
    L.push_back(relu);
    prev = c;
  }
  if (slider) {
    const int h = int(kInputShape.h) >> depth;
    const int w = int(kInputShape.w) >> depth;
    const int flat = prev * h * w;
    L.push_back(Conv2d{prev, prev, 1, 1});
    L.push_back(relu);
    L.push_back(Flatten{});
    L.push_back(Dense{flat, *bottleneck_dim});
    L.push_back(relu);
    L.push_back(Dense{*bottleneck_dim, flat});
    L.push_back(relu);
    L.push_back(Reshape{prev, h, w});
    L.push_back(Conv2d{prev, prev, 1, 1});
    L.push_back(relu);
  }
  for (int i = depth - 2; i >= -1; --i) {
    const int target = channels[std::max(i, 0)];
    L.push_back(Replicator{2});
    L.push_back(DepthwiseConv2d{prev, 1, 1});
    L.push_back(PointwiseConv2d{prev, target});
    L.push_back(relu);
    prev = target;
  }
  L.push_back(PointwiseConv2d{prev, 1});
  L.push_back(Activation{ActivationKind::kLinear});

  ValidateArch(arch);
  return arch;
}

std::vector<int> TemplateChannels(double width_multiplier, int depth) {
  if (!(width_multiplier > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "width multiplier must be > 0");
  }
  if (depth < 1 || depth > kMaxDepth) {
    throw Error(ErrorCode::kInvalidArgument,
                "depth must lie in [1, " + std::to_string(kMaxDepth) + "]");
  }
  std::vector<int> channels;
  for (int i = 0; i < depth; ++i) {
    channels.push_back(std::max(
        1, int(std::lround(kBaseChannels * width_multiplier * (1 << i)))));
  }
  return channels;
}

ArchSpec MakeTemplate(Family family, double width_multiplier, int depth,
                      std::optional<int> bottleneck_dim) {
  std::ostringstream name;
  name << (family == Family::kFanConv ? "fan" : "slider") << "-d" << depth
       << "-w" << width_multiplier;
  if (bottleneck_dim) name << "-b" << *bottleneck_dim;
  return BuildAutoencoder(family, TemplateChannels(width_multiplier, depth),
                          bottleneck_dim, name.str());
}

namespace {

// Stage widths and bottleneck of an arch that BuildAutoencoder reproduces
// exactly, or nullopt.
struct AeParams {
  std::vector<int> channels;
  std::optional<int> bottleneck;
};

std::optional<AeParams> RecoverAutoencoder(const ArchSpec& arch) {
  AeParams p;
  const auto& L = arch.layers;
  size_t i = 0;
  while (i + 1 < L.size()) {
    const auto* dw = std::get_if<DepthwiseConv2d>(&L[i]);
    const auto* pw = std::get_if<PointwiseConv2d>(&L[i + 1]);
    if (!dw || !pw || dw->stride != 2) break;
    p.channels.push_back(pw->out_ch);
    i += 3;
  }
  if (arch.family == Family::kSliderDenseBottleneck) {
    for (const auto& l : L) {
      if (const auto* d = std::get_if<Dense>(&l)) {
        p.bottleneck = d->out_dim;
        break;
      }
    }
  }
  if (p.channels.empty() || p.channels.size() > size_t(kMaxDepth)) {
    return std::nullopt;
  }
  try {
    const ArchSpec rebuilt =
        BuildAutoencoder(arch.family, p.channels, p.bottleneck, arch.name);
    if (rebuilt == arch) return p;
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

std::string SerializeArch(const ArchSpec& arch) {
  std::ostringstream out;
  out << "arch 1\n"
      << "name " << arch.name << "\n";
  if (const auto ae = RecoverAutoencoder(arch)) {
    out << "ae ";
    for (size_t i = 0; i < ae->channels.size(); ++i) {
      out << (i ? "," : "") << ae->channels[i];
    }
    if (ae->bottleneck) out << " b" << *ae->bottleneck;
    out << "\n";
    return out.str();
  }
  out << "family " << FamilyName(arch.family) << "\n";
  for (const auto& layer : arch.layers) {
    std::visit(
        Overloaded{
            [&](const Conv2d& l) {
              out << "conv " << l.in_ch << " " << l.out_ch << " " << l.stride
                  << " " << l.pad;
            },
            [&](const DepthwiseConv2d& l) {
              out << "dw " << l.channels << " " << l.stride << " " << l.pad;
            },
            [&](const PointwiseConv2d& l) {
              out << "pw " << l.in_ch << " " << l.out_ch;
            },
            [&](const Replicator& l) { out << "rep " << l.factor; },
            [&](const Dense& l) {
              out << "dense " << l.in_dim << " " << l.out_dim;
            },
            [&](const Activation& l) { out << ActivationToken(l.kind); },
            [&](const Flatten&) { out << "flatten"; },
            [&](const Reshape& l) {
              out << "reshape " << l.c << " " << l.h << " " << l.w;
            },
        },
        layer);
    out << "\n";
  }
  return out.str();
}

ArchSpec ParseArch(std::string_view text) {
  ArchSpec arch;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header = false;
  bool family_line = false;
  std::optional<AeParams> ae;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string op;
    ls >> op;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::kFormat, "arch description line " +
                                          std::to_string(line_no) + ": " + why);
    };
    auto ints = [&](int count) {
      std::vector<int> v(size_t(count), 0);
      for (int& x : v) {
        if (!(ls >> x)) fail("expected " + std::to_string(count) +
                             " integers after '" + op + "'");
      }
      return v;
    };
    if (!header) {
      int version = 0;
      if (op != "arch" || !(ls >> version) || version != 1) {
        fail("missing 'arch 1' header");
      }
      header = true;
    } else if (op == "name") {
      std::getline(ls >> std::ws, arch.name);
    } else if (op == "family") {
      std::string f;
      ls >> f;
      arch.family = ParseFamily(f);
      family_line = true;
    } else if (op == "ae") {
      if (ae) fail("duplicate 'ae' line");
      AeParams p;
      std::string widths, extra;
      ls >> widths;
      std::istringstream ws(widths);
      std::string item;
      while (std::getline(ws, item, ',')) {
        try {
          size_t used = 0;
          p.channels.push_back(std::stoi(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
          fail("bad stage width '" + item + "'");
        }
      }
      if (p.channels.empty()) fail("'ae' needs stage widths");
      if (ls >> extra) {
        if (extra.size() < 2 || extra[0] != 'b') fail("bad bottleneck '" + extra + "'");
        try {
          p.bottleneck = std::stoi(extra.substr(1));
        } catch (const std::logic_error&) {
          fail("bad bottleneck '" + extra + "'");
        }
      }
      ae = std::move(p);
    } else if (op == "conv") {
      auto v = ints(4);
      arch.layers.push_back(Conv2d{v[0], v[1], v[2], v[3]});
    } else if (op == "dw") {
      auto v = ints(3);
      arch.layers.push_back(DepthwiseConv2d{v[0], v[1], v[2]});
    } else if (op == "pw") {
      auto v = ints(2);
      arch.layers.push_back(PointwiseConv2d{v[0], v[1]});
    } else if (op == "rep") {
      arch.layers.push_back(Replicator{ints(1)[0]});
    } else if (op == "dense") {
      auto v = ints(2);
      arch.layers.push_back(Dense{v[0], v[1]});
    } else if (op == "relu") {
      arch.layers.push_back(Activation{ActivationKind::kReLU});
    } else if (op == "sigmoid") {
      arch.layers.push_back(Activation{ActivationKind::kSigmoid});
    } else if (op == "linear") {
      arch.layers.push_back(Activation{ActivationKind::kLinear});
    } else if (op == "flatten") {
      arch.layers.push_back(Flatten{});
    } else if (op == "reshape") {
      auto v = ints(3);
      arch.layers.push_back(Reshape{v[0], v[1], v[2]});
    } else {
      fail("unknown layer '" + op + "'");
    }
  }
  if (!header) {
    throw Error(ErrorCode::kFormat, "arch description is empty");
  }
  if (ae) {
    if (!arch.layers.empty()) {
      throw Error(ErrorCode::kFormat,
                  "arch description mixes an 'ae' line with layer lines");
    }
    const Family family = ae->bottleneck ? Family::kSliderDenseBottleneck
                                         : Family::kFanConv;
    if (family_line && family != arch.family) {
      throw Error(ErrorCode::kFormat,
                  "'ae' line disagrees with the family line");
    }
    return BuildAutoencoder(family, ae->channels, ae->bottleneck, arch.name);
  }
  ValidateArch(arch);
  return arch;
}

}  // namespace outliernet
