/* Copyright 2026 The ERN Runtime Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ern/graph.hpp"

#include <string>

#include "ern/error.hpp"

namespace ern::graph {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

[[noreturn]] void fail(const Node& n, const std::string& what) {
  throw ConfigError("node '" + n.name + "': " + what);
}

}  // namespace

std::size_t GraphDef::add_edge(std::string name, EdgeKind kind, std::size_t channels) {
  edges.push_back(Edge{std::move(name), kind, channels});
  return edges.size() - 1;
}

const Node* GraphDef::find(std::string_view name) const {
  for (const Node& n : nodes)
    if (n.name == name) return &n;
  return nullptr;
}

std::size_t GraphDef::producer(std::size_t edge) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].output == edge) return i;
  return kNone;
}

AccScale GraphDef::acc_scale(std::size_t edge) const {
  if (edges[edge].kind != EdgeKind::int_acc) return AccScale::none;
  const std::size_t p = producer(edge);
  if (p == kNone) return AccScale::none;
  return std::visit(Overloaded{
                        [](const ConvOp& c) { return c.const_scaled ? AccScale::shared_const : AccScale::per_channel; },
                        [](const ResidualAddOp&) { return AccScale::shared_const; },
                        [](const FinalConvOp&) { return AccScale::head; },
                        [](const auto&) { return AccScale::none; },
                    },
                    nodes[p].op);
}

void validate(const GraphDef& g) {
  if (g.lane_multiple == 0) throw ConfigError("lane multiple must be >= 1");
  if (g.input >= g.edges.size() || g.edges[g.input].kind != EdgeKind::image)
    throw ConfigError("graph input must be an image edge");
  if (g.output >= g.edges.size() || g.edges[g.output].kind != EdgeKind::logits)
    throw ConfigError("graph output must be a logits edge");

  std::vector<bool> produced(g.edges.size(), false);
  produced[g.input] = true;
  for (const Node& n : g.nodes) {
    for (std::size_t in : n.inputs) {
      if (in >= g.edges.size()) fail(n, "input edge out of range");
      if (!produced[in]) fail(n, "consumes edge '" + g.edges[in].name + "' before it is produced");
    }
    if (n.output >= g.edges.size()) fail(n, "output edge out of range");
    if (produced[n.output]) fail(n, "edge '" + g.edges[n.output].name + "' produced twice");
    produced[n.output] = true;

    const Edge& out = g.edges[n.output];
    auto expect_inputs = [&](std::size_t count, EdgeKind kind) {
      if (n.inputs.size() != count) fail(n, "wrong number of inputs");
      for (std::size_t in : n.inputs)
        if (g.edges[in].kind != kind) fail(n, "input edge '" + g.edges[in].name + "' has the wrong kind");
    };
    auto expect_output = [&](EdgeKind kind, std::size_t channels) {
      if (out.kind != kind) fail(n, "output edge has the wrong kind");
      if (out.channels != channels) fail(n, "output edge has the wrong channel count");
    };
    auto check_conv = [&](const kernels::ConvSpec& spec) {
      try {
        spec.validate();
      } catch (const ShapeError& e) {
        fail(n, e.what());
      }
      expect_inputs(1, EdgeKind::act2);
      if (g.edges[n.inputs[0]].channels != spec.in_ch) fail(n, "input channels do not match conv spec");
      expect_output(EdgeKind::int_acc, spec.out_ch);
    };

    std::visit(Overloaded{
                   [&](const PixelEmbedOp& op) {
                     expect_inputs(1, EdgeKind::image);
                     if (op.k < 1 || op.l != 2) fail(n, "pixel embedding needs k >= 1 and l == 2");
                     expect_output(EdgeKind::act2, 3 * static_cast<std::size_t>(op.k));
                   },
                   [&](const ConvOp& op) {
                     check_conv(op.spec);
                     if (op.spec.out_ch % g.lane_multiple != 0)
                       fail(n, "output channels " + std::to_string(op.spec.out_ch) + " not a multiple of " +
                                   std::to_string(g.lane_multiple));
                     if (op.const_scaled) {
                       const std::size_t p = g.producer(n.inputs[0]);
                       const auto* act = p == kNone ? nullptr : std::get_if<BnActOp>(&g.nodes[p].op);
                       if (act == nullptr || act->post_scale)
                         fail(n, "const-scaled conv must consume an activation without output scale");
                     }
                   },
                   [&](const BnActOp& op) {
                     expect_inputs(1, EdgeKind::int_acc);
                     if (g.edges[n.inputs[0]].channels != op.channels) fail(n, "channel mismatch");
                     if (g.acc_scale(n.inputs[0]) == AccScale::head) fail(n, "cannot consume the final conv output");
                     expect_output(EdgeKind::act2, op.channels);
                   },
                   [&](const ResidualAddOp&) {
                     expect_inputs(2, EdgeKind::int_acc);
                     const std::size_t c = g.edges[n.inputs[0]].channels;
                     if (g.edges[n.inputs[1]].channels != c) fail(n, "operand channel mismatch");
                     for (std::size_t in : n.inputs)
                       if (g.acc_scale(in) != AccScale::shared_const)
                         fail(n, "operand '" + g.edges[in].name + "' is not scaled by the shared constant");
                     expect_output(EdgeKind::int_acc, c);
                   },
                   [&](const FinalConvOp& op) { check_conv(op.spec); },
                   [&](const AvgPoolScaleOp&) {
                     expect_inputs(1, EdgeKind::int_acc);
                     if (g.acc_scale(n.inputs[0]) != AccScale::head) fail(n, "must consume the final conv output");
                     expect_output(EdgeKind::logits, g.edges[n.inputs[0]].channels);
                   },
               },
               n.op);
  }
  if (!produced[g.output]) throw ConfigError("graph never produces its output edge");
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"erns18x075", "erns18", "erns34", "erns50", "erns101"};
  return names;
}

ArchConfig arch_config(std::string_view variant) {
  ArchConfig c;
  c.name = std::string(variant);
  if (variant == "erns18" || variant == "erns18x075") {
    c.block = BlockType::conv_block;
    c.blocks = {2, 2, 2, 2};
    c.widths = {64, 128, 256, variant == "erns18" ? 512u : 384u};
  } else if (variant == "erns34") {
    c.block = BlockType::conv_block;
    c.blocks = {3, 4, 6, 3};
    c.widths = {64, 128, 256, 512};
  } else if (variant == "erns50" || variant == "erns101") {
    c.block = BlockType::bottleneck;
    c.blocks = {3, 4, variant == "erns50" ? 6u : 23u, 3};
    c.widths = {64, 128, 256, 512};
  } else {
    throw ConfigError("unknown architecture '" + std::string(variant) + "'");
  }
  return c;
}

void validate(const ArchConfig& cfg) {
  if (cfg.blocks.empty() || cfg.blocks.size() != cfg.widths.size())
    throw ConfigError("architecture needs one block count and one width per stage");
  for (std::size_t s = 0; s < cfg.blocks.size(); ++s) {
    if (cfg.blocks[s] == 0 || cfg.widths[s] == 0) throw ConfigError("stage block counts and widths must be >= 1");
    if (cfg.lane_multiple == 0 || cfg.stage_out(s) % cfg.lane_multiple != 0)
      throw ConfigError("stage " + std::to_string(s + 1) + " channels must be a multiple of " +
                        std::to_string(cfg.lane_multiple));
  }
  if (cfg.stem_channels == 0 || cfg.stem_channels % cfg.lane_multiple != 0)
    throw ConfigError("stem channels must be a positive multiple of the lane multiple");
  if (cfg.num_classes == 0) throw ConfigError("num_classes must be >= 1");
}

GraphBuilder::GraphBuilder(std::size_t lane_multiple) { g_.lane_multiple = lane_multiple; }

std::size_t GraphBuilder::image_input() {
  g_.input = g_.add_edge("image", EdgeKind::image, 3);
  return g_.input;
}

std::size_t GraphBuilder::pixel_embed(std::size_t image, int k, int l) {
  const std::size_t out = g_.add_edge("embed", EdgeKind::act2, 3 * static_cast<std::size_t>(k));
  g_.nodes.push_back(Node{"embed", PixelEmbedOp{k, l}, {image}, out});
  return out;
}

std::size_t GraphBuilder::conv(const std::string& name, std::size_t in, const kernels::ConvSpec& spec,
                               bool const_scaled) {
  const std::size_t out = g_.add_edge(name, EdgeKind::int_acc, spec.out_ch);
  g_.nodes.push_back(Node{name, ConvOp{spec, const_scaled}, {in}, out});
  return out;
}

std::size_t GraphBuilder::bnact(const std::string& name, std::size_t in, bool post_scale) {
  const std::size_t c = channels(in);
  const std::size_t out = g_.add_edge(name, EdgeKind::act2, c);
  g_.nodes.push_back(Node{name, BnActOp{c, post_scale}, {in}, out});
  return out;
}

std::size_t GraphBuilder::residual_add(const std::string& name, std::size_t a, std::size_t b) {
  const std::size_t out = g_.add_edge(name, EdgeKind::int_acc, channels(a));
  g_.nodes.push_back(Node{name, ResidualAddOp{}, {a, b}, out});
  return out;
}

std::size_t GraphBuilder::final_conv(const std::string& name, std::size_t in, const kernels::ConvSpec& spec) {
  const std::size_t out = g_.add_edge(name, EdgeKind::int_acc, spec.out_ch);
  g_.nodes.push_back(Node{name, FinalConvOp{spec}, {in}, out});
  return out;
}

std::size_t GraphBuilder::avgpool_scale(const std::string& name, std::size_t in) {
  const std::size_t out = g_.add_edge("logits", EdgeKind::logits, channels(in));
  g_.nodes.push_back(Node{name, AvgPoolScaleOp{}, {in}, out});
  return out;
}

std::size_t GraphBuilder::stem(std::size_t act_in, std::size_t ch) {
  using kernels::ConvSpec;
  std::size_t x = conv("stem.conv0", act_in, ConvSpec::square(channels(act_in), ch, 3, 2));
  x = bnact("stem.bnact0", x, true);
  x = conv("stem.conv1", x, ConvSpec::square(ch, ch, 3, 1));
  x = bnact("stem.bnact1", x, true);
  x = conv("stem.conv2", x, ConvSpec::square(ch, ch, 3, 2));
  x = bnact("stem.bnact2", x, false);
  return conv("stem.conv3", x, ConvSpec::square(ch, ch, 3, 1), true);
}

std::size_t GraphBuilder::conv_block(const std::string& prefix, std::size_t x, std::size_t cin,
                                     std::size_t cout, std::size_t stride) {
  using kernels::ConvSpec;
  const bool downsample = stride != 1 || cin != cout;
  const std::size_t a0 = bnact(prefix + ".bnact0", x, !downsample);
  const std::size_t identity =
      downsample ? conv(prefix + ".down", a0, ConvSpec::square(cin, cout, 1, stride), true) : x;
  std::size_t out = conv(prefix + ".conv1", a0, ConvSpec::square(cin, cout, 3, stride));
  out = bnact(prefix + ".bnact1", out, false);
  out = conv(prefix + ".conv2", out, ConvSpec::square(cout, cout, 3, 1), true);
  return residual_add(prefix + ".add", out, identity);
}

std::size_t GraphBuilder::bottleneck(const std::string& prefix, std::size_t x, std::size_t cin,
                                     std::size_t cmid, std::size_t cout, std::size_t stride, bool project,
                                     bool stride_on_first) {
  using kernels::ConvSpec;
  const std::size_t a0 = bnact(prefix + ".bnact0", x, !project);
  const std::size_t identity =
      project ? conv(prefix + ".down", a0, ConvSpec::square(cin, cout, 1, stride), true) : x;
  std::size_t out = conv(prefix + ".conv1", a0, ConvSpec::square(cin, cmid, 1, stride_on_first ? stride : 1));
  out = bnact(prefix + ".bnact1", out, true);
  out = conv(prefix + ".conv2", out, ConvSpec::square(cmid, cmid, 3, stride_on_first ? 1 : stride));
  out = bnact(prefix + ".bnact2", out, false);
  out = conv(prefix + ".conv3", out, ConvSpec::square(cmid, cout, 1, 1), true);
  return residual_add(prefix + ".add", out, identity);
}

GraphDef GraphBuilder::finish(std::size_t logits) {
  g_.output = logits;
  validate(g_);
  return g_;
}

GraphDef build_model(const ArchConfig& cfg, int thermo_k) {
  validate(cfg);
  if (thermo_k < 1) throw ConfigError("thermometer length k must be >= 1");
  GraphBuilder b(cfg.lane_multiple);
  const std::size_t image = b.image_input();
  const std::size_t embedded = b.pixel_embed(image, thermo_k);
  std::size_t x = b.stem(embedded, cfg.stem_channels);
  std::size_t cin = cfg.stem_channels;
  for (std::size_t s = 0; s < cfg.blocks.size(); ++s) {
    const std::size_t cout = cfg.stage_out(s);
    for (std::size_t i = 0; i < cfg.blocks[s]; ++i) {
      const std::string prefix = "stage" + std::to_string(s + 1) + ".block" + std::to_string(i);
      const std::size_t stride = (i == 0 && s > 0) ? 2 : 1;
      if (cfg.block == BlockType::conv_block) {
        x = b.conv_block(prefix, x, cin, cout, stride);
      } else {
        const bool project = stride != 1 || cin != cout;
        x = b.bottleneck(prefix, x, cin, cfg.widths[s], cout, stride, project, cfg.stride_on_first_conv);
      }
      cin = cout;
    }
  }
  x = b.bnact("head.bnact", x, true);
  x = b.final_conv("head.fc", x, kernels::ConvSpec::square(cin, cfg.num_classes, 1, 1));
  return b.finish(b.avgpool_scale("head.pool", x));
}

std::vector<Dims3> infer_shapes(const GraphDef& g, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("input image must be at least 1x1");
  std::vector<Dims3> dims(g.edges.size());
  dims[g.input] = Dims3{3, height, width};
  for (const Node& n : g.nodes) {
    const Dims3 in = dims[n.inputs[0]];
    std::visit(Overloaded{
                   [&](const PixelEmbedOp& op) { dims[n.output] = {3 * static_cast<std::size_t>(op.k), in.height, in.width}; },
                   [&](const ConvOp& op) {
                     dims[n.output] = {op.spec.out_ch, op.spec.out_height(in.height), op.spec.out_width(in.width)};
                   },
                   [&](const FinalConvOp& op) {
                     dims[n.output] = {op.spec.out_ch, op.spec.out_height(in.height), op.spec.out_width(in.width)};
                   },
                   [&](const ResidualAddOp&) {
                     if (!(dims[n.inputs[1]] == in)) throw ShapeError("residual operands of '" + n.name + "' differ in shape");
                     dims[n.output] = in;
                   },
                   [&](const AvgPoolScaleOp&) { dims[n.output] = {in.channels, 1, 1}; },
                   [&](const auto&) { dims[n.output] = in; },
               },
               n.op);
  }
  return dims;
}

std::vector<std::int64_t> acc_bounds(const GraphDef& g) {
  std::vector<std::int64_t> bounds(g.edges.size(), 0);
  for (const Node& n : g.nodes) {
    std::visit(Overloaded{
                   [&](const ConvOp& op) { bounds[n.output] = op.spec.acc_bound(); },
                   [&](const FinalConvOp& op) { bounds[n.output] = op.spec.acc_bound(); },
                   [&](const ResidualAddOp&) { bounds[n.output] = bounds[n.inputs[0]] + bounds[n.inputs[1]]; },
                   [](const auto&) {},
               },
               n.op);
  }
  return bounds;
}

}  // namespace ern::graph
