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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ern/kernels.hpp"
#include "ern/tensor.hpp"

namespace ern::graph {

enum class EdgeKind { image, act2, int_acc, logits };

/// How the real value of an IntAcc edge relates to its integers.
enum class AccScale {
  none,           // not an accumulator edge
  per_channel,    // output of a conv with its own per-channel alpha
  shared_const,   // shared constant c (const-scaled convs and residual sums)
  head,           // final conv output, consumed only by AvgPoolScale
};

struct Edge {
  std::string name;
  EdgeKind kind = EdgeKind::act2;
  std::size_t channels = 0;
  bool operator==(const Edge&) const = default;
};

struct PixelEmbedOp {
  int k = 10;
  int l = 2;
  bool operator==(const PixelEmbedOp&) const = default;
};
struct ConvOp {
  kernels::ConvSpec spec;
  bool const_scaled = false;
  bool operator==(const ConvOp&) const = default;
};
/// Batch-norm plus 2-bit activation. With post_scale the activation output
/// carries its scale into the consuming conv (folded downstream).
struct BnActOp {
  std::size_t channels = 0;
  bool post_scale = true;
  bool operator==(const BnActOp&) const = default;
};
struct ResidualAddOp {
  bool operator==(const ResidualAddOp&) const = default;
};
struct FinalConvOp {
  kernels::ConvSpec spec;
  bool operator==(const FinalConvOp&) const = default;
};
struct AvgPoolScaleOp {
  bool operator==(const AvgPoolScaleOp&) const = default;
};

using Op = std::variant<PixelEmbedOp, ConvOp, BnActOp, ResidualAddOp, FinalConvOp, AvgPoolScaleOp>;

struct Node {
  std::string name;
  Op op;
  std::vector<std::size_t> inputs;
  std::size_t output = 0;
  bool operator==(const Node&) const = default;
};

/// Topologically ordered node list over named edges.
struct GraphDef {
  std::vector<Edge> edges;
  std::vector<Node> nodes;
  std::size_t input = 0;   // image edge
  std::size_t output = 0;  // logits edge
  /// Every Conv's output channel count must be a multiple of this.
  std::size_t lane_multiple = kLanes;

  bool operator==(const GraphDef&) const = default;

  std::size_t add_edge(std::string name, EdgeKind kind, std::size_t channels);
  const Node* find(std::string_view name) const;
  /// Index of the node producing `edge`.
  std::size_t producer(std::size_t edge) const;
  /// Scale class of an accumulator edge.
  AccScale acc_scale(std::size_t edge) const;
};

/// Checks edge kinds, channel agreement, the multiple-of-lanes rule and the
/// shared-constant rule. Throws ConfigError.
void validate(const GraphDef& g);

enum class BlockType : std::uint8_t { conv_block = 0, bottleneck = 1 };

/// Architecture description. For ConvBlock `widths` are block output
/// channels; for Bottleneck they are the middle channels and the block
/// output is 4x wider.
struct ArchConfig {
  std::string name;
  BlockType block = BlockType::conv_block;
  std::vector<std::size_t> blocks;
  std::vector<std::size_t> widths;
  std::size_t stem_channels = 64;
  std::size_t num_classes = 1000;
  /// Bottleneck only: put the stage stride on the first 1x1 conv instead of the 3x3.
  bool stride_on_first_conv = false;
  std::size_t lane_multiple = kLanes;

  std::size_t stage_out(std::size_t stage) const {
    return block == BlockType::bottleneck ? 4 * widths[stage] : widths[stage];
  }
  bool operator==(const ArchConfig&) const = default;
};

/// erns18x075, erns18, erns34, erns50, erns101.
const std::vector<std::string>& variant_names();
/// Throws ConfigError for unknown names.
ArchConfig arch_config(std::string_view variant);
void validate(const ArchConfig& cfg);

/// Appends graph fragments; used by build_model and by tests.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::size_t lane_multiple = kLanes);

  std::size_t image_input();
  std::size_t pixel_embed(std::size_t image, int k, int l = 2);
  std::size_t conv(const std::string& name, std::size_t in, const kernels::ConvSpec& spec,
                   bool const_scaled = false);
  std::size_t bnact(const std::string& name, std::size_t in, bool post_scale);
  std::size_t residual_add(const std::string& name, std::size_t a, std::size_t b);
  std::size_t final_conv(const std::string& name, std::size_t in, const kernels::ConvSpec& spec);
  std::size_t avgpool_scale(const std::string& name, std::size_t in);

  /// Four 3x3 convs with strides 2,1,2,1; the last is const-scaled. Returns its IntAcc edge.
  std::size_t stem(std::size_t act_in, std::size_t channels);
  /// Pre-activation two-conv residual block.
  std::size_t conv_block(const std::string& prefix, std::size_t x, std::size_t cin, std::size_t cout,
                         std::size_t stride);
  /// Pre-activation 1-3-1 residual block; output is cout = 4 * cmid channels.
  std::size_t bottleneck(const std::string& prefix, std::size_t x, std::size_t cin, std::size_t cmid,
                         std::size_t cout, std::size_t stride, bool project, bool stride_on_first);

  const GraphDef& graph() const { return g_; }
  GraphDef finish(std::size_t logits);

 private:
  std::size_t channels(std::size_t edge) const { return g_.edges[edge].channels; }
  GraphDef g_;
};

/// PixelEmbed -> stem -> stages -> bn/act -> FinalConv(1x1) -> AvgPoolScale.
GraphDef build_model(const ArchConfig& cfg, int thermo_k);

/// Per-edge (C, H, W) for an input of the given resolution. Throws ShapeError
/// when the input is empty.
std::vector<Dims3> infer_shapes(const GraphDef& g, std::size_t height, std::size_t width);

/// Static bound on |acc| for every IntAcc edge (0 for other edges).
std::vector<std::int64_t> acc_bounds(const GraphDef& g);

struct LayerStats {
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::uint64_t activations = 0;
};

/// Counts for one conv applied to an (in_ch, height, width) input.
LayerStats conv_stats(const kernels::ConvSpec& spec, std::size_t height, std::size_t width);

struct ModelStats {
  std::uint64_t param_count = 0;
  /// ceil(params / 8) over logical channels.
  std::uint64_t binary_weight_bytes = 0;
  /// Storage with both channel axes padded to 64 lanes.
  std::uint64_t padded_weight_bytes = 0;
  std::uint64_t macs = 0;
  /// Sum of conv output elements.
  std::uint64_t activations = 0;
  std::uint64_t threshold_channels = 0;
  /// Three 32-bit thresholds per channel; every accumulator bound fits in 31 bits.
  std::uint64_t threshold_bytes = 0;
  std::uint64_t final_layer_params = 0;
  std::uint64_t final_layer_bytes = 0;
};

ModelStats model_stats(const ArchConfig& cfg, std::size_t resolution, int thermo_k = 10);
ModelStats model_stats(const GraphDef& g, std::size_t height, std::size_t width);

}  // namespace ern::graph
