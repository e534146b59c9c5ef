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

namespace ern::graph {

LayerStats conv_stats(const kernels::ConvSpec& spec, std::size_t height, std::size_t width) {
  const std::uint64_t oh = spec.out_height(height);
  const std::uint64_t ow = spec.out_width(width);
  LayerStats s;
  s.params = static_cast<std::uint64_t>(spec.out_ch) * spec.in_ch * spec.kh * spec.kw;
  s.activations = static_cast<std::uint64_t>(spec.out_ch) * oh * ow;
  s.macs = s.params * oh * ow;
  return s;
}

ModelStats model_stats(const GraphDef& g, std::size_t height, std::size_t width) {
  const auto dims = infer_shapes(g, height, width);
  ModelStats m;
  auto add_conv = [&](const kernels::ConvSpec& spec, const Node& n, bool final) {
    const Dims3& in = dims[n.inputs[0]];
    const LayerStats s = conv_stats(spec, in.height, in.width);
    m.param_count += s.params;
    m.macs += s.macs;
    m.activations += s.activations;
    m.padded_weight_bytes += padded_channels(spec.out_ch) * padded_channels(spec.in_ch) * spec.kh * spec.kw / 8;
    if (final) {
      m.final_layer_params = s.params;
      m.final_layer_bytes = (s.params + 7) / 8;
    }
  };
  for (const Node& n : g.nodes) {
    if (const auto* c = std::get_if<ConvOp>(&n.op)) add_conv(c->spec, n, false);
    if (const auto* f = std::get_if<FinalConvOp>(&n.op)) add_conv(f->spec, n, true);
    if (const auto* b = std::get_if<BnActOp>(&n.op)) m.threshold_channels += b->channels;
  }
  m.binary_weight_bytes = (m.param_count + 7) / 8;
  m.threshold_bytes = m.threshold_channels * 3 * 4;
  return m;
}

ModelStats model_stats(const ArchConfig& cfg, std::size_t resolution, int thermo_k) {
  return model_stats(build_model(cfg, thermo_k), resolution, resolution);
}

}  // namespace ern::graph
