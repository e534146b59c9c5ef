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

#include "ern/executor.hpp"

#include <variant>

#include "ern/error.hpp"
#include "ern/instrument.hpp"
#include "ern/pixembed.hpp"
#include "ern/quant.hpp"

namespace ern {

namespace {

using Value = std::variant<std::monostate, Act2Tensor, PackedPlanes, IntAccTensor, std::vector<double>>;

}  // namespace

std::vector<double> execute(const compiler::CompiledModel& model, const ImageU8& image, const ExecOptions& opts) {
  using instrument::Phase;
  using instrument::PhaseGuard;
  const graph::GraphDef& g = model.graph;
  if (image.dims.channels != 3) throw ShapeError("image must have 3 channels");
  if (image.pixels.size() != image.dims.size()) throw ShapeError("image pixel count does not match its dims");
  graph::infer_shapes(g, image.dims.height, image.dims.width);
  if (model.params.size() != g.nodes.size()) throw ConfigError("model parameters do not match its graph");

  std::vector<std::size_t> last_use(g.edges.size(), 0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t e : g.nodes[i].inputs) last_use[e] = i;

  const bool packed = opts.kernel == KernelPath::popcount;
  const kernels::ConvOptions conv_opts{opts.threads, opts.isa};
  std::vector<Value> values(g.edges.size());
  std::vector<double> logits;

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const graph::Node& n = g.nodes[i];
    Value& out = values[n.output];
    auto conv = [&](const kernels::ConvSpec& spec) {
      const auto& w = std::get<PackedWeights>(model.params[i]);
      const Value& in = values[n.inputs[0]];
      out = packed ? kernels::conv_w1a2_popcount(std::get<PackedPlanes>(in), w, spec, conv_opts)
                   : kernels::conv_w1a2_naive(std::get<Act2Tensor>(in), w, spec, opts.threads);
      if (opts.trace != nullptr && opts.trace->keep_acc) opts.trace->accs[n.name] = std::get<IntAccTensor>(out);
    };

    if (const auto* pe = std::get_if<graph::PixelEmbedOp>(&n.op)) {
      Act2Tensor codes;
      {
        PhaseGuard phase(Phase::embed);
        codes = pixembed::encode_image(image, pixembed::thermo_params(pe->k, pe->l));
      }
      if (packed) {
        out = pack_activations(codes);
      } else {
        out = std::move(codes);
      }
    } else {
      PhaseGuard phase(std::holds_alternative<graph::AvgPoolScaleOp>(n.op) ? Phase::head : Phase::integer_core);
      if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
        conv(c->spec);
      } else if (const auto* f = std::get_if<graph::FinalConvOp>(&n.op)) {
        conv(f->spec);
      } else if (std::holds_alternative<graph::BnActOp>(n.op)) {
        const auto& acc = std::get<IntAccTensor>(values[n.inputs[0]]);
        const auto& tbl = std::get<quant::ThresholdTable>(model.params[i]);
        if (packed) {
          out = quant::apply_thresholds_packed(acc, tbl);
          if (opts.trace != nullptr)
            opts.trace->codes[n.name] = unpack_activations(std::get<PackedPlanes>(out), acc.dims().channels);
        } else {
          out = quant::apply_thresholds(acc, tbl);
          if (opts.trace != nullptr) opts.trace->codes[n.name] = std::get<Act2Tensor>(out);
        }
      } else if (std::holds_alternative<graph::ResidualAddOp>(n.op)) {
        out = kernels::residual_add(std::get<IntAccTensor>(values[n.inputs[0]]),
                                    std::get<IntAccTensor>(values[n.inputs[1]]));
        if (opts.trace != nullptr && opts.trace->keep_acc) opts.trace->accs[n.name] = std::get<IntAccTensor>(out);
      } else if (std::holds_alternative<graph::AvgPoolScaleOp>(n.op)) {
        logits = kernels::avgpool_and_scale(std::get<IntAccTensor>(values[n.inputs[0]]), model.head_scale);
      }
    }
    for (std::size_t e : n.inputs)
      if (last_use[e] == i) values[e] = std::monostate{};
  }
  return logits;
}

}  // namespace ern
