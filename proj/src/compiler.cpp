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

#include <algorithm>
#include <cmath>
#include <string>

#include "ern/compiler.hpp"
#include "ern/error.hpp"

namespace ern::compiler {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

PreparedConv prepare_conv(const Checkpoint& ck, const LayerRecord& rec, bool const_scaled, double c,
                          std::vector<std::string>& warnings) {
  std::size_t n = 1;
  for (std::size_t d : rec.shape) n *= d;
  std::vector<float> blob;
  try {
    blob = ck.load_blob(rec, n);
  } catch (const InputError& e) {
    throw CompileError(rec.name, e.what());
  }
  std::vector<double> w(blob.begin(), blob.end());
  if (!std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); }))
    throw CompileError(rec.name, "non-finite weight");
  quant::BinarizedWeights b = quant::binarize_weights(FloatTensor(rec.shape, std::move(w)));
  if (const_scaled) {
    std::fill(b.alpha.begin(), b.alpha.end(), c);
  } else {
    for (std::size_t o = 0; o < b.alpha.size(); ++o) {
      if (b.alpha[o] == 0.0) {
        warnings.push_back("layer '" + rec.name + "': filter " + std::to_string(o) +
                           " is all zero; using alpha = 1");
        b.alpha[o] = 1.0;
      }
    }
  }
  return PreparedConv{std::move(b.signs), std::move(b.alpha)};
}

PreparedBnAct prepare_bnact(const Checkpoint& ck, const LayerRecord& rec, bool post_scale) {
  const std::size_t c = rec.shape[0];
  std::vector<float> blob;
  try {
    blob = ck.load_blob(rec, 4 * c);
  } catch (const InputError& e) {
    throw CompileError(rec.name, e.what());
  }
  PreparedBnAct p;
  p.post_scale = post_scale;
  if (!std::isfinite(rec.epsilon) || rec.epsilon < 0.0) throw CompileError(rec.name, "epsilon must be >= 0");
  p.bn.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    quant::BnChannel& ch = p.bn[i];
    ch.gamma = blob[i];
    ch.beta = blob[c + i];
    ch.mean = blob[2 * c + i];
    ch.var = blob[3 * c + i];
    ch.eps = rec.epsilon;
    if (!std::isfinite(ch.gamma) || !std::isfinite(ch.beta) || !std::isfinite(ch.mean) || !std::isfinite(ch.var))
      throw CompileError(rec.name, "non-finite batch-norm parameter in channel " + std::to_string(i));
    if (ch.var < 0.0) throw CompileError(rec.name, "negative running variance in channel " + std::to_string(i));
    if (!(ch.var + ch.eps > 0.0)) throw CompileError(rec.name, "var + eps is zero in channel " + std::to_string(i));
  }
  if (rec.act_scale.size() != 1 && rec.act_scale.size() != c)
    throw CompileError(rec.name, "act_scale needs 1 or " + std::to_string(c) + " entries");
  for (double s : rec.act_scale)
    if (!(s > 0.0) || !std::isfinite(s)) throw CompileError(rec.name, "act_scale must be > 0");
  if (post_scale && rec.act_scale.size() != 1)
    throw CompileError(rec.name, "a per-channel act_scale cannot be carried into the next conv");
  p.act_scale = rec.act_scale;
  return p;
}

}  // namespace

PreparedModel prepare(const Checkpoint& ck, std::optional<double> shared_const) {
  const CheckpointManifest& man = ck.manifest;
  PreparedModel m;
  m.arch = man.arch;
  m.thermo_k = man.thermo_k;
  m.shared_const = shared_const.value_or(man.shared_const);
  if (!(m.shared_const > 0.0) || !std::isfinite(m.shared_const)) throw ConfigError("shared constant must be > 0");
  m.graph = graph::build_model(m.arch, m.thermo_k);

  const std::vector<LayerRecord> expected = expected_layers(m.graph);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= man.layers.size()) throw CompileError(expected[i].name, "missing from manifest");
    const LayerRecord& got = man.layers[i];
    const LayerRecord& want = expected[i];
    if (got.name != want.name) throw CompileError(want.name, "manifest has '" + got.name + "' in its place");
    if (got.kind != want.kind) throw CompileError(want.name, "wrong layer kind");
    if (got.shape != want.shape)
      throw CompileError(want.name, "shape " + shape_str(got.shape) + " does not match " + shape_str(want.shape));
  }
  if (man.layers.size() > expected.size())
    throw CompileError(man.layers[expected.size()].name, "not part of architecture '" + m.arch.name + "'");

  m.layers.resize(m.graph.nodes.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < m.graph.nodes.size(); ++i) {
    const graph::Node& n = m.graph.nodes[i];
    if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      m.layers[i] = prepare_conv(ck, man.layers[next++], c->const_scaled, m.shared_const, m.warnings);
    } else if (std::holds_alternative<graph::FinalConvOp>(n.op)) {
      m.layers[i] = prepare_conv(ck, man.layers[next++], false, m.shared_const, m.warnings);
    } else if (const auto* b = std::get_if<graph::BnActOp>(&n.op)) {
      m.layers[i] = prepare_bnact(ck, man.layers[next++], b->post_scale);
    }
  }
  return m;
}

CompileResult compile(const PreparedModel& p) {
  CompileResult r;
  CompiledModel& m = r.model;
  r.warnings = p.warnings;
  m.arch = p.arch;
  m.thermo_k = p.thermo_k;
  m.shared_const = p.shared_const;
  m.graph = p.graph;
  m.params.resize(p.graph.nodes.size());

  const std::vector<std::int64_t> bounds = graph::acc_bounds(p.graph);
  // Real value of an edge per integer unit: one entry per channel for
  // accumulators, a single entry for activation codes.
  std::vector<std::vector<double>> unit(p.graph.edges.size(), std::vector<double>{1.0});

  for (std::size_t i = 0; i < p.graph.nodes.size(); ++i) {
    const graph::Node& n = p.graph.nodes[i];
    const double in_unit = unit[n.inputs[0]][0];
    auto pack = [&](bool const_scaled) {
      const auto& pc = std::get<PreparedConv>(p.layers[i]);
      PackedWeights w = pack_weights(pc.signs, pc.alpha, const_scaled);
      std::vector<double> eff(pc.alpha.size());
      for (std::size_t o = 0; o < eff.size(); ++o) eff[o] = pc.alpha[o] * in_unit;
      w.alpha.clear();
      m.params[i] = std::move(w);
      return eff;
    };
    if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      unit[n.output] = pack(c->const_scaled);
    } else if (std::holds_alternative<graph::FinalConvOp>(n.op)) {
      m.head_scale = pack(false);
    } else if (std::holds_alternative<graph::ResidualAddOp>(n.op)) {
      unit[n.output] = std::vector<double>(p.graph.edges[n.output].channels, p.shared_const);
    } else if (std::holds_alternative<graph::BnActOp>(n.op)) {
      const auto& pb = std::get<PreparedBnAct>(p.layers[i]);
      const std::vector<double>& alpha = unit[n.inputs[0]];
      quant::ThresholdTable tbl;
      tbl.channels.reserve(pb.bn.size());
      for (std::size_t ch = 0; ch < pb.bn.size(); ++ch) {
        const quant::ActParams act{pb.act_scale.size() == 1 ? pb.act_scale[0] : pb.act_scale[ch], 2};
        try {
          tbl.channels.push_back(quant::fuse_thresholds(alpha[ch], pb.bn[ch], act, bounds[n.inputs[0]]));
        } catch (const DomainError& e) {
          throw CompileError(n.name, "channel " + std::to_string(ch) + ": " + e.what());
        }
      }
      m.params[i] = std::move(tbl);
      unit[n.output] = {pb.post_scale ? pb.act_scale[0] : 1.0};
    }
  }
  check_model(m);
  return r;
}

CompileResult compile(const Checkpoint& ck, std::optional<double> shared_const) {
  return compile(prepare(ck, shared_const));
}

void check_model(const CompiledModel& m) {
  if (!(m.shared_const > 0.0) || !std::isfinite(m.shared_const)) throw ConfigError("shared constant must be > 0");
  const graph::GraphDef g = graph::build_model(m.arch, m.thermo_k);
  if (!(g == m.graph)) throw ConfigError("graph does not match architecture '" + m.arch.name + "'");
  if (m.params.size() != g.nodes.size()) throw ConfigError("parameter list does not match the graph");
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const graph::Node& n = g.nodes[i];
    const kernels::ConvSpec* spec = nullptr;
    bool const_scaled = false;
    if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      spec = &c->spec;
      const_scaled = c->const_scaled;
    } else if (const auto* f = std::get_if<graph::FinalConvOp>(&n.op)) {
      spec = &f->spec;
    }
    if (spec != nullptr) {
      const auto* w = std::get_if<PackedWeights>(&m.params[i]);
      if (w == nullptr || w->out_ch != spec->out_ch || w->in_ch != spec->in_ch || w->kh != spec->kh ||
          w->kw != spec->kw || w->const_scaled != const_scaled || !w->alpha.empty() ||
          w->bits.size() != w->out_ch * w->words_per_filter())
        throw ConfigError("node '" + n.name + "': packed weights do not fit the graph");
    } else if (const auto* b = std::get_if<graph::BnActOp>(&n.op)) {
      const auto* t = std::get_if<quant::ThresholdTable>(&m.params[i]);
      if (t == nullptr || t->channels.size() != b->channels)
        throw ConfigError("node '" + n.name + "': threshold table does not fit the graph");
      for (const auto& ch : t->channels)
        if (!std::is_sorted(ch.t.begin(), ch.t.end()))
          throw ConfigError("node '" + n.name + "': thresholds out of order");
    } else if (!std::holds_alternative<std::monostate>(m.params[i])) {
      throw ConfigError("node '" + n.name + "' takes no parameters");
    }
  }
  if (m.head_scale.size() != m.arch.num_classes) throw ConfigError("head scale size does not match num_classes");
  for (double s : m.head_scale)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("head scale must be finite and > 0");
}

Checkpoint rescale_shared_constant(const Checkpoint& ck, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw DomainError("rescale factor must be > 0");
  Checkpoint out = ck;
  out.manifest.shared_const *= factor;
  const graph::GraphDef g = graph::build_model(ck.manifest.arch, ck.manifest.thermo_k);
  for (const graph::Node& n : g.nodes) {
    if (!std::holds_alternative<graph::BnActOp>(n.op)) continue;
    if (g.acc_scale(n.inputs[0]) != graph::AccScale::shared_const) continue;
    auto it = std::find_if(out.manifest.layers.begin(), out.manifest.layers.end(),
                           [&](const LayerRecord& r) { return r.name == n.name; });
    if (it == out.manifest.layers.end()) throw CompileError(n.name, "missing from manifest");
    const std::size_t c = it->shape.at(0);
    std::vector<float> blob = ck.load_blob(*it, 4 * c);
    for (std::size_t i = 0; i < c; ++i) {
      blob[2 * c + i] = static_cast<float>(blob[2 * c + i] * factor);
      blob[3 * c + i] = static_cast<float>(blob[3 * c + i] * factor * factor);
    }
    it->epsilon *= factor * factor;
    out.blobs[it->blob] = std::move(blob);
  }
  return out;
}

}  // namespace ern::compiler
