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

#include "ern/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ern/error.hpp"
#include "ern/instrument.hpp"
#include "ern/pixembed.hpp"
#include "ern/quant.hpp"

namespace ern::oracle {

namespace {

// A real feature map; activation edges keep their codes alongside.
struct RealMap {
  Dims3 dims;
  std::vector<double> v;
};

RealMap float_conv(const RealMap& x, const compiler::PreparedConv& pc, const kernels::ConvSpec& s) {
  if (x.dims.channels != s.in_ch) throw ShapeError("oracle conv input channel mismatch");
  const std::size_t oh = s.out_height(x.dims.height);
  const std::size_t ow = s.out_width(x.dims.width);
  RealMap out{Dims3{s.out_ch, oh, ow}, std::vector<double>(s.out_ch * oh * ow, 0.0)};
  const std::size_t h = x.dims.height;
  const std::size_t w = x.dims.width;
  instrument::count_real_ops(static_cast<std::uint64_t>(s.out_ch) * s.fan_in() * oh * ow);
  for (std::size_t o = 0; o < s.out_ch; ++o) {
    double* dst = out.v.data() + o * oh * ow;
    for (std::size_t c = 0; c < s.in_ch; ++c) {
      const double* src = x.v.data() + c * h * w;
      for (std::size_t i = 0; i < s.kh; ++i) {
        for (std::size_t j = 0; j < s.kw; ++j) {
          const double wt = pc.signs.at(o, c, i, j) * pc.alpha[o];
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride_h + i) - static_cast<std::ptrdiff_t>(s.pad_h);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* row = src + static_cast<std::size_t>(iy) * w;
            double* drow = dst + oy * ow;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * s.stride_w + j) - static_cast<std::ptrdiff_t>(s.pad_w);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              drow[ox] += wt * row[ix];
            }
          }
        }
      }
    }
  }
  return out;
}

RealMap codes_to_real(const Act2Tensor& a, double scale) {
  instrument::count_real_ops(a.dims().size());
  RealMap m{a.dims(), std::vector<double>(a.dims().size())};
  const auto codes = a.codes();
  for (std::size_t n = 0; n < codes.size(); ++n) m.v[n] = codes[n] * scale;
  return m;
}

}  // namespace

OracleModel build_oracle(const compiler::Checkpoint& ck, std::optional<double> shared_const) {
  return OracleModel{compiler::prepare(ck, shared_const)};
}

bool is_boundary(double v, double scale) {
  const double r = v / scale;
  const double n = std::round(r);
  return n >= 1.0 && n <= 3.0 && std::fabs(r - n) < kTieTolerance;
}

OracleResult oracle_execute(const OracleModel& om, const ImageU8& image, const OracleOptions& opts) {
  const compiler::PreparedModel& pm = om.prepared;
  const graph::GraphDef& g = pm.graph;
  if (image.dims.channels != 3) throw ShapeError("image must have 3 channels");
  if (image.pixels.size() != image.dims.size()) throw ShapeError("image pixel count does not match its dims");
  graph::infer_shapes(g, image.dims.height, image.dims.width);

  OracleResult res;
  std::vector<RealMap> real(g.edges.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const graph::Node& n = g.nodes[i];
    RealMap& out = real[n.output];
    if (const auto* pe = std::get_if<graph::PixelEmbedOp>(&n.op)) {
      out = codes_to_real(pixembed::encode_image(image, pixembed::thermo_params(pe->k, pe->l)), 1.0);
    } else if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      out = float_conv(real[n.inputs[0]], std::get<compiler::PreparedConv>(pm.layers[i]), c->spec);
      if (opts.keep_residual && c->const_scaled) res.residual[n.name] = FloatTensor({out.dims.channels, out.dims.height, out.dims.width}, out.v);
    } else if (const auto* f = std::get_if<graph::FinalConvOp>(&n.op)) {
      out = float_conv(real[n.inputs[0]], std::get<compiler::PreparedConv>(pm.layers[i]), f->spec);
    } else if (std::holds_alternative<graph::ResidualAddOp>(n.op)) {
      const RealMap& a = real[n.inputs[0]];
      const RealMap& b = real[n.inputs[1]];
      if (!(a.dims == b.dims)) throw ShapeError("oracle residual operands differ in shape");
      instrument::count_real_ops(a.v.size());
      out = RealMap{a.dims, std::vector<double>(a.v.size())};
      for (std::size_t e = 0; e < a.v.size(); ++e) out.v[e] = a.v[e] + b.v[e];
      if (opts.keep_residual) res.residual[n.name] = FloatTensor({out.dims.channels, out.dims.height, out.dims.width}, out.v);
    } else if (std::holds_alternative<graph::BnActOp>(n.op)) {
      const auto& p = std::get<compiler::PreparedBnAct>(pm.layers[i]);
      const RealMap& x = real[n.inputs[0]];
      const Act2Tensor* canon = nullptr;
      if (opts.canonical != nullptr) {
        auto it = opts.canonical->codes.find(n.name);
        if (it != opts.canonical->codes.end() && it->second.dims() == x.dims) canon = &it->second;
      }
      std::vector<std::uint8_t> codes(x.v.size());
      std::vector<std::uint8_t> mask(x.v.size(), 0);
      const std::size_t plane = x.dims.plane();
      for (std::size_t ch = 0; ch < x.dims.channels; ++ch) {
        const quant::ActParams act{p.act_scale.size() == 1 ? p.act_scale[0] : p.act_scale[ch], 2};
        for (std::size_t e = ch * plane; e < (ch + 1) * plane; ++e) {
          const double v = quant::bn_preactivation(1.0, p.bn[ch], x.v[e]);
          codes[e] = quant::quantize_act_float(v, act);
          if (is_boundary(v, act.scale)) {
            mask[e] = 1;
            if (canon != nullptr) codes[e] = canon->codes()[e];
          }
        }
      }
      Act2Tensor a(x.dims, std::move(codes));
      out = codes_to_real(a, p.post_scale ? p.act_scale[0] : 1.0);
      res.codes[n.name] = std::move(a);
      res.boundary[n.name] = std::move(mask);
    } else if (std::holds_alternative<graph::AvgPoolScaleOp>(n.op)) {
      const RealMap& x = real[n.inputs[0]];
      const std::size_t plane = x.dims.plane();
      instrument::count_real_ops(x.v.size());
      res.logits.assign(x.dims.channels, 0.0);
      for (std::size_t ch = 0; ch < x.dims.channels; ++ch) {
        double sum = 0.0;
        for (std::size_t e = ch * plane; e < (ch + 1) * plane; ++e) sum += x.v[e];
        res.logits[ch] = sum / static_cast<double>(plane);
      }
    }
  }
  return res;
}

std::uint64_t CrossCheckReport::total_mismatches() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.mismatches;
  return n;
}

std::uint64_t CrossCheckReport::total_boundary() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.boundary;
  return n;
}

std::string CrossCheckReport::to_json() const {
  nlohmann::json layer_list = nlohmann::json::array();
  for (const auto& l : layers)
    layer_list.push_back({{"name", l.name},
                          {"compared", l.compared},
                          {"mismatches", l.mismatches},
                          {"boundary", l.boundary},
                          {"boundary_mismatches", l.boundary_mismatches}});
  nlohmann::json j{{"passed", passed},
                   {"images", images},
                   {"mismatches", total_mismatches()},
                   {"boundary", total_boundary()},
                   {"logit_failures", logit_failures},
                   {"max_logit_rel_error", max_logit_rel_error},
                   {"residual_mismatches", residual_mismatches},
                   {"layers", std::move(layer_list)}};
  j["first_divergent_layer"] = first_divergent_layer ? nlohmann::json(*first_divergent_layer) : nlohmann::json();
  if (!structural_error.empty()) j["structural_error"] = structural_error;
  return j.dump(2);
}

std::string CrossCheckReport::to_text() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << ": " << images << " images, " << layers.size() << " activation layers\n";
  if (!structural_error.empty()) os << "structural mismatch: " << structural_error << "\n";
  os << "code mismatches: " << total_mismatches() << " (boundary positions: " << total_boundary() << ")\n";
  os << "logit failures: " << logit_failures << ", max relative error " << max_logit_rel_error << "\n";
  os << "residual mismatches: " << residual_mismatches << "\n";
  if (first_divergent_layer) os << "first divergent layer: " << *first_divergent_layer << "\n";
  for (const auto& l : layers)
    if (l.mismatches != 0 || l.boundary != 0)
      os << "  " << l.name << ": " << l.mismatches << " mismatches, " << l.boundary << " boundary ("
         << l.boundary_mismatches << " differing)\n";
  return os.str();
}

CrossCheckReport cross_check(const compiler::CompiledModel& model, const OracleModel& om,
                             std::span<const ImageU8> images, const CrossCheckOptions& opts) {
  CrossCheckReport rep;
  const graph::GraphDef& g = model.graph;
  if (!(g == om.prepared.graph)) {
    rep.passed = false;
    rep.structural_error = "engine and oracle graphs differ";
    for (std::size_t i = 0; i < std::max(g.nodes.size(), om.prepared.graph.nodes.size()); ++i) {
      if (i >= g.nodes.size() || i >= om.prepared.graph.nodes.size() || !(g.nodes[i] == om.prepared.graph.nodes[i])) {
        rep.first_divergent_layer = i < g.nodes.size() ? g.nodes[i].name : om.prepared.graph.nodes[i].name;
        break;
      }
    }
    return rep;
  }

  std::vector<std::size_t> act_nodes;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (std::holds_alternative<graph::BnActOp>(g.nodes[i].op)) {
      act_nodes.push_back(i);
      rep.layers.push_back(LayerReport{g.nodes[i].name});
    }
  }

  std::size_t first = g.nodes.size();
  const double c = model.shared_const;
  for (const ImageU8& img : images) {
    ++rep.images;
    ExecTrace trace;
    trace.keep_acc = true;
    ExecOptions eo;
    eo.kernel = opts.kernel;
    eo.threads = opts.threads;
    eo.trace = &trace;
    const std::vector<double> logits = execute(model, img, eo);
    const OracleResult ref = oracle_execute(om, img, OracleOptions{&trace, true});

    for (std::size_t k = 0; k < act_nodes.size(); ++k) {
      const std::string& name = g.nodes[act_nodes[k]].name;
      LayerReport& lr = rep.layers[k];
      const auto engine = trace.codes.at(name).codes();
      const auto oracle = ref.codes.at(name).codes();
      const auto& mask = ref.boundary.at(name);
      lr.compared += engine.size();
      for (std::size_t e = 0; e < engine.size(); ++e) {
        if (mask[e]) {
          ++lr.boundary;
          lr.boundary_mismatches += engine[e] != oracle[e];
        } else if (engine[e] != oracle[e]) {
          ++lr.mismatches;
        }
      }
      if (lr.mismatches != 0) first = std::min(first, act_nodes[k]);
    }

    for (const auto& [name, real] : ref.residual) {
      const auto values = trace.accs.at(name).values();
      const auto r = real.data();
      for (std::size_t e = 0; e < values.size(); ++e) {
        const double want = c * values[e];
        if (std::fabs(r[e] - want) > 1e-9 * std::max(1.0, std::fabs(want))) ++rep.residual_mismatches;
      }
    }

    double scale = 0.0;
    for (double v : logits) scale = std::max(scale, std::fabs(v));
    if (ref.logits.size() != logits.size()) {
      rep.logit_failures += std::max(ref.logits.size(), logits.size());
      continue;
    }
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const double err = std::fabs(logits[k] - ref.logits[k]);
      const double rel = err == 0.0 ? 0.0 : err / std::max(scale, 1e-300);
      rep.max_logit_rel_error = std::max(rep.max_logit_rel_error, rel);
      if (rel > opts.logit_rtol) ++rep.logit_failures;
    }
  }
  if (first < g.nodes.size()) rep.first_divergent_layer = g.nodes[first].name;
  rep.passed = rep.total_mismatches() == 0 && rep.logit_failures == 0 && rep.residual_mismatches == 0;
  return rep;
}

}  // namespace ern::oracle
