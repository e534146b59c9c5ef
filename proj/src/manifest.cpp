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

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include <json.hpp>

#include "ern/compiler.hpp"
#include "ern/error.hpp"

namespace ern::compiler {

namespace {

using nlohmann::json;

constexpr const char* kManifestFormat = "ern-checkpoint";
constexpr int kManifestVersion = 1;

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv:
      return "conv";
    case LayerKind::bnact:
      return "bnact";
    case LayerKind::final_conv:
      return "final_conv";
  }
  return "conv";
}

LayerKind parse_kind(const std::string& s) {
  if (s == "conv") return LayerKind::conv;
  if (s == "bnact") return LayerKind::bnact;
  if (s == "final_conv") return LayerKind::final_conv;
  throw InputError("unknown layer kind '" + s + "'");
}

json arch_to_json(const graph::ArchConfig& a) {
  return json{{"name", a.name},
              {"block", a.block == graph::BlockType::bottleneck ? "bottleneck" : "conv_block"},
              {"blocks", a.blocks},
              {"widths", a.widths},
              {"stem_channels", a.stem_channels},
              {"num_classes", a.num_classes},
              {"stride_on_first_conv", a.stride_on_first_conv},
              {"lane_multiple", a.lane_multiple}};
}

graph::ArchConfig arch_from_json(const json& j) {
  if (j.is_string()) return graph::arch_config(j.get<std::string>());
  graph::ArchConfig a;
  a.name = j.at("name").get<std::string>();
  const std::string block = j.at("block").get<std::string>();
  if (block == "conv_block") {
    a.block = graph::BlockType::conv_block;
  } else if (block == "bottleneck") {
    a.block = graph::BlockType::bottleneck;
  } else {
    throw InputError("unknown block type '" + block + "'");
  }
  a.blocks = j.at("blocks").get<std::vector<std::size_t>>();
  a.widths = j.at("widths").get<std::vector<std::size_t>>();
  a.stem_channels = j.value("stem_channels", a.stem_channels);
  a.num_classes = j.value("num_classes", a.num_classes);
  a.stride_on_first_conv = j.value("stride_on_first_conv", false);
  a.lane_multiple = j.value("lane_multiple", a.lane_multiple);
  return a;
}

std::size_t product(const std::vector<std::size_t>& v) {
  std::size_t p = 1;
  for (std::size_t d : v) p *= d;
  return p;
}

std::vector<float> decode_f32(const std::vector<char>& bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 3; b >= 0; --b) u = (u << 8) | static_cast<unsigned char>(bytes[4 * i + b]);
    std::memcpy(&out[i], &u, 4);
  }
  return out;
}

std::vector<char> encode_f32(const std::vector<float>& v) {
  std::vector<char> out(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t u = 0;
    std::memcpy(&u, &v[i], 4);
    for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xffu);
  }
  return out;
}

// Portable draws: libstdc++ distributions are not specified bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double stddev) {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

std::vector<float> Checkpoint::load_blob(const LayerRecord& layer, std::size_t expected) const {
  std::vector<float> data;
  if (auto it = blobs.find(layer.blob); it != blobs.end()) {
    data = it->second;
  } else {
    const std::filesystem::path p = dir / layer.blob;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("missing blob '" + p.string() + "'");
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) throw InputError("blob '" + p.string() + "' is not a float32 array");
    data = decode_f32(bytes);
  }
  if (data.size() != expected)
    throw InputError("blob '" + layer.blob + "' holds " + std::to_string(data.size()) + " values, expected " +
                     std::to_string(expected));
  return data;
}

std::string manifest_to_json(const CheckpointManifest& m) {
  json layers = json::array();
  for (const LayerRecord& r : m.layers) {
    json l{{"name", r.name}, {"kind", kind_name(r.kind)}, {"blob", r.blob}};
    if (r.kind == LayerKind::bnact) {
      l["channels"] = r.shape.empty() ? 0 : r.shape[0];
      l["epsilon"] = r.epsilon;
      if (r.act_scale.size() == 1) {
        l["act_scale"] = r.act_scale[0];
      } else {
        l["act_scale"] = r.act_scale;
      }
    } else {
      l["shape"] = r.shape;
    }
    layers.push_back(std::move(l));
  }
  const json j{{"format", kManifestFormat},          {"version", kManifestVersion},
               {"arch", arch_to_json(m.arch)},       {"thermo_k", m.thermo_k},
               {"shared_const", m.shared_const},     {"layers", std::move(layers)}};
  return j.dump(2) + "\n";
}

CheckpointManifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != kManifestFormat) throw InputError("not an ern-checkpoint manifest");
    if (j.value("version", 0) != kManifestVersion)
      throw InputError("unsupported manifest version " + j.value("version", json(0)).dump());
    CheckpointManifest m;
    m.arch = arch_from_json(j.at("arch"));
    m.thermo_k = j.value("thermo_k", 10);
    m.shared_const = j.value("shared_const", 1.0);
    if (m.thermo_k < 1) throw InputError("thermo_k must be >= 1");
    if (!(m.shared_const > 0.0) || !std::isfinite(m.shared_const)) throw InputError("shared_const must be > 0");
    for (const json& l : j.at("layers")) {
      LayerRecord r;
      r.name = l.at("name").get<std::string>();
      r.kind = parse_kind(l.at("kind").get<std::string>());
      r.blob = l.at("blob").get<std::string>();
      if (r.kind == LayerKind::bnact) {
        r.shape = {l.at("channels").get<std::size_t>()};
        r.epsilon = l.value("epsilon", 1e-5);
        const json& s = l.at("act_scale");
        r.act_scale = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
      } else {
        r.shape = l.at("shape").get<std::vector<std::size_t>>();
      }
      m.layers.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw InputError("cannot read manifest '" + manifest_path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Checkpoint ck;
  ck.manifest = manifest_from_json(text);
  ck.dir = manifest_path.parent_path();
  return ck;
}

std::filesystem::path write_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const LayerRecord& r : ck.manifest.layers) {
    const std::size_t n = r.kind == LayerKind::bnact ? 4 * product(r.shape) : product(r.shape);
    const std::vector<char> bytes = encode_f32(ck.load_blob(r, n));
    const std::filesystem::path p = dir / r.blob;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("cannot write blob '" + p.string() + "'");
  }
  const std::filesystem::path mp = dir / "manifest.json";
  std::ofstream out(mp, std::ios::binary | std::ios::trunc);
  out << manifest_to_json(ck.manifest);
  if (!out) throw InputError("cannot write manifest '" + mp.string() + "'");
  return mp;
}

std::vector<LayerRecord> expected_layers(const graph::GraphDef& g) {
  std::vector<LayerRecord> out;
  for (const graph::Node& n : g.nodes) {
    LayerRecord r;
    r.name = n.name;
    r.blob = n.name + ".bin";
    if (const auto* c = std::get_if<graph::ConvOp>(&n.op)) {
      r.kind = LayerKind::conv;
      r.shape = {c->spec.out_ch, c->spec.in_ch, c->spec.kh, c->spec.kw};
    } else if (const auto* f = std::get_if<graph::FinalConvOp>(&n.op)) {
      r.kind = LayerKind::final_conv;
      r.shape = {f->spec.out_ch, f->spec.in_ch, f->spec.kh, f->spec.kw};
    } else if (const auto* b = std::get_if<graph::BnActOp>(&n.op)) {
      r.kind = LayerKind::bnact;
      r.shape = {b->channels};
      r.act_scale = {1.0};
    } else {
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

Checkpoint gen_random_checkpoint(const graph::ArchConfig& arch, std::uint64_t seed, int thermo_k,
                                 double shared_const) {
  Checkpoint ck;
  ck.manifest.arch = arch;
  ck.manifest.thermo_k = thermo_k;
  ck.manifest.shared_const = shared_const;
  ck.manifest.layers = expected_layers(graph::build_model(arch, thermo_k));
  Rng rng(seed);
  for (LayerRecord& r : ck.manifest.layers) {
    std::vector<float> data;
    if (r.kind == LayerKind::bnact) {
      const std::size_t c = r.shape[0];
      data.resize(4 * c);
      for (std::size_t i = 0; i < c; ++i) data[i] = static_cast<float>(rng.uniform(0.5, 1.5));
      for (std::size_t i = 0; i < c; ++i) data[c + i] = static_cast<float>(rng.uniform(-0.2, 0.2));
      for (std::size_t i = 0; i < c; ++i) data[2 * c + i] = static_cast<float>(rng.uniform(-1.0, 1.0));
      for (std::size_t i = 0; i < c; ++i) data[3 * c + i] = static_cast<float>(rng.uniform(0.5, 2.0));
      r.epsilon = 1e-5;
      r.act_scale = {rng.uniform(0.5, 2.0)};
    } else {
      data.resize(product(r.shape));
      for (float& w : data) w = static_cast<float>(rng.normal(0.05));
    }
    ck.blobs[r.blob] = std::move(data);
  }
  return ck;
}

}  // namespace ern::compiler
