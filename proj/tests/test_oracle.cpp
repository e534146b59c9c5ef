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

#include <doctest.h>

#include <cmath>
#include <random>

#include "ern/compiler.hpp"
#include "ern/error.hpp"
#include "ern/executor.hpp"
#include "ern/image.hpp"
#include "ern/oracle.hpp"

using namespace ern;
using compiler::Checkpoint;
using compiler::LayerKind;

namespace {

graph::ArchConfig small_arch() {
  graph::ArchConfig a;
  a.name = "small";
  a.blocks = {1, 1};
  a.widths = {64, 128};
  a.num_classes = 16;
  return a;
}

compiler::LayerRecord& record(Checkpoint& ck, const std::string& name) {
  for (auto& r : ck.manifest.layers)
    if (r.name == name) return r;
  FAIL("no layer " << name);
  return ck.manifest.layers.front();
}

// Writes gamma/beta/mean/var into every channel of a bnact blob.
void set_bn(Checkpoint& ck, const std::string& name, float gamma, float beta, float mean, float var, double eps,
            double scale) {
  auto& r = record(ck, name);
  const std::size_t c = r.shape[0];
  auto& blob = ck.blobs[r.blob];
  for (std::size_t i = 0; i < c; ++i) {
    blob[i] = gamma;
    blob[c + i] = beta;
    blob[2 * c + i] = mean;
    blob[3 * c + i] = var;
  }
  r.epsilon = eps;
  r.act_scale = {scale};
}

// Two channels everywhere, one stage, 1x1 inputs: every 3x3 conv sees only
// its center tap, so the whole network reduces to small matrix products.
struct Toy {
  graph::ArchConfig arch;
  Checkpoint ck;
};

Toy make_toy(std::uint64_t seed) {
  Toy t;
  t.arch.name = "toy";
  t.arch.blocks = {1};
  t.arch.widths = {2};
  t.arch.stem_channels = 2;
  t.arch.num_classes = 3;
  t.arch.lane_multiple = 1;
  t.ck = compiler::gen_random_checkpoint(t.arch, seed, 1, 0.5);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::uniform_real_distribution<double> beta(0.1, 2.9);
  for (auto& r : t.ck.manifest.layers) {
    auto& blob = t.ck.blobs[r.blob];
    if (r.kind == LayerKind::bnact) {
      const std::size_t c = r.shape[0];
      for (std::size_t i = 0; i < c; ++i) {
        blob[i] = 1.0f;
        blob[c + i] = static_cast<float>(beta(rng));
        blob[2 * c + i] = 0.0f;
        blob[3 * c + i] = 1.0f;
      }
      r.epsilon = 0.0;
      r.act_scale = {1.0};
    } else {
      for (float& w : blob) w = static_cast<float>(((rng() & 1u) ? 1.0 : -1.0) * mag(rng));
    }
  }
  return t;
}

// The toy network evaluated directly from the checkpoint blobs.
struct HandResult {
  std::vector<double> logits;
  std::map<std::string, std::vector<int>> codes;
};

HandResult hand_evaluate(Checkpoint& ck, std::array<std::uint8_t, 3> rgb) {
  HandResult res;
  const double c = ck.manifest.shared_const;
  // k = 1: s = 85 and code = floor(x / 85).
  std::vector<double> x{double(rgb[0] / 85), double(rgb[1] / 85), double(rgb[2] / 85)};

  auto conv = [&](const std::string& name, const std::vector<double>& in, bool const_scaled) {
    auto& r = record(ck, name);
    const std::size_t oc = r.shape[0], ic = r.shape[1], kh = r.shape[2], kw = r.shape[3];
    const auto& w = ck.blobs.at(r.blob);
    std::vector<double> out(oc, 0.0);
    for (std::size_t o = 0; o < oc; ++o) {
      double alpha = 0.0;
      for (std::size_t e = 0; e < ic * kh * kw; ++e) alpha += std::fabs(w[o * ic * kh * kw + e]);
      alpha /= double(ic * kh * kw);
      if (const_scaled) alpha = c;
      for (std::size_t i = 0; i < ic; ++i) {
        const float tap = w[((o * ic + i) * kh + kh / 2) * kw + kw / 2];
        out[o] += alpha * (tap >= 0 ? 1.0 : -1.0) * in[i];
      }
    }
    return out;
  };
  auto act = [&](const std::string& name, const std::vector<double>& in) {
    auto& r = record(ck, name);
    const auto& b = ck.blobs.at(r.blob);
    const std::size_t n = in.size();
    std::vector<int> codes(n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = b[i] * (in[i] - b[2 * n + i]) / std::sqrt(b[3 * n + i] + r.epsilon) + b[n + i];
      codes[i] = std::clamp(static_cast<int>(std::floor(y / r.act_scale[0])), 0, 3);
      out[i] = codes[i];
    }
    res.codes[name] = codes;
    return out;
  };
  auto add = [](std::vector<double> a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  };

  auto h = act("stem.bnact0", conv("stem.conv0", x, false));
  h = act("stem.bnact1", conv("stem.conv1", h, false));
  h = act("stem.bnact2", conv("stem.conv2", h, false));
  const auto stem = conv("stem.conv3", h, true);
  h = act("stage1.block0.bnact0", stem);
  h = act("stage1.block0.bnact1", conv("stage1.block0.conv1", h, false));
  const auto sum = add(conv("stage1.block0.conv2", h, true), stem);
  h = act("head.bnact", sum);
  res.logits = conv("head.fc", h, false);
  return res;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("is_boundary") {
    CHECK(oracle::is_boundary(1.0, 1.0));
    CHECK(oracle::is_boundary(1.5, 0.5));
    CHECK(oracle::is_boundary(3.0 + 1e-12, 1.0));
    CHECK_FALSE(oracle::is_boundary(3.0 + 1e-6, 1.0));
    CHECK_FALSE(oracle::is_boundary(0.0, 1.0));
    CHECK_FALSE(oracle::is_boundary(4.0, 1.0));
    CHECK_FALSE(oracle::is_boundary(-1.0, 1.0));
    CHECK_FALSE(oracle::is_boundary(1.5, 1.0));
  }

  TEST_CASE("a 1x1 toy network matches a hand evaluation") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      CAPTURE(seed);
      Toy t = make_toy(seed);
      const auto model = compiler::compile(t.ck).model;
      const auto om = oracle::build_oracle(t.ck);
      std::mt19937_64 rng(seed * 7);
      const std::array<std::uint8_t, 3> rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
      const ImageU8 img = image::constant_image(rgb[0], rgb[1], rgb[2], 1, 1);

      const HandResult hand = hand_evaluate(t.ck, rgb);
      const auto ref = oracle::oracle_execute(om, img);
      ExecTrace trace;
      const auto logits = execute(model, img, {KernelPath::popcount, 1, {}, &trace});
      for (const auto& [name, codes] : hand.codes) {
        CAPTURE(name);
        for (std::size_t i = 0; i < codes.size(); ++i) {
          CHECK(ref.codes.at(name).codes()[i] == codes[i]);
          CHECK(trace.codes.at(name).codes()[i] == codes[i]);
        }
      }
      REQUIRE(logits.size() == 3);
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(ref.logits[k] == doctest::Approx(hand.logits[k]).epsilon(1e-12));
        CHECK(logits[k] == doctest::Approx(hand.logits[k]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("a zero image yields the batch-norm offset code") {
    const Checkpoint ck = compiler::gen_random_checkpoint(small_arch(), 13);
    const auto model = compiler::compile(ck).model;
    const auto om = oracle::build_oracle(ck);
    const ImageU8 img = image::constant_image(0, 0, 0, 12, 12);
    ExecTrace trace;
    execute(model, img, {KernelPath::popcount, 1, {}, &trace});
    const auto ref = oracle::oracle_execute(om, img);

    const auto& pb = std::get<compiler::PreparedBnAct>(om.prepared.layers[2]);
    REQUIRE(om.prepared.graph.nodes[2].name == "stem.bnact0");
    const auto& codes = trace.codes.at("stem.bnact0");
    const std::size_t plane = codes.dims().plane();
    for (std::size_t ch = 0; ch < pb.bn.size(); ++ch) {
      const auto& bn = pb.bn[ch];
      const double b = bn.beta - bn.gamma * bn.mean / std::sqrt(bn.var + bn.eps);
      const int want = std::clamp(static_cast<int>(std::floor(b / pb.act_scale[0])), 0, 3);
      for (std::size_t e = ch * plane; e < (ch + 1) * plane; ++e) {
        CHECK(codes.codes()[e] == want);
        CHECK(ref.codes.at("stem.bnact0").codes()[e] == want);
      }
    }
  }

  TEST_CASE("cross check passes on random models and images") {
    const Checkpoint ck = compiler::gen_random_checkpoint(small_arch(), 3);
    const auto model = compiler::compile(ck).model;
    const auto om = oracle::build_oracle(ck);
    std::vector<ImageU8> images;
    for (std::uint64_t s = 0; s < 4; ++s) images.push_back(image::random_image(s, 40, 24));
    for (KernelPath path : {KernelPath::naive, KernelPath::popcount}) {
      const auto rep = oracle::cross_check(model, om, images, {path, 1, 1e-6});
      CHECK(rep.passed);
      CHECK(rep.images == 4);
      CHECK(rep.total_mismatches() == 0);
      CHECK(rep.residual_mismatches == 0);
      CHECK(rep.max_logit_rel_error < 1e-9);
      CHECK_FALSE(rep.first_divergent_layer.has_value());
      CHECK(rep.to_text().rfind("PASS", 0) == 0);
    }
  }

  TEST_CASE("cross check holds for other shared constants") {
    const Checkpoint ck = compiler::gen_random_checkpoint(small_arch(), 3, 10, 0.37);
    const auto model = compiler::compile(ck).model;
    const std::vector<ImageU8> images{image::random_image(8, 32, 32)};
    CHECK(oracle::cross_check(model, oracle::build_oracle(ck), images).passed);
  }

  TEST_CASE("an injected fault is located") {
    const Checkpoint ck = compiler::gen_random_checkpoint(small_arch(), 3);
    auto model = compiler::compile(ck).model;
    const auto om = oracle::build_oracle(ck);
    const std::string target = "stage1.block0.bnact1";
    for (std::size_t i = 0; i < model.graph.nodes.size(); ++i) {
      if (model.graph.nodes[i].name != target) continue;
      for (auto& ch : std::get<quant::ThresholdTable>(model.params[i]).channels) {
        ch.t = {-1'000'000, -1'000'000, -1'000'000};
        ch.dir = quant::Direction::ascending;
        ch.degenerate = false;
      }
    }
    const std::vector<ImageU8> images{image::random_image(1, 32, 32)};
    const auto rep = oracle::cross_check(model, om, images);
    CHECK_FALSE(rep.passed);
    REQUIRE(rep.first_divergent_layer.has_value());
    CHECK(*rep.first_divergent_layer == target);
    CHECK(rep.to_text().find("first divergent layer: " + target) != std::string::npos);
    for (const auto& l : rep.layers) {
      if (l.name == target) break;
      CHECK(l.mismatches == 0);
    }
  }

  TEST_CASE("exact ties are reported but do not fail the check") {
    Checkpoint ck = compiler::gen_random_checkpoint(small_arch(), 5);
    set_bn(ck, "stage1.block0.bnact0", 1.0f, 0.0f, 0.0f, 0.75f, 0.25, 1.0);
    const auto model = compiler::compile(ck).model;
    const auto om = oracle::build_oracle(ck);
    const std::vector<ImageU8> images{image::random_image(2, 32, 32), image::random_image(3, 32, 32)};
    const auto rep = oracle::cross_check(model, om, images);
    CHECK(rep.passed);
    CHECK(rep.total_boundary() > 0);
    for (const auto& l : rep.layers) {
      if (l.name == "stage1.block0.bnact0") {
        CHECK(l.boundary > 0);
        CHECK(l.boundary_mismatches == 0);
      }
    }
  }

  TEST_CASE("graph mismatches are structural errors") {
    const Checkpoint a = compiler::gen_random_checkpoint(small_arch(), 1);
    graph::ArchConfig other = small_arch();
    other.widths = {64, 64};
    const Checkpoint b = compiler::gen_random_checkpoint(other, 1);
    const std::vector<ImageU8> images{image::random_image(1, 16, 16)};
    const auto rep = oracle::cross_check(compiler::compile(a).model, oracle::build_oracle(b), images);
    CHECK_FALSE(rep.passed);
    CHECK_FALSE(rep.structural_error.empty());
    CHECK(rep.first_divergent_layer.has_value());
    CHECK(rep.to_json().find("structural_error") != std::string::npos);
  }

  TEST_CASE("json report") {
    const Checkpoint ck = compiler::gen_random_checkpoint(small_arch(), 3);
    const std::vector<ImageU8> images{image::random_image(1, 16, 16)};
    const auto rep = oracle::cross_check(compiler::compile(ck).model, oracle::build_oracle(ck), images);
    const std::string j = rep.to_json();
    CHECK(j.find("\"passed\": true") != std::string::npos);
    CHECK(j.find("\"first_divergent_layer\": null") != std::string::npos);
  }
}
