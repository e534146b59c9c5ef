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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when a
// gating criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "checks.hpp"
#include "ern/compiler.hpp"
#include "ern/executor.hpp"
#include "ern/graph.hpp"
#include "ern/image.hpp"
#include "ern/instrument.hpp"
#include "ern/oracle.hpp"
#include "ern/pixembed.hpp"

using namespace ern;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::function<Outcome()>& body, bool gating = true) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass && gating) ++failures;
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(1);
  line << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << " [" << s << " s]";
  if (!gating) line << " (non-gating)";
  std::cout << line.str() << std::endl;
}

Outcome kernel_equivalence() {
  const auto r = testing::sweep_kernels(20260101, 1000);
  std::string isas;
  for (const auto& i : r.isas) isas += (isas.empty() ? "" : ",") + i;
  std::ostringstream d;
  d << r.instances << " random convs, " << r.comparisons << " kernel comparisons over {" << isas << "}, "
    << r.mismatches << " mismatches, " << r.bound_violations << " bound violations";
  if (!r.first_failure.empty()) d << "; first: " << r.first_failure;
  return {r.instances >= 1000 && r.mismatches == 0 && r.bound_violations == 0, d.str()};
}

Outcome fusion_exactness() {
  const auto r = testing::sweep_fusion(20260102, 200, 1024);
  std::ostringstream d;
  d << r.draws << " channel draws, " << r.evaluated << " accumulators, " << r.mismatches << " mismatches, "
    << r.ties << " ties";
  if (!r.first_failure.empty()) d << "; first: " << r.first_failure;
  return {r.draws == 200 && r.mismatches == 0, d.str()};
}

Outcome thermometer() {
  const auto p = pixembed::thermo_params(2, 2);
  std::set<std::vector<std::uint8_t>> distinct;
  std::vector<int> transitions;
  std::vector<std::uint8_t> prev;
  for (int x = 0; x < 256; ++x) {
    auto z = pixembed::encode_pixel(static_cast<std::uint8_t>(x), p);
    if (x > 0 && z != prev) transitions.push_back(x);
    distinct.insert(z);
    prev = std::move(z);
  }
  bool monotone = true;
  for (int k = 1; k <= 32; ++k) {
    const auto pk = pixembed::thermo_params(k, 2);
    std::vector<std::uint8_t> last(static_cast<std::size_t>(k), 0);
    for (int x = 0; x < 256; ++x) {
      const auto z = pixembed::encode_pixel(static_cast<std::uint8_t>(x), pk);
      for (int i = 0; i < k; ++i) monotone = monotone && z[i] >= last[i];
      last = z;
    }
  }
  std::string t;
  for (int x : transitions) t += (t.empty() ? "" : ",") + std::to_string(x);
  const bool ok = distinct.size() == 7 && transitions == std::vector<int>{42, 84, 126, 168, 210, 252} && monotone;
  return {ok, "k=2: " + std::to_string(distinct.size()) + " codes, transitions at " + t +
                  (monotone ? "; monotone for k=1..32" : "; NOT monotone")};
}

Outcome mac_arithmetic() {
  const auto a = graph::conv_stats(kernels::ConvSpec::square(3, 64, 7, 2), 224, 224).macs;
  const auto b = graph::conv_stats(kernels::ConvSpec::square(30, 64, 7, 2), 224, 224).macs;
  return {a == 118'013'952u && b == 1'180'139'520u,
          "7x7/2 3->64 @224: " + std::to_string(a) + " MACs; 30->64: " + std::to_string(b) + " MACs"};
}

Outcome model_sizes() {
  const auto r18 = graph::model_stats(graph::arch_config("erns18"), 256);
  const auto r50 = graph::model_stats(graph::arch_config("erns50"), 256);
  const auto r101 = graph::model_stats(graph::arch_config("erns101"), 256);
  const auto x075 = graph::model_stats(graph::arch_config("erns18x075"), 256);
  constexpr double mib = 1024.0 * 1024.0;
  const double s50 = static_cast<double>(r50.binary_weight_bytes);
  const double s101 = static_cast<double>(r101.binary_weight_bytes);
  const bool ok = r18.final_layer_bytes == 64'000u && r50.final_layer_bytes == 256'000u &&
                  std::abs(s50 - 3.1e6) <= 0.31e6 && std::abs(s101 - 5.6e6) <= 0.56e6 &&
                  x075.binary_weight_bytes <= 1'100'000u;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "final layers %llu B (%.3f MiB) and %llu B (%.3f MiB); weights-only erns50 %.3f MB, erns101 %.3f MB, "
                "erns18x075 %.3f MB (%.3f MiB)",
                static_cast<unsigned long long>(r18.final_layer_bytes), r18.final_layer_bytes / mib,
                static_cast<unsigned long long>(r50.final_layer_bytes), r50.final_layer_bytes / mib, s50 / 1e6,
                s101 / 1e6, x075.binary_weight_bytes / 1e6, x075.binary_weight_bytes / mib);
  return {ok, buf};
}

Outcome integer_only() {
  std::ostringstream d;
  bool ok = true;
  for (const auto& v : graph::variant_names()) {
    const auto m = compiler::compile(compiler::gen_random_checkpoint(graph::arch_config(v), 6)).model;
    std::uint64_t core = 0, outside = 0;
    for (KernelPath path : {KernelPath::popcount, KernelPath::naive}) {
      instrument::reset();
      execute(m, image::random_image(6, 64, 64), {path, 1, {}, nullptr});
      const auto ops = instrument::snapshot();
      core += ops.integer_core;
      outside += ops.embed + ops.head;
    }
    ok = ok && core == 0 && outside > 0;
    d << (d.tellp() > 0 ? " " : "") << v << "=" << core;
  }
  return {ok, "real ops inside the integer core per variant (both kernel paths): " + d.str()};
}

Outcome oracle_equivalence() {
  std::ostringstream d;
  bool ok = true;
  std::vector<ImageU8> images;
  for (std::uint64_t s = 0; s < 10; ++s) images.push_back(image::random_image(1000 + s, 64, 64));
  for (const auto& v : graph::variant_names()) {
    const auto ck = compiler::gen_random_checkpoint(graph::arch_config(v), 7);
    const auto rep = oracle::cross_check(compiler::compile(ck).model, oracle::build_oracle(ck), images);
    ok = ok && rep.passed && rep.images == 10;
    d << v << " " << rep.total_mismatches() << " mismatches/" << rep.total_boundary() << " ties/"
      << rep.logit_failures << " logit failures; ";
  }
  const auto ck = compiler::gen_random_checkpoint(graph::arch_config("erns18"), 8);
  const std::vector<ImageU8> big{image::random_image(77, 256, 256)};
  const auto rep = oracle::cross_check(compiler::compile(ck).model, oracle::build_oracle(ck), big);
  ok = ok && rep.passed;
  d << "erns18 @256 smoke " << (rep.passed ? "passed" : "failed") << " (" << rep.total_mismatches()
    << " mismatches, max logit rel err " << rep.max_logit_rel_error << ")";
  return {ok, "10 images @64 per variant: " + d.str()};
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("ern_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const auto ck = compiler::gen_random_checkpoint(graph::arch_config("erns18"), 9);
  const auto p1 = compiler::write_checkpoint(ck, dir / "a");
  const auto p2 = compiler::write_checkpoint(compiler::gen_random_checkpoint(graph::arch_config("erns18"), 9), dir / "b");
  const auto m = compiler::compile(compiler::read_checkpoint(p1)).model;
  const auto bytes = compiler::serialize(m);
  const bool same_bytes = bytes == compiler::serialize(compiler::compile(compiler::read_checkpoint(p2)).model);
  compiler::save_file(m, dir / "m.ern");
  const auto back = compiler::load_file(dir / "m.ern");
  const bool round_trip = back == m && compiler::serialize(back) == bytes;
  std::filesystem::remove_all(dir);

  const ImageU8 img = image::random_image(10, 96, 96);
  const auto ref = execute(m, img, {KernelPath::popcount, 1, {}, nullptr});
  bool same_logits = execute(m, img, {KernelPath::popcount, 1, {}, nullptr}) == ref &&
                     execute(back, img, {KernelPath::popcount, 1, {}, nullptr}) == ref;
  for (int threads : {2, 4, 8}) same_logits = same_logits && execute(m, img, {KernelPath::popcount, threads, {}, nullptr}) == ref;
  same_logits = same_logits && execute(m, img, {KernelPath::naive, 3, {}, nullptr}) == ref;
  return {same_bytes && round_trip && same_logits,
          std::string("identical manifests -> identical .ern: ") + (same_bytes ? "yes" : "no") +
              "; round trip exact: " + (round_trip ? "yes" : "no") +
              "; logits identical across runs, threads 1/2/4/8 and kernel paths: " + (same_logits ? "yes" : "no")};
}

Outcome performance() {
  const auto m = compiler::compile(compiler::gen_random_checkpoint(graph::arch_config("erns18"), 11)).model;
  const ImageU8 img = image::random_image(12, 256, 256);
  auto time_ms = [&](KernelPath p) {
    const auto t0 = std::chrono::steady_clock::now();
    execute(m, img, {p, 1, {}, nullptr});
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  const double naive = time_ms(KernelPath::naive);
  const double pop = std::min(time_ms(KernelPath::popcount), time_ms(KernelPath::popcount));
  char buf[200];
  std::snprintf(buf, sizeof buf, "erns18 @256 single thread: naive %.0f ms, popcount %.0f ms (%s), speedup %.1fx (target 3x)",
                naive, pop, std::string(kernels::isa_name(kernels::default_isa())).c_str(), naive / pop);
  return {naive / pop >= 3.0, buf};
}

}  // namespace

int main() {
  report(1, kernel_equivalence);
  report(2, fusion_exactness);
  report(3, thermometer);
  report(4, mac_arithmetic);
  report(5, model_sizes);
  report(6, integer_only);
  report(7, oracle_equivalence);
  report(8, determinism);
  report(9, performance, false);
  std::cout << "N/A  criterion 10: ImageNet accuracy, training-recipe and FPGA results are out of scope; "
               "criteria 1-8 substitute"
            << std::endl;
  std::cout << (failures == 0 ? "acceptance: all gating criteria passed" : "acceptance: gating failures") << std::endl;
  return failures == 0 ? 0 : 1;
}
