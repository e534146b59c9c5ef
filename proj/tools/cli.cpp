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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ern/compiler.hpp"
#include "ern/error.hpp"
#include "ern/executor.hpp"
#include "ern/graph.hpp"
#include "ern/image.hpp"
#include "ern/oracle.hpp"

namespace ern::cli {

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct CompileArgs {
  std::string manifest;
  std::string out;
  std::optional<double> shared_const;
};

struct InferArgs {
  std::string model;
  std::string image;
  std::string raw;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t top = 5;
  bool ten_crop = false;
  std::optional<std::size_t> crop_size;
  int threads = 1;
  std::string kernel = "popcount";
};

struct StatsArgs {
  std::string arch;
  std::size_t resolution = 256;
  int thermo_k = 10;
  bool json = false;
};

struct VerifyArgs {
  std::string model;
  std::string manifest;
  std::size_t images = 10;
  std::uint64_t seed = 0;
  std::size_t resolution = 64;
  int threads = 1;
  bool json = false;
};

struct BenchArgs {
  std::string model;
  std::size_t iters = 5;
  int threads = 1;
  std::string kernel = "both";
  std::size_t resolution = 256;
  std::uint64_t seed = 0;
};

struct InitArgs {
  std::string arch;
  std::uint64_t seed = 0;
  std::string out;
  int thermo_k = 10;
  double shared_const = 1.0;
};

KernelPath parse_kernel(const std::string& s) {
  if (s == "naive") return KernelPath::naive;
  if (s == "popcount") return KernelPath::popcount;
  throw UsageError("unknown kernel '" + s + "'");
}

int cmd_compile(const CompileArgs& a, std::ostream& out, std::ostream& err) {
  const compiler::Checkpoint ck = compiler::read_checkpoint(a.manifest);
  const compiler::CompileResult r = compiler::compile(ck, a.shared_const);
  for (const std::string& w : r.warnings) err << "warning: " << w << "\n";
  compiler::save_file(r.model, a.out);
  out << "wrote " << a.out << "\n";
  return kOk;
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const compiler::CompiledModel model = compiler::load_file(a.model);
  ImageU8 img;
  if (!a.raw.empty()) {
    if (a.height == 0 || a.width == 0) throw UsageError("--raw needs --height and --width");
    img = image::read_raw(a.raw, a.height, a.width);
  } else if (!a.image.empty()) {
    img = image::read_ppm(a.image);
  } else {
    throw UsageError("one of --image or --raw is required");
  }
  ExecOptions eo;
  eo.kernel = parse_kernel(a.kernel);
  eo.threads = a.threads;

  std::vector<double> logits;
  if (a.ten_crop) {
    if (!a.crop_size) throw UsageError("--ten-crop needs --crop-size");
    if (*a.crop_size == 0 || *a.crop_size > img.dims.height || *a.crop_size > img.dims.width)
      throw UsageError("crop size " + std::to_string(*a.crop_size) + " does not fit the " +
                       std::to_string(img.dims.height) + "x" + std::to_string(img.dims.width) + " image");
    const auto crops = image::ten_crops(img, *a.crop_size);
    for (const ImageU8& c : crops) {
      const std::vector<double> l = execute(model, c, eo);
      if (logits.empty()) logits.assign(l.size(), 0.0);
      for (std::size_t k = 0; k < l.size(); ++k) logits[k] += l[k];
    }
    for (double& v : logits) v /= static_cast<double>(crops.size());
  } else {
    logits = execute(model, img, eo);
  }

  const std::vector<double> prob = image::softmax(logits);
  std::vector<std::size_t> order(prob.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t top = std::min(a.top, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t x, std::size_t y) { return prob[x] > prob[y] || (prob[x] == prob[y] && x < y); });
  out << std::setprecision(6) << std::fixed;
  for (std::size_t i = 0; i < top; ++i) out << order[i] << " " << prob[order[i]] << "\n";
  return kOk;
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  const graph::ArchConfig cfg = graph::arch_config(a.arch);
  const graph::ModelStats s = graph::model_stats(cfg, a.resolution, a.thermo_k);
  if (a.json) {
    const nlohmann::json j{{"arch", cfg.name},
                           {"resolution", a.resolution},
                           {"param_count", s.param_count},
                           {"binary_weight_bytes", s.binary_weight_bytes},
                           {"padded_weight_bytes", s.padded_weight_bytes},
                           {"macs", s.macs},
                           {"activations", s.activations},
                           {"threshold_channels", s.threshold_channels},
                           {"threshold_bytes", s.threshold_bytes},
                           {"final_layer_params", s.final_layer_params},
                           {"final_layer_bytes", s.final_layer_bytes}};
    out << j.dump(2) << "\n";
    return kOk;
  }
  out << "arch                 " << cfg.name << " @ " << a.resolution << "x" << a.resolution << "\n"
      << "params               " << s.param_count << "\n"
      << "weight bytes         " << s.binary_weight_bytes << "\n"
      << "padded weight bytes  " << s.padded_weight_bytes << "\n"
      << "MACs                 " << s.macs << "\n"
      << "activations          " << s.activations << "\n"
      << "threshold channels   " << s.threshold_channels << "\n"
      << "threshold bytes      " << s.threshold_bytes << "\n"
      << "final layer bytes    " << s.final_layer_bytes << "\n";
  return kOk;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const compiler::CompiledModel model = compiler::load_file(a.model);
  const compiler::Checkpoint ck = compiler::read_checkpoint(a.manifest);
  const oracle::OracleModel om = oracle::build_oracle(ck, model.shared_const);
  std::vector<ImageU8> images;
  for (std::size_t i = 0; i < a.images; ++i) images.push_back(image::random_image(a.seed + i, a.resolution, a.resolution));
  oracle::CrossCheckOptions opts;
  opts.threads = a.threads;
  const oracle::CrossCheckReport rep = oracle::cross_check(model, om, images, opts);
  out << (a.json ? rep.to_json() + "\n" : rep.to_text());
  return rep.passed ? kOk : kVerifyFailed;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const compiler::CompiledModel model = compiler::load_file(a.model);
  const ImageU8 img = image::random_image(a.seed, a.resolution, a.resolution);
  std::vector<KernelPath> paths;
  if (a.kernel == "both") {
    paths = {KernelPath::naive, KernelPath::popcount};
  } else {
    paths = {parse_kernel(a.kernel)};
  }
  if (a.iters == 0) throw UsageError("--iters must be >= 1");
  std::vector<std::vector<double>> results;
  std::vector<double> means;
  out << std::fixed << std::setprecision(2);
  for (KernelPath p : paths) {
    ExecOptions eo;
    eo.kernel = p;
    eo.threads = a.threads;
    double total = 0.0;
    double best = 0.0;
    std::vector<double> logits;
    for (std::size_t i = 0; i < a.iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      logits = execute(model, img, eo);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      total += ms;
      best = i == 0 ? ms : std::min(best, ms);
    }
    means.push_back(total / static_cast<double>(a.iters));
    out << (p == KernelPath::naive ? "naive    " : "popcount ") << "mean " << means.back() << " ms  min " << best
        << " ms\n";
    results.push_back(std::move(logits));
  }
  if (paths.size() == 2) {
    out << "speedup  " << means[0] / means[1] << "x\n";
    if (results[0] != results[1]) {
      out << "logits differ between kernel paths\n";
      return kVerifyFailed;
    }
    out << "logits identical across kernel paths\n";
  }
  return kOk;
}

int cmd_init(const InitArgs& a, std::ostream& out) {
  const compiler::Checkpoint ck =
      compiler::gen_random_checkpoint(graph::arch_config(a.arch), a.seed, a.thermo_k, a.shared_const);
  out << compiler::write_checkpoint(ck, a.out).string() << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integer-only inference for binary-weight, 2-bit activation ResNets", "ern"};
  app.require_subcommand(1);

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Fold a float checkpoint into an .ern model");
  compile->add_option("--manifest", ca.manifest, "Checkpoint manifest (JSON)")->required();
  compile->add_option("--out", ca.out, "Output .ern path")->required();
  compile->add_option("--shared-const", ca.shared_const, "Override the shared constant c");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Classify one image");
  infer->add_option("--model", ia.model, ".ern model")->required();
  infer->add_option("--image", ia.image, "Binary PPM (P6) image");
  infer->add_option("--raw", ia.raw, "Planar CHW uint8 image");
  infer->add_option("--height", ia.height, "Height of a --raw image");
  infer->add_option("--width", ia.width, "Width of a --raw image");
  infer->add_option("--top", ia.top, "Classes to print")->capture_default_str();
  infer->add_flag("--ten-crop", ia.ten_crop, "Average logits over corner, center and mirrored crops");
  infer->add_option("--crop-size", ia.crop_size, "Side of each ten-crop window");
  infer->add_option("--threads", ia.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  infer->add_option("--kernel", ia.kernel, "naive or popcount")->capture_default_str();

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "Parameter, size and MAC counts of an architecture");
  stats->add_option("--arch", sa.arch, "Variant name")->required();
  stats->add_option("--resolution", sa.resolution, "Input side length")->capture_default_str();
  stats->add_option("--thermo-k", sa.thermo_k, "Thermometer length")->capture_default_str();
  stats->add_flag("--json", sa.json, "Machine-readable output");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Cross-check a model against the float reference");
  verify->add_option("--model", va.model, ".ern model")->required();
  verify->add_option("--manifest", va.manifest, "Checkpoint the model was compiled from")->required();
  verify->add_option("--images", va.images, "Random images to check")->capture_default_str();
  verify->add_option("--seed", va.seed, "Image seed")->capture_default_str();
  verify->add_option("--resolution", va.resolution, "Image side length")->capture_default_str();
  verify->add_option("--threads", va.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  verify->add_flag("--json", va.json, "Machine-readable report");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time inference per kernel path");
  bench->add_option("--model", ba.model, ".ern model")->required();
  bench->add_option("--iters", ba.iters, "Timed runs per path")->capture_default_str();
  bench->add_option("--threads", ba.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--kernel", ba.kernel, "naive, popcount or both")->capture_default_str();
  bench->add_option("--resolution", ba.resolution, "Image side length")->capture_default_str();
  bench->add_option("--seed", ba.seed, "Image seed")->capture_default_str();

  InitArgs na;
  auto* init = app.add_subcommand("init-random", "Write a seeded random float checkpoint");
  init->add_option("--arch", na.arch, "Variant name")->required();
  init->add_option("--seed", na.seed, "Seed")->capture_default_str();
  init->add_option("--out", na.out, "Output directory")->required();
  init->add_option("--thermo-k", na.thermo_k, "Thermometer length")->capture_default_str();
  init->add_option("--shared-const", na.shared_const, "Shared constant c")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*compile) return cmd_compile(ca, out, err);
    if (*infer) return cmd_infer(ia, out);
    if (*stats) return cmd_stats(sa, out);
    if (*verify) return cmd_verify(va, out);
    if (*bench) return cmd_bench(ba, out);
    if (*init) return cmd_init(na, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kUsage;
}

}  // namespace ern::cli
