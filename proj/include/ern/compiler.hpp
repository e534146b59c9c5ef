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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ern/graph.hpp"
#include "ern/quant.hpp"
#include "ern/tensor.hpp"

namespace ern::compiler {

enum class LayerKind { conv, bnact, final_conv };

/// One parametric layer of a float checkpoint. Conv blobs hold OC*IC*KH*KW
/// little-endian float32 weights; bnact blobs hold 4*C float32 values laid
/// out as [gamma | beta | mean | var].
struct LayerRecord {
  std::string name;
  LayerKind kind = LayerKind::conv;
  std::vector<std::size_t> shape;  // conv: (OC, IC, KH, KW); bnact: (C)
  std::string blob;                // path relative to the manifest directory
  double epsilon = 1e-5;           // bnact only
  std::vector<double> act_scale;   // bnact only: one entry, or one per channel

  bool operator==(const LayerRecord&) const = default;
};

struct CheckpointManifest {
  graph::ArchConfig arch;
  int thermo_k = 10;
  double shared_const = 1.0;
  std::vector<LayerRecord> layers;

  bool operator==(const CheckpointManifest&) const = default;
};

/// A manifest plus its blobs, either held in memory or read from `dir`.
struct Checkpoint {
  CheckpointManifest manifest;
  std::filesystem::path dir;
  std::map<std::string, std::vector<float>> blobs;

  /// Throws InputError when the blob is missing or has the wrong size.
  std::vector<float> load_blob(const LayerRecord& layer, std::size_t expected) const;
};

std::string manifest_to_json(const CheckpointManifest& m);
/// Throws InputError on malformed JSON or schema violations.
CheckpointManifest manifest_from_json(const std::string& text);

/// Reads `manifest.json`-style file; blobs are resolved lazily relative to its directory.
Checkpoint read_checkpoint(const std::filesystem::path& manifest_path);
/// Writes manifest.json and every in-memory blob into `dir`. Returns the manifest path.
std::filesystem::path write_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir);

/// The layer list a checkpoint of this architecture must contain, in order.
std::vector<LayerRecord> expected_layers(const graph::GraphDef& g);

/// Seeded float checkpoint: weights ~ N(0, 0.05); gamma in [0.5,1.5],
/// beta in [-0.2,0.2], mean in [-1,1], var in [0.5,2], eps 1e-5; per-layer
/// activation scale in [0.5,2]. Identical seeds give identical blobs.
Checkpoint gen_random_checkpoint(const graph::ArchConfig& arch, std::uint64_t seed, int thermo_k = 10,
                                 double shared_const = 1.0);

/// Pre-folding view of a checkpoint shared by the compiler and the float oracle.
struct PreparedConv {
  FloatTensor signs;          // +/-1
  std::vector<double> alpha;  // per output channel; the shared constant for const-scaled convs
};
struct PreparedBnAct {
  std::vector<quant::BnChannel> bn;
  std::vector<double> act_scale;  // one entry, or one per channel
  bool post_scale = true;
};
using PreparedLayer = std::variant<std::monostate, PreparedConv, PreparedBnAct>;

struct PreparedModel {
  graph::ArchConfig arch;
  int thermo_k = 10;
  double shared_const = 1.0;
  graph::GraphDef graph;
  std::vector<PreparedLayer> layers;  // one per graph node
  std::vector<std::string> warnings;
};

/// Validates the manifest against its architecture, binarizes every conv and
/// reads batch-norm parameters. Throws CompileError naming the layer.
PreparedModel prepare(const Checkpoint& ck, std::optional<double> shared_const = std::nullopt);

/// Integer-only executable model. Conv alphas are folded into the threshold
/// tables downstream; the only real-valued parameters left are the per-class
/// head scales applied after pooling.
struct CompiledModel {
  graph::ArchConfig arch;
  int thermo_k = 10;
  double shared_const = 1.0;
  graph::GraphDef graph;
  std::vector<std::variant<std::monostate, PackedWeights, quant::ThresholdTable>> params;
  std::vector<double> head_scale;

  bool operator==(const CompiledModel&) const = default;
};

struct CompileResult {
  CompiledModel model;
  std::vector<std::string> warnings;
};

CompileResult compile(const Checkpoint& ck, std::optional<double> shared_const = std::nullopt);
CompileResult compile(const PreparedModel& prepared);

/// Rebuilds the graph for `arch` and checks that `params` fit it. Throws ConfigError.
void check_model(const CompiledModel& m);

/// Copy of `ck` with the shared constant multiplied by `factor` and the
/// statistics of every batch-norm reading a shared-constant accumulator
/// rescaled to match (mean * factor, var and eps * factor^2), as training
/// with that constant would produce.
Checkpoint rescale_shared_constant(const Checkpoint& ck, double factor);

inline constexpr std::uint32_t kFormatVersion = 1;

std::vector<std::uint8_t> serialize(const CompiledModel& m);
/// Throws FormatError (bad magic, version mismatch, truncation, checksum failure, malformed).
CompiledModel load(std::span<const std::uint8_t> bytes);

void save_file(const CompiledModel& m, const std::filesystem::path& path);
CompiledModel load_file(const std::filesystem::path& path);

}  // namespace ern::compiler
