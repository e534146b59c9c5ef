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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ern/compiler.hpp"
#include "ern/executor.hpp"

// Float reference for the compiled engine. It runs the unfolded layer math
// literally: real weights sign * alpha, real convolutions, batch-norm and the
// float quantizer, and real residual sums.
namespace ern::oracle {

/// Pre-activation values within this distance (in units of s_a) of a code
/// boundary are ties; the engine's threshold result is canonical there.
inline constexpr double kTieTolerance = 1e-9;

struct OracleModel {
  compiler::PreparedModel prepared;
};

OracleModel build_oracle(const compiler::Checkpoint& ck, std::optional<double> shared_const = std::nullopt);

/// True when v / s_a lies within kTieTolerance of a boundary 1, 2 or 3.
bool is_boundary(double v, double scale);

struct OracleOptions {
  /// When set, tie positions continue with the engine's code so a single
  /// tie does not cascade into later layers.
  const ExecTrace* canonical = nullptr;
  /// Record the real accumulator maps of residual-stream edges.
  bool keep_residual = false;
};

struct OracleResult {
  std::vector<double> logits;
  std::map<std::string, Act2Tensor> codes;
  /// Per bnact node, 1 where the pre-activation sits on a code boundary.
  std::map<std::string, std::vector<std::uint8_t>> boundary;
  /// Real maps of shared-constant accumulator edges, keyed by producing node.
  std::map<std::string, FloatTensor> residual;
};

OracleResult oracle_execute(const OracleModel& om, const ImageU8& image, const OracleOptions& opts = {});

struct LayerReport {
  std::string name;
  std::uint64_t compared = 0;
  std::uint64_t mismatches = 0;           // outside boundary positions
  std::uint64_t boundary = 0;             // boundary positions seen
  std::uint64_t boundary_mismatches = 0;  // of which the codes differ
};

struct CrossCheckReport {
  bool passed = true;
  std::size_t images = 0;
  std::vector<LayerReport> layers;
  std::optional<std::string> first_divergent_layer;
  std::uint64_t logit_failures = 0;
  double max_logit_rel_error = 0.0;
  std::uint64_t residual_mismatches = 0;
  std::string structural_error;

  std::uint64_t total_mismatches() const;
  std::uint64_t total_boundary() const;
  std::string to_json() const;
  std::string to_text() const;
};

struct CrossCheckOptions {
  KernelPath kernel = KernelPath::popcount;
  int threads = 1;
  /// Logits must agree within this fraction of the largest logit magnitude.
  double logit_rtol = 1e-6;
};

/// Runs engine and oracle on every image and compares every activation map,
/// the residual streams and the logits.
CrossCheckReport cross_check(const compiler::CompiledModel& model, const OracleModel& om,
                             std::span<const ImageU8> images, const CrossCheckOptions& opts = {});

}  // namespace ern::oracle
