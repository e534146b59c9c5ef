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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ern/compiler.hpp"
#include "ern/kernels.hpp"
#include "ern/tensor.hpp"

namespace ern {

enum class KernelPath { naive, popcount };

/// Intermediate maps recorded during execution, keyed by node name.
struct ExecTrace {
  /// Also keep every accumulator map (memory heavy on large inputs).
  bool keep_acc = false;
  std::map<std::string, Act2Tensor> codes;
  std::map<std::string, IntAccTensor> accs;
};

struct ExecOptions {
  KernelPath kernel = KernelPath::popcount;
  int threads = 1;
  std::optional<kernels::Isa> isa;
  ExecTrace* trace = nullptr;
};

/// Runs the integer pipeline on a (3, H, W) image and returns the logits.
/// Everything between the pixel embedding and the final conv is integer
/// arithmetic. Throws ShapeError for malformed or empty images.
std::vector<double> execute(const compiler::CompiledModel& model, const ImageU8& image,
                            const ExecOptions& opts = {});

}  // namespace ern
