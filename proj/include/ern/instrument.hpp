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

// Accounting of real-valued arithmetic. Every library routine that computes
// with floating point reports the number of elements it processed against
// the calling thread's current phase. The executor brackets its stages with
// PhaseGuard so tests can check that the integer core performs none.
namespace ern::instrument {

enum class Phase : int { outside = 0, embed, integer_core, head, count_ };

struct RealOpCounts {
  std::uint64_t outside = 0;
  std::uint64_t embed = 0;
  std::uint64_t integer_core = 0;
  std::uint64_t head = 0;
};

void count_real_ops(std::uint64_t n) noexcept;

Phase current_phase() noexcept;

RealOpCounts snapshot() noexcept;
void reset() noexcept;

class PhaseGuard {
 public:
  explicit PhaseGuard(Phase p) noexcept;
  ~PhaseGuard();
  PhaseGuard(const PhaseGuard&) = delete;
  PhaseGuard& operator=(const PhaseGuard&) = delete;

 private:
  Phase saved_;
};

}  // namespace ern::instrument
