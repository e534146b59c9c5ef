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

#include "ern/instrument.hpp"

#include <array>
#include <atomic>

namespace ern::instrument {

namespace {

constexpr int kPhases = static_cast<int>(Phase::count_);

std::array<std::atomic<std::uint64_t>, kPhases> g_counts{};
thread_local Phase t_phase = Phase::outside;

}  // namespace

void count_real_ops(std::uint64_t n) noexcept {
  g_counts[static_cast<int>(t_phase)].fetch_add(n, std::memory_order_relaxed);
}

Phase current_phase() noexcept { return t_phase; }

RealOpCounts snapshot() noexcept {
  RealOpCounts r;
  r.outside = g_counts[0].load();
  r.embed = g_counts[1].load();
  r.integer_core = g_counts[2].load();
  r.head = g_counts[3].load();
  return r;
}

void reset() noexcept {
  for (auto& c : g_counts) c.store(0);
}

PhaseGuard::PhaseGuard(Phase p) noexcept : saved_(t_phase) { t_phase = p; }
PhaseGuard::~PhaseGuard() { t_phase = saved_; }

}  // namespace ern::instrument
