// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace mctok::nn {

// Per-session instrumentation. Plain integers: a session is single-threaded.
struct RuntimeCounters {
  std::uint64_t backbone_positions = 0;
  std::uint64_t backbone_blocks = 0;
  // Calls into the per-frame decoder (one per frame) and its inner steps.
  std::uint64_t decoder_invocations = 0;
  std::uint64_t decoder_steps = 0;
  std::uint64_t decoder_blocks = 0;
  // Buffer allocations made by the static frame decoder after construction.
  std::uint64_t decoder_allocations = 0;
};

}  // namespace mctok::nn
