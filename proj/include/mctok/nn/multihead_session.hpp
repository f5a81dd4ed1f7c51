// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "mctok/layout/delay.hpp"
#include "mctok/nn/model.hpp"
#include "mctok/nn/paged_cache.hpp"
#include "mctok/nn/session.hpp"

namespace mctok::nn {

struct MultiheadResult {
  GenerationResult generation;  // aligned tokens and per-frame completion times
  layout::DelayedGrid delayed;   // the layout actually decoded, step by step
};

// Delay-pattern decoding: every step runs one backbone position and all K
// heads at once. Head k at step s fills aligned cell (s - delays[k], k) or
// pad when that frame does not exist. A codebook-0 EOS fixes the frame count;
// the remaining streams flush for max(delays) steps.
class MultiheadSession {
 public:
  MultiheadSession(const MultiheadModel& model, PagePool& pool, layout::DelaySpec spec, SessionOptions options = {});

  MultiheadResult run(std::span<const float> prompt, std::size_t frames);
  GenerationResult prefill_only(std::span<const float> prompt);

  const layout::DelaySpec& spec() const { return spec_; }

 private:
  const MultiheadModel* model_;
  PagePool* pool_;
  layout::DelaySpec spec_;
  SessionOptions options_;
};

}  // namespace mctok::nn
