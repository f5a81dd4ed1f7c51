// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mctok/clock.hpp"
#include "mctok/nn/counters.hpp"
#include "mctok/nn/sampler.hpp"
#include "mctok/rvq/quantizer.hpp"
#include "mctok/token_grid.hpp"

namespace mctok::nn {

struct SessionOptions {
  SamplerConfig sampler;
  // How a frame's per-codebook embeddings are combined into the next
  // backbone input (hierarchy mode).
  rvq::EmbeddingAggregation feedback = rvq::EmbeddingAggregation::kSum;
  // When false the EOS logit is masked, so runs always produce the requested
  // number of frames (benchmarks).
  bool allow_eos = true;
  Clock* clock = nullptr;  // nullptr: steady clock
};

struct GenerationResult {
  TokenGrid tokens;  // aligned [frames x K], EOS frame excluded
  // Completion time of each frame, relative to request start.
  std::vector<std::int64_t> frame_wall_ns;
  // Request start to first backbone hidden state.
  std::int64_t ttft_ns = 0;
  // Decoder steps observed when the first hidden state became available.
  std::uint64_t decoder_steps_at_first_token = 0;
  bool hit_eos = false;
  RuntimeCounters counters;
};

}  // namespace mctok::nn
