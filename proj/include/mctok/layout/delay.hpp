// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mctok/token_grid.hpp"

namespace mctok::layout {

// Per-codebook frame offsets for delay-pattern decoding. Special ids sit just
// above the vocabulary: pad = V, bos = V + 1, eos = V + 2.
struct DelaySpec {
  std::vector<std::size_t> delays;
  TokenId vocab_size = 0;
  TokenId pad_id = 0;
  TokenId bos_id = 0;
  TokenId eos_id = 0;

  // delays = 0, 1, ..., K-1.
  static DelaySpec canonical(std::size_t codebooks, TokenId vocab_size);
  // Arbitrary non-decreasing delays with the standard special ids.
  static DelaySpec with_delays(std::vector<std::size_t> delays, TokenId vocab_size);

  std::size_t codebooks() const { return delays.size(); }
  std::size_t max_delay() const { return delays.empty() ? 0 : delays.back(); }

  // Throws std::invalid_argument on decreasing delays or special ids that
  // collide with the vocabulary or each other.
  void validate() const;

  friend bool operator==(const DelaySpec&, const DelaySpec&) = default;
};

struct DelayedGrid {
  TokenGrid tokens;  // (T + max_delay) x K
  DelaySpec spec;
};

// Cell (s, k) of the result holds grid(s - delays[k], k) when that frame
// exists, pad_id otherwise.
DelayedGrid apply_delay(const TokenGrid& grid, const DelaySpec& spec);

// Inverse of apply_delay; pad cells are dropped.
TokenGrid revert_delay(const DelayedGrid& delayed);

// Decode step at which aligned cell (frame, codebook) is emitted.
std::size_t delayed_step(std::size_t frame, std::size_t codebook, const DelaySpec& spec);

// Aligned cells (frame, codebook) already emitted before `step`, i.e. the
// context the head for `codebook` may condition on at that step. Sorted by
// frame then codebook. `num_frames` clips to a finite utterance.
std::vector<std::pair<std::size_t, std::size_t>> visible_context(std::size_t step, std::size_t codebook,
                                                                 const DelaySpec& spec,
                                                                 std::optional<std::size_t> num_frames = std::nullopt);

std::string format_delay_spec(const DelaySpec& spec);
DelaySpec parse_delay_spec(std::string_view text);

}  // namespace mctok::layout
