// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/layout/delay.hpp"

#include <algorithm>
#include <stdexcept>

#include "mctok/io/kv_file.hpp"

namespace mctok::layout {

DelaySpec DelaySpec::canonical(std::size_t codebooks, TokenId vocab_size) {
  std::vector<std::size_t> delays(codebooks);
  for (std::size_t k = 0; k < codebooks; ++k) delays[k] = k;
  return with_delays(std::move(delays), vocab_size);
}

DelaySpec DelaySpec::with_delays(std::vector<std::size_t> delays, TokenId vocab_size) {
  DelaySpec spec{std::move(delays), vocab_size, vocab_size, vocab_size + 1, vocab_size + 2};
  spec.validate();
  return spec;
}

void DelaySpec::validate() const {
  if (delays.empty()) throw std::invalid_argument("DelaySpec: no codebooks");
  if (vocab_size <= 0) throw std::invalid_argument("DelaySpec: vocab_size must be positive");
  if (!std::is_sorted(delays.begin(), delays.end())) throw std::invalid_argument("DelaySpec: delays must be non-decreasing");
  for (TokenId id : {pad_id, bos_id, eos_id}) {
    if (id >= 0 && id < vocab_size) throw std::invalid_argument("DelaySpec: special id inside vocabulary");
  }
  if (pad_id == bos_id || pad_id == eos_id || bos_id == eos_id) {
    throw std::invalid_argument("DelaySpec: special ids must be distinct");
  }
}

DelayedGrid apply_delay(const TokenGrid& grid, const DelaySpec& spec) {
  spec.validate();
  if (grid.codebooks() != spec.codebooks()) {
    throw std::invalid_argument("apply_delay: grid has " + std::to_string(grid.codebooks()) + " codebooks, spec has " +
                                std::to_string(spec.codebooks()));
  }
  const std::size_t frames = grid.frames();
  TokenGrid out(frames + spec.max_delay(), spec.codebooks(), spec.pad_id);
  for (std::size_t k = 0; k < spec.codebooks(); ++k) {
    for (std::size_t t = 0; t < frames; ++t) out.at(t + spec.delays[k], k) = grid.at(t, k);
  }
  return {std::move(out), spec};
}

TokenGrid revert_delay(const DelayedGrid& delayed) {
  const DelaySpec& spec = delayed.spec;
  spec.validate();
  if (delayed.tokens.codebooks() != spec.codebooks()) throw std::invalid_argument("revert_delay: codebook count mismatch");
  if (delayed.tokens.frames() < spec.max_delay()) throw std::invalid_argument("revert_delay: fewer rows than max delay");
  const std::size_t frames = delayed.tokens.frames() - spec.max_delay();
  TokenGrid out(frames, spec.codebooks());
  for (std::size_t k = 0; k < spec.codebooks(); ++k) {
    for (std::size_t t = 0; t < frames; ++t) out.at(t, k) = delayed.tokens.at(t + spec.delays[k], k);
  }
  return out;
}

std::size_t delayed_step(std::size_t frame, std::size_t codebook, const DelaySpec& spec) {
  if (codebook >= spec.codebooks()) throw std::out_of_range("delayed_step: codebook out of range");
  return frame + spec.delays[codebook];
}

std::vector<std::pair<std::size_t, std::size_t>> visible_context(std::size_t step, std::size_t codebook,
                                                                 const DelaySpec& spec,
                                                                 std::optional<std::size_t> num_frames) {
  if (codebook >= spec.codebooks()) throw std::out_of_range("visible_context: codebook out of range");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  // frame + delays[j] < step  <=>  frame < step - delays[j]
  std::size_t frame_limit = 0;
  for (std::size_t j = 0; j < spec.codebooks(); ++j) {
    if (spec.delays[j] < step) frame_limit = std::max(frame_limit, step - spec.delays[j]);
  }
  if (num_frames) frame_limit = std::min(frame_limit, *num_frames);
  for (std::size_t t = 0; t < frame_limit; ++t) {
    for (std::size_t j = 0; j < spec.codebooks(); ++j) {
      if (t + spec.delays[j] < step) out.emplace_back(t, j);
    }
  }
  return out;
}

std::string format_delay_spec(const DelaySpec& spec) {
  std::string delays;
  for (std::size_t k = 0; k < spec.delays.size(); ++k) {
    if (k) delays += ",";
    delays += std::to_string(spec.delays[k]);
  }
  io::KeyValues kv;
  kv.set("delays", delays);
  kv.set("vocab_size", std::to_string(spec.vocab_size));
  kv.set("pad_id", std::to_string(spec.pad_id));
  kv.set("bos_id", std::to_string(spec.bos_id));
  kv.set("eos_id", std::to_string(spec.eos_id));
  return kv.format();
}

DelaySpec parse_delay_spec(std::string_view text) {
  const io::KeyValues kv = io::KeyValues::parse(text);
  DelaySpec spec;
  for (long long d : kv.require_int_list("delays")) {
    if (d < 0) throw std::invalid_argument("DelaySpec: negative delay");
    spec.delays.push_back(static_cast<std::size_t>(d));
  }
  spec.vocab_size = static_cast<TokenId>(kv.require_int("vocab_size"));
  spec.pad_id = static_cast<TokenId>(kv.get_int("pad_id", spec.vocab_size));
  spec.bos_id = static_cast<TokenId>(kv.get_int("bos_id", spec.vocab_size + 1));
  spec.eos_id = static_cast<TokenId>(kv.get_int("eos_id", spec.vocab_size + 2));
  spec.validate();
  return spec;
}

}  // namespace mctok::layout
