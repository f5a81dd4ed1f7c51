// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/nn/multihead_session.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace mctok::nn {

MultiheadSession::MultiheadSession(const MultiheadModel& model, PagePool& pool, layout::DelaySpec spec,
                                   SessionOptions options)
    : model_(&model), pool_(&pool), spec_(std::move(spec)), options_(options) {
  spec_.validate();
  if (spec_.codebooks() != model.config().num_codebooks) throw std::invalid_argument("MultiheadSession: K mismatch");
  if (static_cast<std::size_t>(spec_.vocab_size) != model.config().vocab_size) {
    throw std::invalid_argument("MultiheadSession: vocab mismatch");
  }
  const auto table = static_cast<TokenId>(model.table_size());
  for (TokenId id : {spec_.pad_id, spec_.bos_id, spec_.eos_id}) {
    if (id < 0 || id >= table) throw std::invalid_argument("MultiheadSession: special ids must index the tables");
  }
  options_.sampler.validate();
}

GenerationResult MultiheadSession::prefill_only(std::span<const float> prompt) {
  Clock& clock = options_.clock != nullptr ? *options_.clock : default_clock();
  GenerationResult result;
  AttentionCache cache(*pool_, model_->config().max_seq);
  const std::int64_t start = clock.now_ns();
  model_->backbone().prefill(prompt, cache, &result.counters);
  result.ttft_ns = clock.now_ns() - start;
  return result;
}

MultiheadResult MultiheadSession::run(std::span<const float> prompt, std::size_t frames) {
  if (frames == 0) throw std::invalid_argument("MultiheadSession::run: frames must be at least 1");
  const ModelConfig& cfg = model_->config();
  const std::size_t K = cfg.num_codebooks;
  const std::size_t dim = cfg.model_dim;
  const std::size_t table = model_->table_size();
  const std::size_t max_delay = spec_.max_delay();
  const auto vocab = static_cast<std::size_t>(spec_.vocab_size);
  Clock& clock = options_.clock != nullptr ? *options_.clock : default_clock();
  constexpr float kMasked = -std::numeric_limits<float>::infinity();

  MultiheadResult out;
  GenerationResult& result = out.generation;
  Sampler sampler(options_.sampler, table);
  AttentionCache cache(*pool_, cfg.max_seq);
  auto ws = model_->backbone().make_step_workspace();
  std::vector<float> hidden(dim);
  std::vector<float> input(dim);
  std::vector<float> logits(K * table);
  std::vector<TokenId> row(K);
  TokenGrid delayed(0, K);
  delayed.reserve_frames(frames + max_delay);
  result.frame_wall_ns.reserve(frames);

  const std::int64_t start = clock.now_ns();
  const std::vector<float> prompt_hidden = model_->backbone().prefill(prompt, cache, &result.counters);
  std::copy(prompt_hidden.end() - static_cast<std::ptrdiff_t>(dim), prompt_hidden.end(), hidden.begin());
  result.ttft_ns = clock.now_ns() - start;

  std::size_t frame_limit = frames;
  for (std::size_t step = 0; step < frame_limit + max_delay; ++step) {
    model_->multihead_step(hidden, logits);
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = spec_.pad_id;
      if (step < spec_.delays[k] || step - spec_.delays[k] >= frame_limit) continue;
      float* head = logits.data() + k * table;
      // Only real codes, plus EOS on codebook 0, may be sampled.
      for (std::size_t i = vocab; i < table; ++i) {
        const bool eos_allowed = k == 0 && options_.allow_eos && i == static_cast<std::size_t>(spec_.eos_id);
        if (!eos_allowed) head[i] = kMasked;
      }
      const auto id = static_cast<TokenId>(sampler.sample({head, table}));
      if (id == spec_.eos_id) {
        frame_limit = step - spec_.delays[k];
        result.hit_eos = true;
        continue;
      }
      row[k] = id;
    }
    delayed.append_row(row);
    if (step >= max_delay && step - max_delay < frame_limit) {
      clock.frame_boundary();
      result.frame_wall_ns.push_back(clock.now_ns() - start);
    }
    if (step + 1 >= frame_limit + max_delay) break;
    model_->embed_tokens(row, input);
    model_->backbone().step(input, cache, ws, hidden, &result.counters);
  }

  const std::size_t rows = frame_limit + max_delay;
  std::vector<TokenId> cells(delayed.data().begin(), delayed.data().begin() + static_cast<std::ptrdiff_t>(rows * K));
  out.delayed = layout::DelayedGrid{TokenGrid(rows, K, std::move(cells)), spec_};
  result.tokens = layout::revert_delay(out.delayed);
  return out;
}

}  // namespace mctok::nn
