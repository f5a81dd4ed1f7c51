// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mctok/nn/config.hpp"
#include "mctok/nn/kv_store.hpp"

namespace mctok::nn {

struct BlockWeights {
  std::vector<float> attn_norm;  // [dim]
  std::vector<float> wq;         // [kv_dim x dim]
  std::vector<float> wk;
  std::vector<float> wv;
  std::vector<float> wo;         // [dim x kv_dim]
  std::vector<float> mlp_norm;   // [dim]
  std::vector<float> w_up;       // [ffn x dim]
  std::vector<float> w_down;     // [dim x ffn]
};

// Pre-norm decoder blocks (RMSNorm, rotary causal self-attention, SiLU MLP)
// followed by a final RMSNorm. Weights are immutable after construction and
// may be shared between threads; all mutable state lives in Workspace and the
// caller's KvStore.
class TransformerStack {
 public:
  TransformerStack(const StackShape& shape, std::uint64_t seed);

  // Scratch for up to `max_rows` rows per forward call. Sized once; forward()
  // never allocates.
  struct Workspace {
    Workspace(const StackShape& shape, std::size_t max_rows);
    std::size_t max_rows;
    std::vector<float> x, xn, q, k, v, attn, proj, up, scores;
  };

  // Runs `rows` consecutive positions starting at `start_pos` through every
  // block. Rows are processed layer by layer, so a multi-row call is a single
  // batched pass; per element the arithmetic equals `rows` single-row calls.
  // The KvStore must already cover positions [0, start_pos + rows).
  // Adds `layers` to *block_counter per row when the pointer is non-null.
  void forward(const float* input, std::size_t rows, std::size_t start_pos, KvStore& kv, Workspace& ws,
               float* output, std::uint64_t* block_counter = nullptr) const;

  const StackShape& shape() const { return shape_; }

  void for_each_parameter(const std::function<void(std::span<float>)>& fn);

 private:
  void rms_norm(const float* x, const float* gain, float* out) const;
  void apply_rope(float* row, std::size_t pos) const;

  StackShape shape_;
  std::vector<BlockWeights> blocks_;
  std::vector<float> final_norm_;
  std::vector<float> rope_cos_;  // [max_positions x head_dim/2]
  std::vector<float> rope_sin_;
};

// Fills `w` with seeded uniform values in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_uniform(std::span<float> w, std::size_t fan_in, std::uint64_t seed);

}  // namespace mctok::nn
