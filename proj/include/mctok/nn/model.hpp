// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mctok/nn/config.hpp"
#include "mctok/nn/counters.hpp"
#include "mctok/nn/paged_cache.hpp"
#include "mctok/nn/transformer.hpp"
#include "mctok/token_grid.hpp"

namespace mctok::nn {

using ParameterVisitor = std::function<void(std::span<float>)>;

// Outer autoregressive model: embeddings in, hidden states out. Consumes
// vectors directly, never token ids.
class Backbone {
 public:
  explicit Backbone(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const TransformerStack& stack() const { return stack_; }

  // Whole prompt in one batched pass. `embeddings` is [n x model_dim]; the
  // cache must be empty. Returns [n x model_dim] hidden states.
  std::vector<float> prefill(std::span<const float> embeddings, AttentionCache& cache,
                             RuntimeCounters* counters = nullptr) const;

  // One position appended after the cached prefix. Allocation-free apart from
  // the page the cache may take at a page boundary.
  void step(std::span<const float> embedding, AttentionCache& cache, TransformerStack::Workspace& ws,
            std::span<float> hidden, RuntimeCounters* counters = nullptr) const;
  std::vector<float> step(std::span<const float> embedding, AttentionCache& cache) const;

  TransformerStack::Workspace make_step_workspace() const { return {backbone_shape(config_), 1}; }

  // A pool large enough for `sequences` full-length sequences.
  std::unique_ptr<PagePool> make_pool(std::size_t sequences, std::size_t page_size = 16) const;

  void for_each_parameter(const ParameterVisitor& fn) { stack_.for_each_parameter(fn); }

 private:
  ModelConfig config_;
  TransformerStack stack_;
};

// Backbone plus K parallel output heads and K input embedding tables, for
// delay-pattern decoding. Every table spans vocab_size + 3 ids so pad, bos and
// eos have rows.
class MultiheadModel {
 public:
  explicit MultiheadModel(const ModelConfig& config);

  const ModelConfig& config() const { return backbone_.config(); }
  const Backbone& backbone() const { return backbone_; }
  std::size_t table_size() const { return config().vocab_size + 3; }

  // K independent linear heads over one hidden state. `logits` is
  // [K x table_size].
  void multihead_step(std::span<const float> hidden, std::span<float> logits) const;
  std::vector<std::vector<float>> multihead_step(std::span<const float> hidden) const;

  // Sum over codebooks of the embedding rows for `tokens` (one id per codebook).
  void embed_tokens(std::span<const TokenId> tokens, std::span<float> out) const;

  void for_each_parameter(const ParameterVisitor& fn);

  // Heads only; tests use this to build degenerate models.
  std::vector<float>& head_weights(std::size_t k) { return heads_[k]; }

  std::string descriptor() const;
  std::vector<std::uint8_t> to_blob();
  static MultiheadModel from_blob(std::span<const std::uint8_t> bytes);
  static MultiheadModel from_descriptor(std::string_view text);

 private:
  Backbone backbone_;
  std::vector<std::vector<float>> heads_;       // K x [table_size x dim]
  std::vector<std::vector<float>> embeddings_;  // K x [table_size x dim]
};

// "QNN1" weight container: magic, u32-length-prefixed kind and descriptor
// strings, u32 tensor count, then per tensor a u32 float count and the f32
// payload, all little-endian.
struct WeightBlob {
  std::string kind;
  std::string descriptor;
  std::vector<std::vector<float>> tensors;
};

std::vector<std::uint8_t> encode_weight_blob(std::string_view kind, std::string_view descriptor,
                                             const std::function<void(const ParameterVisitor&)>& visit);
WeightBlob decode_weight_blob(std::span<const std::uint8_t> bytes);
// Copies blob tensors into a freshly constructed model, checking every shape.
void load_tensors(const WeightBlob& blob, const std::function<void(const ParameterVisitor&)>& visit);

}  // namespace mctok::nn
