// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mctok/nn/config.hpp"
#include "mctok/nn/counters.hpp"
#include "mctok/nn/model.hpp"
#include "mctok/nn/sampler.hpp"
#include "mctok/nn/transformer.hpp"
#include "mctok/token_grid.hpp"

namespace mctok::hier {

struct StackedDecoderConfig {
  std::size_t decoder_layers = 2;
  std::size_t decoder_dim = 128;
  std::size_t heads = 2;
  std::size_t head_dim = 64;
  std::size_t ffn_dim = 512;
  std::size_t codebooks = 8;
  std::vector<std::size_t> vocab_sizes;  // one per codebook
  std::size_t backbone_dim = 256;
  std::uint64_t seed = 0;

  // Defaults sized for `backbone`: K and vocabularies taken from it.
  static StackedDecoderConfig for_backbone(const nn::ModelConfig& backbone);
  void validate() const;

  nn::StackShape shape() const {
    return {decoder_layers, decoder_dim, heads, head_dim, ffn_dim, codebooks};
  }
};

// Inner autoregressive model over the K codebooks of one frame. Position 0
// input is the backbone hidden state projected to decoder_dim; position k > 0
// input is the embedding of the frame's token k - 1. Output at position k
// predicts token k. Head 0 has one extra logit for EOS.
class StackedDecoder {
 public:
  explicit StackedDecoder(const StackedDecoderConfig& config);

  const StackedDecoderConfig& config() const { return config_; }
  const nn::TransformerStack& stack() const { return stack_; }
  std::size_t codebooks() const { return config_.codebooks; }

  std::size_t head_size(std::size_t k) const { return config_.vocab_sizes[k] + (k == 0 ? 1 : 0); }
  std::size_t head_offset(std::size_t k) const { return head_offsets_[k]; }
  std::size_t total_logits() const { return head_offsets_.back(); }
  std::size_t max_head_size() const;

  // Token id emitted for codebook 0's EOS logit (vocab + 2, the layout's eos).
  TokenId eos_id() const { return static_cast<TokenId>(config_.vocab_sizes[0] + 2); }

  // Decoder input for position k: projection of `hidden` at k = 0, otherwise
  // the embedding of `previous` (the token of codebook k - 1).
  void position_input(std::size_t k, std::span<const float> hidden, TokenId previous, float* out) const;
  void head_logits(std::size_t k, const float* decoder_hidden, float* logits) const;
  TokenId index_to_token(std::size_t k, std::size_t index) const;

  void for_each_parameter(const nn::ParameterVisitor& fn);

 private:
  std::size_t table_row(std::size_t codebook, TokenId token) const;

  StackedDecoderConfig config_;
  nn::TransformerStack stack_;
  std::vector<float> input_proj_;                // [decoder_dim x backbone_dim]
  std::vector<std::vector<float>> embeddings_;   // K-1 tables, codebook k feeds position k+1
  std::vector<std::vector<float>> heads_;        // K x [head_size(k) x decoder_dim]
  std::vector<std::size_t> head_offsets_;
};

// Key/value block with capacity fixed at K positions per layer. Allocated once;
// reset() rewinds the fill count without touching storage.
class FrameKvBlock final : public nn::KvStore {
 public:
  FrameKvBlock(std::size_t layers, std::size_t capacity, std::size_t kv_dim);

  float* key(std::size_t layer, std::size_t pos) override;
  float* value(std::size_t layer, std::size_t pos) override;

  std::size_t capacity() const { return capacity_; }
  std::size_t fill_count() const { return fill_count_; }
  void mark_filled(std::size_t pos) { fill_count_ = pos + 1; }
  void reset() { fill_count_ = 0; }
  const float* storage() const { return storage_.data(); }

 private:
  std::size_t layers_;
  std::size_t capacity_;
  std::size_t kv_dim_;
  std::size_t fill_count_ = 0;
  std::vector<float> storage_;
};

struct FrameOptions {
  // When non-empty, token k is taken from here instead of being sampled; the
  // logits are still computed.
  std::span<const TokenId> forced;
  // When non-empty, receives the raw logits of every head
  // ([total_logits], head k at head_offset(k)).
  std::span<float> logits_out;
  bool allow_eos = true;
};

// Static execution of the stacked decoder: one pre-sized FrameKvBlock and
// pre-sized scratch, so steady-state decode_frame performs no allocation and
// exactly K x decoder_layers block invocations.
class StaticFrameDecoder {
 public:
  explicit StaticFrameDecoder(const StackedDecoder& decoder);

  FrameKvBlock& block() { return block_; }
  const FrameKvBlock& block() const { return block_; }
  void reset() { block_.reset(); }

  // Emits K tokens into `codes`. The block must have been reset since the last
  // frame (ContractViolation otherwise).
  void decode_frame(std::span<const float> hidden, nn::Sampler& sampler, std::span<TokenId> codes,
                    const FrameOptions& options = {}, nn::RuntimeCounters* counters = nullptr);

  std::size_t bytes_reserved() const;

 private:
  const StackedDecoder* decoder_;
  FrameKvBlock block_;
  nn::TransformerStack::Workspace ws_;
  std::vector<float> input_;
  std::vector<float> hidden_;
  std::vector<float> logits_;
};

// Dynamic-inference oracle for StaticFrameDecoder: growing per-position cache
// storage and fresh scratch on every step. Same arithmetic, so results match
// bit for bit.
std::vector<TokenId> decode_frame_reference(const StackedDecoder& decoder, std::span<const float> hidden,
                                            nn::Sampler& sampler, const FrameOptions& options = {});

}  // namespace mctok::hier
