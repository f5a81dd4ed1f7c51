// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mctok/hier/stacked_decoder.hpp"
#include "mctok/nn/model.hpp"
#include "mctok/nn/paged_cache.hpp"
#include "mctok/nn/session.hpp"
#include "mctok/rvq/quantizer.hpp"

namespace mctok::hier {

// Dual autoregressive model: backbone over frames, stacked decoder over the
// K codebooks of each frame.
class HierarchyModel {
 public:
  explicit HierarchyModel(const nn::ModelConfig& backbone);
  HierarchyModel(const nn::ModelConfig& backbone, const StackedDecoderConfig& decoder);

  const nn::Backbone& backbone() const { return backbone_; }
  const StackedDecoder& decoder() const { return decoder_; }
  const nn::ModelConfig& config() const { return backbone_.config(); }

  // [model_dim x K*embed_dim]; maps concatenated frame embeddings back to
  // model_dim when feedback aggregation is kConcat.
  const std::vector<float>& feedback_projection() const { return feedback_proj_; }

  std::string descriptor() const;
  static HierarchyModel from_descriptor(std::string_view text);
  std::vector<std::uint8_t> to_blob();
  static HierarchyModel from_blob(std::span<const std::uint8_t> bytes);

  void for_each_parameter(const nn::ParameterVisitor& fn);

 private:
  nn::Backbone backbone_;
  StackedDecoder decoder_;
  std::vector<float> feedback_proj_;
};

// Outer/inner decode loop state for one request.
struct DecodeState {
  std::size_t frame_index = 0;
  TokenGrid emitted;
  bool terminated = false;
};

// One generation session. Owns a StaticFrameDecoder (warmed up at
// construction) and draws backbone pages from a shared pool per request.
// Single-threaded; run sessions on separate threads for concurrency.
class HierarchySession {
 public:
  HierarchySession(const HierarchyModel& model, nn::PagePool& pool, const rvq::QuantizerStack& stack,
                   nn::SessionOptions options = {});

  // Prefill `prompt` ([n x model_dim]) then decode up to `frames` frames,
  // stopping early on a codebook-0 EOS when allowed.
  nn::GenerationResult run(std::span<const float> prompt, std::size_t frames);

  // Teacher-forced run: frame t uses `forced.row(t)` instead of sampling.
  // `logits` receives [frames x total_logits] raw head logits.
  nn::GenerationResult run_forced(std::span<const float> prompt, const TokenGrid& forced, std::vector<float>& logits);

  // Prefill only; the returned result carries TTFT and the decoder step count
  // observed at first-token time.
  nn::GenerationResult prefill_only(std::span<const float> prompt);

  const DecodeState& state() const { return state_; }
  const StaticFrameDecoder& frame_decoder() const { return frame_decoder_; }
  const HierarchyModel& model() const { return *model_; }

 private:
  nn::GenerationResult generate(std::span<const float> prompt, std::size_t frames, const TokenGrid* forced,
                                std::vector<float>* logits);

  const HierarchyModel* model_;
  nn::PagePool* pool_;
  const rvq::QuantizerStack* stack_;
  nn::SessionOptions options_;
  StaticFrameDecoder frame_decoder_;
  DecodeState state_;
};

// Convenience wrapper: one session, one request.
nn::GenerationResult run_hierarchy(const HierarchyModel& model, std::span<const float> prompt, std::size_t frames,
                                   const nn::SamplerConfig& sampler, const rvq::QuantizerStack& stack);

}  // namespace mctok::hier
