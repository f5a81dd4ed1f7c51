// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mctok/rvq/frames.hpp"
#include "mctok/token_grid.hpp"

namespace mctok::rvq {

// One quantization stage: E prototype vectors of dimension D. By convention
// stage 1 carries the semantic stream and later stages the residual acoustic
// detail; nothing here depends on that.
class Codebook {
 public:
  Codebook(Matrix entries, std::size_t stage_index);

  std::size_t size() const { return entries_.rows(); }
  std::size_t dim() const { return entries_.cols(); }
  std::size_t stage_index() const { return stage_index_; }
  std::span<const float> entry(std::size_t k) const { return entries_.row(k); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
  std::size_t stage_index_;
};

// C ordered codebooks plus one [H x E] projection per stage that maps a code
// index to an H-dimensional context embedding (column select). Immutable.
class QuantizerStack {
 public:
  QuantizerStack(std::vector<Codebook> codebooks, std::vector<Matrix> projections, std::uint32_t frame_rate_hz);

  // Random codebooks (unit normal) and projections (uniform +-0.02).
  static QuantizerStack random(std::size_t stages, std::size_t dim, std::size_t entries, std::size_t embed_dim,
                               std::uint32_t frame_rate_hz, std::uint64_t seed);

  std::size_t num_stages() const { return codebooks_.size(); }
  std::size_t dim() const { return codebooks_.front().dim(); }
  std::size_t entries() const { return codebooks_.front().size(); }
  std::size_t embed_dim() const { return projections_.front().rows(); }
  std::uint32_t frame_rate_hz() const { return frame_rate_hz_; }

  const Codebook& codebook(std::size_t i) const { return codebooks_[i]; }
  const Matrix& projection(std::size_t i) const { return projections_[i]; }

  friend bool operator==(const QuantizerStack& a, const QuantizerStack& b);

 private:
  std::vector<Codebook> codebooks_;
  std::vector<Matrix> projections_;
  std::uint32_t frame_rate_hz_;
};

using CodeFrame = std::vector<TokenId>;

struct QuantizationResult {
  CodeFrame codes;
  std::vector<float> reconstruction;
  // ||r^(0)|| .. ||r^(C)||, C+1 entries.
  std::vector<float> stage_residual_norms;
};

// Index of the entry nearest to `query` in squared L2; ties go to the lowest
// index. Returns the index and its squared distance.
std::pair<std::size_t, float> nearest_entry(std::span<const float> query, const Codebook& book);

QuantizationResult quantize_frame(std::span<const float> frame, const QuantizerStack& stack);

// Sum of the selected prototypes, accumulated stage by stage in stage order.
std::vector<float> dequantize(std::span<const TokenId> codes, const QuantizerStack& stack);

// embeddings[i] = column codes[i] of projection i.
std::vector<std::vector<float>> embed_codes(std::span<const TokenId> codes, const QuantizerStack& stack);

enum class EmbeddingAggregation { kSum, kConcat };

// Writes the aggregated embedding of a code frame into `out` without
// allocating: kSum needs H floats, kConcat C*H.
void aggregate_embeddings(std::span<const TokenId> codes, const QuantizerStack& stack, EmbeddingAggregation mode,
                          std::span<float> out);

// Mean squared error (over frames and dimensions) of reconstructions that use
// only the first `stages_used` codebooks.
double reconstruction_error(const FrameSet& frames, const QuantizerStack& stack, std::size_t stages_used);

// Partial reconstructions, one row per frame.
FrameSet reconstruct_frames(const FrameSet& frames, const QuantizerStack& stack, std::size_t stages_used);

TokenGrid encode_frames(const FrameSet& frames, const QuantizerStack& stack);

struct FitOptions {
  std::size_t embed_dim = 64;
  std::uint32_t frame_rate_hz = 25;
  int max_iterations = 25;
  double relative_tolerance = 1e-6;
};

// Stage i is k-means over the residuals left by stages < i. Stage seeds are
// derived from `seed` and the stage number, so a C-stage fit is a prefix of
// any larger fit with the same seed.
QuantizerStack fit_codebooks(const FrameSet& training, std::size_t stages, std::size_t entries_per_book,
                             std::uint64_t seed, const FitOptions& options = {});

// "QRVQ1" container, see README for the layout.
std::vector<std::uint8_t> serialize_stack(const QuantizerStack& stack);
QuantizerStack deserialize_stack(std::span<const std::uint8_t> bytes);
void save_stack(const std::filesystem::path& path, const QuantizerStack& stack);
QuantizerStack load_stack(const std::filesystem::path& path);

}  // namespace mctok::rvq
