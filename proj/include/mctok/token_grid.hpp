// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mctok {

using TokenId = std::int32_t;

// Row-major [frames x codebooks] token matrix.
class TokenGrid {
 public:
  TokenGrid() = default;
  TokenGrid(std::size_t frames, std::size_t codebooks, TokenId fill = 0)
      : frames_(frames), codebooks_(codebooks), tokens_(frames * codebooks, fill) {}
  TokenGrid(std::size_t frames, std::size_t codebooks, std::vector<TokenId> tokens)
      : frames_(frames), codebooks_(codebooks), tokens_(std::move(tokens)) {
    if (tokens_.size() != frames_ * codebooks_) throw std::invalid_argument("TokenGrid: size mismatch");
  }

  std::size_t frames() const { return frames_; }
  std::size_t codebooks() const { return codebooks_; }

  TokenId at(std::size_t t, std::size_t k) const { return tokens_[t * codebooks_ + k]; }
  TokenId& at(std::size_t t, std::size_t k) { return tokens_[t * codebooks_ + k]; }

  std::span<const TokenId> row(std::size_t t) const { return {tokens_.data() + t * codebooks_, codebooks_}; }
  std::span<TokenId> row(std::size_t t) { return {tokens_.data() + t * codebooks_, codebooks_}; }

  void append_row(std::span<const TokenId> row) {
    if (row.size() != codebooks_) throw std::invalid_argument("TokenGrid: row width mismatch");
    tokens_.insert(tokens_.end(), row.begin(), row.end());
    ++frames_;
  }

  void reserve_frames(std::size_t frames) { tokens_.reserve(frames * codebooks_); }

  const std::vector<TokenId>& data() const { return tokens_; }

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t codebooks_ = 0;
  std::vector<TokenId> tokens_;
};

}  // namespace mctok
