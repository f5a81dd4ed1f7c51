// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace mctok::nn {

// Backbone transformer shape. Weights are regenerated from `seed`; the key=value
// descriptor (to_descriptor) is therefore a complete model description.
struct ModelConfig {
  std::size_t layers = 4;
  std::size_t model_dim = 256;
  std::size_t heads = 4;
  std::size_t head_dim = 64;
  std::size_t ffn_dim = 1024;
  std::size_t vocab_size = 1024;
  std::size_t num_codebooks = 8;
  std::size_t max_seq = 4096;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_descriptor() const;
  static ModelConfig from_descriptor(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Shape of one stack of pre-norm transformer blocks; shared by the backbone
// and the per-frame decoder.
struct StackShape {
  std::size_t layers;
  std::size_t dim;
  std::size_t heads;
  std::size_t head_dim;
  std::size_t ffn_dim;
  std::size_t max_positions;

  std::size_t kv_dim() const { return heads * head_dim; }
};

inline StackShape backbone_shape(const ModelConfig& c) {
  return {c.layers, c.model_dim, c.heads, c.head_dim, c.ffn_dim, c.max_seq};
}

}  // namespace mctok::nn
