// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/nn/config.hpp"

#include <stdexcept>

#include "mctok/io/kv_file.hpp"

namespace mctok::nn {

void ModelConfig::validate() const {
  if (layers == 0 || model_dim == 0 || heads == 0 || head_dim == 0 || ffn_dim == 0 || vocab_size == 0 ||
      num_codebooks == 0 || max_seq == 0) {
    throw std::invalid_argument("ModelConfig: all counts must be positive");
  }
  if (model_dim != heads * head_dim) throw std::invalid_argument("ModelConfig: model_dim must equal heads * head_dim");
  if (head_dim % 2 != 0) throw std::invalid_argument("ModelConfig: head_dim must be even for rotary positions");
}

std::string ModelConfig::to_descriptor() const {
  io::KeyValues kv;
  kv.set("layers", std::to_string(layers));
  kv.set("model_dim", std::to_string(model_dim));
  kv.set("heads", std::to_string(heads));
  kv.set("head_dim", std::to_string(head_dim));
  kv.set("ffn_dim", std::to_string(ffn_dim));
  kv.set("vocab_size", std::to_string(vocab_size));
  kv.set("num_codebooks", std::to_string(num_codebooks));
  kv.set("max_seq", std::to_string(max_seq));
  kv.set("seed", std::to_string(seed));
  return kv.format();
}

ModelConfig ModelConfig::from_descriptor(std::string_view text) {
  const auto kv = io::KeyValues::parse(text);
  ModelConfig c;
  auto count = [&](const char* key) {
    const long long v = kv.require_int(key);
    if (v <= 0) throw std::invalid_argument(std::string("ModelConfig: ") + key + " must be positive");
    return static_cast<std::size_t>(v);
  };
  c.layers = count("layers");
  c.model_dim = count("model_dim");
  c.heads = count("heads");
  c.head_dim = count("head_dim");
  c.ffn_dim = count("ffn_dim");
  c.vocab_size = count("vocab_size");
  c.num_codebooks = count("num_codebooks");
  c.max_seq = count("max_seq");
  c.seed = kv.require_u64("seed");
  c.validate();
  return c;
}

}  // namespace mctok::nn
