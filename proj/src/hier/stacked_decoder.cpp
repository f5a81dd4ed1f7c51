// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/hier/stacked_decoder.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "mctok/common.hpp"
#include "mctok/rng.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::hier {
namespace {

enum SeedStream : std::uint64_t { kStackStream = 0, kProjStream = 1, kEmbedStream = 100, kHeadStream = 200 };

void MaskEos(const StackedDecoder& decoder, std::size_t k, bool allow_eos, float* logits) {
  if (k == 0 && !allow_eos) logits[decoder.head_size(0) - 1] = -std::numeric_limits<float>::infinity();
}

// Growing storage: one heap block per (layer, position), created on first write.
class GrowingKv final : public nn::KvStore {
 public:
  GrowingKv(std::size_t layers, std::size_t kv_dim) : kv_dim_(kv_dim), keys_(layers), values_(layers) {}
  float* key(std::size_t layer, std::size_t pos) override { return slot(keys_[layer], pos); }
  float* value(std::size_t layer, std::size_t pos) override { return slot(values_[layer], pos); }

 private:
  float* slot(std::vector<std::vector<float>>& rows, std::size_t pos) {
    while (rows.size() <= pos) rows.emplace_back(kv_dim_);
    return rows[pos].data();
  }
  std::size_t kv_dim_;
  std::vector<std::vector<std::vector<float>>> keys_;
  std::vector<std::vector<std::vector<float>>> values_;
};

}  // namespace

StackedDecoderConfig StackedDecoderConfig::for_backbone(const nn::ModelConfig& backbone) {
  StackedDecoderConfig c;
  c.codebooks = backbone.num_codebooks;
  c.vocab_sizes.assign(backbone.num_codebooks, backbone.vocab_size);
  c.backbone_dim = backbone.model_dim;
  c.seed = derive_seed(backbone.seed, 0xDEC0DE);
  return c;
}

void StackedDecoderConfig::validate() const {
  if (codebooks == 0) throw std::invalid_argument("StackedDecoderConfig: K must be at least 1");
  if (vocab_sizes.size() != codebooks) throw std::invalid_argument("StackedDecoderConfig: one vocab size per codebook");
  for (std::size_t v : vocab_sizes) {
    if (v == 0) throw std::invalid_argument("StackedDecoderConfig: vocab sizes must be positive");
  }
  if (decoder_layers == 0 || decoder_dim == 0 || heads == 0 || head_dim == 0 || ffn_dim == 0 || backbone_dim == 0) {
    throw std::invalid_argument("StackedDecoderConfig: all counts must be positive");
  }
  if (decoder_dim != heads * head_dim) throw std::invalid_argument("StackedDecoderConfig: decoder_dim != heads * head_dim");
}

StackedDecoder::StackedDecoder(const StackedDecoderConfig& config)
    : config_((config.validate(), config)), stack_(config.shape(), derive_seed(config.seed, kStackStream)) {
  const std::size_t dim = config_.decoder_dim;
  input_proj_.resize(dim * config_.backbone_dim);
  nn::init_uniform(input_proj_, config_.backbone_dim, derive_seed(config_.seed, kProjStream));
  for (std::size_t k = 0; k + 1 < config_.codebooks; ++k) {
    std::vector<float> table(head_size(k) * dim);
    Rng rng(derive_seed(config_.seed, kEmbedStream + k));
    for (float& v : table) v = static_cast<float>(rng.normal());
    embeddings_.push_back(std::move(table));
  }
  head_offsets_.push_back(0);
  for (std::size_t k = 0; k < config_.codebooks; ++k) {
    std::vector<float> head(head_size(k) * dim);
    nn::init_uniform(head, dim, derive_seed(config_.seed, kHeadStream + k));
    heads_.push_back(std::move(head));
    head_offsets_.push_back(head_offsets_.back() + head_size(k));
  }
}

std::size_t StackedDecoder::max_head_size() const {
  std::size_t m = 0;
  for (std::size_t k = 0; k < config_.codebooks; ++k) m = std::max(m, head_size(k));
  return m;
}

std::size_t StackedDecoder::table_row(std::size_t codebook, TokenId token) const {
  if (codebook == 0 && token == eos_id()) return config_.vocab_sizes[0];
  if (token < 0 || static_cast<std::size_t>(token) >= config_.vocab_sizes[codebook]) {
    throw std::out_of_range("token " + std::to_string(token) + " outside codebook " + std::to_string(codebook));
  }
  return static_cast<std::size_t>(token);
}

void StackedDecoder::position_input(std::size_t k, std::span<const float> hidden, TokenId previous, float* out) const {
  const std::size_t dim = config_.decoder_dim;
  if (k == 0) {
    if (hidden.size() != config_.backbone_dim) throw std::invalid_argument("decoder: hidden state size mismatch");
    simd::kernels().matvec(input_proj_.data(), dim, config_.backbone_dim, hidden.data(), out);
    return;
  }
  const float* row = embeddings_[k - 1].data() + table_row(k - 1, previous) * dim;
  std::copy_n(row, dim, out);
}

void StackedDecoder::head_logits(std::size_t k, const float* decoder_hidden, float* logits) const {
  simd::kernels().matvec(heads_[k].data(), head_size(k), config_.decoder_dim, decoder_hidden, logits);
}

TokenId StackedDecoder::index_to_token(std::size_t k, std::size_t index) const {
  if (k == 0 && index == config_.vocab_sizes[0]) return eos_id();
  return static_cast<TokenId>(index);
}

void StackedDecoder::for_each_parameter(const nn::ParameterVisitor& fn) {
  stack_.for_each_parameter(fn);
  fn(input_proj_);
  for (auto& e : embeddings_) fn(e);
  for (auto& h : heads_) fn(h);
}

FrameKvBlock::FrameKvBlock(std::size_t layers, std::size_t capacity, std::size_t kv_dim)
    : layers_(layers), capacity_(capacity), kv_dim_(kv_dim), storage_(layers * 2 * capacity * kv_dim, 0.0f) {}

float* FrameKvBlock::key(std::size_t layer, std::size_t pos) {
  if (pos >= capacity_) throw ContractViolation("FrameKvBlock: position beyond fixed capacity K");
  return storage_.data() + ((layer * 2) * capacity_ + pos) * kv_dim_;
}

float* FrameKvBlock::value(std::size_t layer, std::size_t pos) {
  if (pos >= capacity_) throw ContractViolation("FrameKvBlock: position beyond fixed capacity K");
  return storage_.data() + ((layer * 2 + 1) * capacity_ + pos) * kv_dim_;
}

StaticFrameDecoder::StaticFrameDecoder(const StackedDecoder& decoder)
    : decoder_(&decoder),
      block_(decoder.config().decoder_layers, decoder.codebooks(), decoder.stack().shape().kv_dim()),
      ws_(decoder.stack().shape(), 1),
      input_(decoder.config().decoder_dim),
      hidden_(decoder.config().decoder_dim),
      logits_(decoder.total_logits()) {}

std::size_t StaticFrameDecoder::bytes_reserved() const {
  return sizeof(float) * (decoder_->config().decoder_layers * 2 * block_.capacity() * decoder_->stack().shape().kv_dim() +
                          input_.size() + hidden_.size() + logits_.size());
}

void StaticFrameDecoder::decode_frame(std::span<const float> hidden, nn::Sampler& sampler, std::span<TokenId> codes,
                                      const FrameOptions& options, nn::RuntimeCounters* counters) {
  const StackedDecoder& dec = *decoder_;
  const std::size_t K = dec.codebooks();
  if (block_.fill_count() != 0) throw ContractViolation("decode_frame: frame block not reset");
  if (codes.size() != K) throw std::invalid_argument("decode_frame: codes must hold K entries");
  if (!options.forced.empty() && options.forced.size() != K) throw std::invalid_argument("decode_frame: forced size");
  if (!options.logits_out.empty() && options.logits_out.size() != dec.total_logits()) {
    throw std::invalid_argument("decode_frame: logits_out size");
  }
  const std::size_t growths_before = sampler.scratch_growths();
  std::uint64_t blocks = 0;

  for (std::size_t k = 0; k < K; ++k) {
    dec.position_input(k, hidden, k == 0 ? 0 : codes[k - 1], input_.data());
    dec.stack().forward(input_.data(), 1, k, block_, ws_, hidden_.data(), &blocks);
    block_.mark_filled(k);
    float* logits = logits_.data() + dec.head_offset(k);
    dec.head_logits(k, hidden_.data(), logits);
    if (!options.logits_out.empty()) std::copy_n(logits, dec.head_size(k), options.logits_out.data() + dec.head_offset(k));
    if (!options.forced.empty()) {
      codes[k] = options.forced[k];
    } else {
      MaskEos(dec, k, options.allow_eos, logits);
      codes[k] = dec.index_to_token(k, sampler.sample({logits, dec.head_size(k)}));
    }
  }

  if (counters != nullptr) {
    counters->decoder_invocations += 1;
    counters->decoder_steps += K;
    counters->decoder_blocks += blocks;
    counters->decoder_allocations += sampler.scratch_growths() - growths_before;
  }
}

std::vector<TokenId> decode_frame_reference(const StackedDecoder& decoder, std::span<const float> hidden,
                                            nn::Sampler& sampler, const FrameOptions& options) {
  const std::size_t K = decoder.codebooks();
  const std::size_t dim = decoder.config().decoder_dim;
  if (!options.forced.empty() && options.forced.size() != K) throw std::invalid_argument("decode_frame: forced size");
  if (!options.logits_out.empty() && options.logits_out.size() != decoder.total_logits()) {
    throw std::invalid_argument("decode_frame: logits_out size");
  }
  GrowingKv kv(decoder.config().decoder_layers, decoder.stack().shape().kv_dim());
  std::vector<TokenId> codes;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<float> input(dim);
    decoder.position_input(k, hidden, k == 0 ? 0 : codes.back(), input.data());
    nn::TransformerStack::Workspace ws(decoder.stack().shape(), 1);
    std::vector<float> out(dim);
    decoder.stack().forward(input.data(), 1, k, kv, ws, out.data());
    std::vector<float> logits(decoder.head_size(k));
    decoder.head_logits(k, out.data(), logits.data());
    if (!options.logits_out.empty()) {
      std::copy(logits.begin(), logits.end(), options.logits_out.begin() + static_cast<std::ptrdiff_t>(decoder.head_offset(k)));
    }
    if (!options.forced.empty()) {
      codes.push_back(options.forced[k]);
    } else {
      MaskEos(decoder, k, options.allow_eos, logits.data());
      codes.push_back(decoder.index_to_token(k, sampler.sample(logits)));
    }
  }
  return codes;
}

}  // namespace mctok::hier
