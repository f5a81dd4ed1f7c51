// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/nn/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "mctok/common.hpp"
#include "mctok/io/binary.hpp"
#include "mctok/rng.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::nn {
namespace {

constexpr std::string_view kWeightMagic = "QNN1";
constexpr std::string_view kMultiheadKind = "multihead";

// Seed streams: 0 for the backbone stack, 1.. for everything built on top.
enum SeedStream : std::uint64_t { kBackboneStream = 0, kHeadStream = 1000, kEmbeddingStream = 2000 };

}  // namespace

Backbone::Backbone(const ModelConfig& config)
    : config_((config.validate(), config)), stack_(backbone_shape(config), derive_seed(config.seed, kBackboneStream)) {}

std::vector<float> Backbone::prefill(std::span<const float> embeddings, AttentionCache& cache,
                                     RuntimeCounters* counters) const {
  const std::size_t dim = config_.model_dim;
  if (embeddings.empty() || embeddings.size() % dim != 0) {
    throw std::invalid_argument("prefill: embeddings must be a non-empty [n x model_dim] matrix");
  }
  if (cache.used_len() != 0) throw std::invalid_argument("prefill: cache already holds positions");
  const std::size_t rows = embeddings.size() / dim;
  if (rows > config_.max_seq) {
    throw CapacityError("prefill: prompt of " + std::to_string(rows) + " exceeds max_seq " +
                        std::to_string(config_.max_seq));
  }
  cache.extend(rows);
  TransformerStack::Workspace ws(backbone_shape(config_), rows);
  std::vector<float> hidden(rows * dim);
  std::uint64_t blocks = 0;
  stack_.forward(embeddings.data(), rows, 0, cache, ws, hidden.data(), &blocks);
  if (counters != nullptr) {
    counters->backbone_positions += rows;
    counters->backbone_blocks += blocks;
  }
  return hidden;
}

void Backbone::step(std::span<const float> embedding, AttentionCache& cache, TransformerStack::Workspace& ws,
                    std::span<float> hidden, RuntimeCounters* counters) const {
  if (embedding.size() != config_.model_dim || hidden.size() != config_.model_dim) {
    throw std::invalid_argument("step: embedding and hidden must have model_dim entries");
  }
  const std::size_t pos = cache.extend(1);
  std::uint64_t blocks = 0;
  stack_.forward(embedding.data(), 1, pos, cache, ws, hidden.data(), &blocks);
  if (counters != nullptr) {
    counters->backbone_positions += 1;
    counters->backbone_blocks += blocks;
  }
}

std::vector<float> Backbone::step(std::span<const float> embedding, AttentionCache& cache) const {
  auto ws = make_step_workspace();
  std::vector<float> hidden(config_.model_dim);
  step(embedding, cache, ws, hidden);
  return hidden;
}

std::unique_ptr<PagePool> Backbone::make_pool(std::size_t sequences, std::size_t page_size) const {
  const std::size_t pages_per_seq = (config_.max_seq + page_size - 1) / page_size;
  return std::make_unique<PagePool>(page_size, pages_per_seq * sequences, config_.layers,
                                    config_.heads * config_.head_dim);
}

MultiheadModel::MultiheadModel(const ModelConfig& config) : backbone_(config) {
  const std::size_t rows = table_size();
  const std::size_t dim = config.model_dim;
  heads_.resize(config.num_codebooks);
  embeddings_.resize(config.num_codebooks);
  for (std::size_t k = 0; k < config.num_codebooks; ++k) {
    heads_[k].resize(rows * dim);
    init_uniform(heads_[k], dim, derive_seed(config.seed, kHeadStream + k));
    embeddings_[k].resize(rows * dim);
    // Unit-scale rows; the backbone normalizes its inputs.
    Rng rng(derive_seed(config.seed, kEmbeddingStream + k));
    for (float& v : embeddings_[k]) v = static_cast<float>(rng.normal());
  }
}

void MultiheadModel::multihead_step(std::span<const float> hidden, std::span<float> logits) const {
  const std::size_t rows = table_size();
  const std::size_t dim = config().model_dim;
  if (hidden.size() != dim) throw std::invalid_argument("multihead_step: hidden size mismatch");
  if (logits.size() != heads_.size() * rows) throw std::invalid_argument("multihead_step: logits size mismatch");
  const auto& kern = simd::kernels();
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    kern.matvec(heads_[k].data(), rows, dim, hidden.data(), logits.data() + k * rows);
  }
}

std::vector<std::vector<float>> MultiheadModel::multihead_step(std::span<const float> hidden) const {
  std::vector<float> flat(heads_.size() * table_size());
  multihead_step(hidden, flat);
  std::vector<std::vector<float>> out;
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(k * table_size()),
                     flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * table_size()));
  }
  return out;
}

void MultiheadModel::embed_tokens(std::span<const TokenId> tokens, std::span<float> out) const {
  const std::size_t dim = config().model_dim;
  if (tokens.size() != embeddings_.size() || out.size() != dim) {
    throw std::invalid_argument("embed_tokens: shape mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k] < 0 || static_cast<std::size_t>(tokens[k]) >= table_size()) {
      throw std::out_of_range("embed_tokens: id " + std::to_string(tokens[k]) + " outside table");
    }
    const float* row = embeddings_[k].data() + static_cast<std::size_t>(tokens[k]) * dim;
    for (std::size_t j = 0; j < dim; ++j) out[j] += row[j];
  }
}

void MultiheadModel::for_each_parameter(const ParameterVisitor& fn) {
  backbone_.for_each_parameter(fn);
  for (auto& h : heads_) fn(h);
  for (auto& e : embeddings_) fn(e);
}

std::string MultiheadModel::descriptor() const { return config().to_descriptor(); }

std::vector<std::uint8_t> MultiheadModel::to_blob() {
  return encode_weight_blob(kMultiheadKind, descriptor(), [this](const ParameterVisitor& fn) { for_each_parameter(fn); });
}

MultiheadModel MultiheadModel::from_descriptor(std::string_view text) {
  return MultiheadModel(ModelConfig::from_descriptor(text));
}

MultiheadModel MultiheadModel::from_blob(std::span<const std::uint8_t> bytes) {
  const WeightBlob blob = decode_weight_blob(bytes);
  if (blob.kind != kMultiheadKind) throw FormatError("QNN1: expected kind '" + std::string(kMultiheadKind) + "'");
  MultiheadModel model = from_descriptor(blob.descriptor);
  load_tensors(blob, [&model](const ParameterVisitor& fn) { model.for_each_parameter(fn); });
  return model;
}

std::vector<std::uint8_t> encode_weight_blob(std::string_view kind, std::string_view descriptor,
                                             const std::function<void(const ParameterVisitor&)>& visit) {
  std::vector<std::span<float>> tensors;
  visit([&](std::span<float> t) { tensors.push_back(t); });
  io::ByteWriter w;
  w.put_bytes(kWeightMagic);
  w.put_u32(static_cast<std::uint32_t>(kind.size()));
  w.put_bytes(kind);
  w.put_u32(static_cast<std::uint32_t>(descriptor.size()));
  w.put_bytes(descriptor);
  w.put_u32(static_cast<std::uint32_t>(tensors.size()));
  for (auto t : tensors) {
    w.put_u32(static_cast<std::uint32_t>(t.size()));
    w.put_f32s(t);
  }
  return w.bytes();
}

WeightBlob decode_weight_blob(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.take_bytes(kWeightMagic.size()) != kWeightMagic) throw FormatError("not a QNN1 weight blob");
  WeightBlob blob;
  blob.kind = std::string(r.take_bytes(r.u32()));
  blob.descriptor = std::string(r.take_bytes(r.u32()));
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<float> t(r.u32());
    r.f32s(t);
    blob.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("QNN1: trailing bytes");
  return blob;
}

void load_tensors(const WeightBlob& blob, const std::function<void(const ParameterVisitor&)>& visit) {
  std::size_t index = 0;
  visit([&](std::span<float> t) {
    if (index >= blob.tensors.size()) throw FormatError("QNN1: too few tensors for descriptor");
    const auto& src = blob.tensors[index++];
    if (src.size() != t.size()) throw FormatError("QNN1: tensor " + std::to_string(index - 1) + " has wrong size");
    std::copy(src.begin(), src.end(), t.begin());
  });
  if (index != blob.tensors.size()) throw FormatError("QNN1: too many tensors for descriptor");
}

}  // namespace mctok::nn
