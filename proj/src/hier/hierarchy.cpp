// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/hier/hierarchy.hpp"

#include <algorithm>
#include <stdexcept>

#include "mctok/common.hpp"
#include "mctok/io/kv_file.hpp"
#include "mctok/rng.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::hier {
namespace {

constexpr std::string_view kHierarchyKind = "hierarchy";

void CheckStack(const HierarchyModel& model, const rvq::QuantizerStack& stack) {
  const auto& cfg = model.config();
  if (stack.num_stages() != cfg.num_codebooks) {
    throw std::invalid_argument("hierarchy: quantizer has " + std::to_string(stack.num_stages()) +
                                " stages, model expects " + std::to_string(cfg.num_codebooks));
  }
  if (stack.embed_dim() != cfg.model_dim) throw std::invalid_argument("hierarchy: quantizer embed_dim != model_dim");
  for (std::size_t k = 0; k < cfg.num_codebooks; ++k) {
    if (stack.codebook(k).size() != model.decoder().config().vocab_sizes[k]) {
      throw std::invalid_argument("hierarchy: codebook size differs from decoder vocabulary");
    }
  }
}

}  // namespace

HierarchyModel::HierarchyModel(const nn::ModelConfig& backbone)
    : HierarchyModel(backbone, StackedDecoderConfig::for_backbone(backbone)) {}

HierarchyModel::HierarchyModel(const nn::ModelConfig& backbone, const StackedDecoderConfig& decoder)
    : backbone_(backbone), decoder_(decoder) {
  if (decoder.codebooks != backbone.num_codebooks) throw std::invalid_argument("HierarchyModel: K mismatch");
  if (decoder.backbone_dim != backbone.model_dim) throw std::invalid_argument("HierarchyModel: backbone_dim mismatch");
  const std::size_t cols = backbone.num_codebooks * backbone.model_dim;
  feedback_proj_.resize(backbone.model_dim * cols);
  nn::init_uniform(feedback_proj_, cols, derive_seed(backbone.seed, 0xFEEDBAC));
}

std::string HierarchyModel::descriptor() const {
  auto kv = io::KeyValues::parse(config().to_descriptor());
  const auto& d = decoder_.config();
  kv.set("decoder.layers", std::to_string(d.decoder_layers));
  kv.set("decoder.dim", std::to_string(d.decoder_dim));
  kv.set("decoder.heads", std::to_string(d.heads));
  kv.set("decoder.head_dim", std::to_string(d.head_dim));
  kv.set("decoder.ffn_dim", std::to_string(d.ffn_dim));
  kv.set("decoder.seed", std::to_string(d.seed));
  std::string vocab;
  for (std::size_t k = 0; k < d.vocab_sizes.size(); ++k) vocab += (k ? "," : "") + std::to_string(d.vocab_sizes[k]);
  kv.set("decoder.vocab_sizes", vocab);
  return kv.format();
}

HierarchyModel HierarchyModel::from_descriptor(std::string_view text) {
  const auto backbone = nn::ModelConfig::from_descriptor(text);
  const auto kv = io::KeyValues::parse(text);
  StackedDecoderConfig d = StackedDecoderConfig::for_backbone(backbone);
  for (const char* key : {"decoder.layers", "decoder.dim", "decoder.heads", "decoder.head_dim", "decoder.ffn_dim"}) {
    if (kv.get_int(key, 1) <= 0) throw std::invalid_argument(std::string("HierarchyModel: ") + key + " must be positive");
  }
  d.decoder_layers = static_cast<std::size_t>(kv.get_int("decoder.layers", static_cast<long long>(d.decoder_layers)));
  d.decoder_dim = static_cast<std::size_t>(kv.get_int("decoder.dim", static_cast<long long>(d.decoder_dim)));
  d.heads = static_cast<std::size_t>(kv.get_int("decoder.heads", static_cast<long long>(d.heads)));
  d.head_dim = static_cast<std::size_t>(kv.get_int("decoder.head_dim", static_cast<long long>(d.head_dim)));
  d.ffn_dim = static_cast<std::size_t>(kv.get_int("decoder.ffn_dim", static_cast<long long>(d.ffn_dim)));
  if (auto seed = kv.get("decoder.seed")) d.seed = io::parse_u64(*seed);
  if (kv.contains("decoder.vocab_sizes")) {
    d.vocab_sizes.clear();
    for (long long v : kv.require_int_list("decoder.vocab_sizes")) {
      if (v <= 0) throw std::invalid_argument("HierarchyModel: decoder vocab sizes must be positive");
      d.vocab_sizes.push_back(static_cast<std::size_t>(v));
    }
  }
  return HierarchyModel(backbone, d);
}

void HierarchyModel::for_each_parameter(const nn::ParameterVisitor& fn) {
  backbone_.for_each_parameter(fn);
  decoder_.for_each_parameter(fn);
  fn(feedback_proj_);
}

std::vector<std::uint8_t> HierarchyModel::to_blob() {
  return nn::encode_weight_blob(kHierarchyKind, descriptor(),
                                [this](const nn::ParameterVisitor& fn) { for_each_parameter(fn); });
}

HierarchyModel HierarchyModel::from_blob(std::span<const std::uint8_t> bytes) {
  const auto blob = nn::decode_weight_blob(bytes);
  if (blob.kind != kHierarchyKind) throw FormatError("QNN1: expected kind 'hierarchy'");
  HierarchyModel model = from_descriptor(blob.descriptor);
  nn::load_tensors(blob, [&model](const nn::ParameterVisitor& fn) { model.for_each_parameter(fn); });
  return model;
}

HierarchySession::HierarchySession(const HierarchyModel& model, nn::PagePool& pool, const rvq::QuantizerStack& stack,
                                   nn::SessionOptions options)
    : model_(&model), pool_(&pool), stack_(&stack), options_(options), frame_decoder_(model.decoder()) {
  CheckStack(model, stack);
  options_.sampler.validate();
  // Warmup: one throwaway frame so later frames run on already-touched buffers.
  std::vector<float> zero(model.config().model_dim, 0.0f);
  std::vector<TokenId> codes(model.config().num_codebooks);
  nn::Sampler greedy(nn::SamplerConfig{}, model.decoder().max_head_size());
  frame_decoder_.decode_frame(zero, greedy, codes);
  frame_decoder_.reset();
}

nn::GenerationResult HierarchySession::run(std::span<const float> prompt, std::size_t frames) {
  if (frames == 0) throw std::invalid_argument("run: frames_requested must be at least 1");
  return generate(prompt, frames, nullptr, nullptr);
}

nn::GenerationResult HierarchySession::run_forced(std::span<const float> prompt, const TokenGrid& forced,
                                                  std::vector<float>& logits) {
  if (forced.codebooks() != model_->config().num_codebooks) throw std::invalid_argument("run_forced: K mismatch");
  logits.assign(forced.frames() * model_->decoder().total_logits(), 0.0f);
  return generate(prompt, forced.frames(), &forced, &logits);
}

nn::GenerationResult HierarchySession::prefill_only(std::span<const float> prompt) {
  return generate(prompt, 0, nullptr, nullptr);
}

nn::GenerationResult HierarchySession::generate(std::span<const float> prompt, std::size_t frames,
                                                const TokenGrid* forced, std::vector<float>* logits) {
  const nn::ModelConfig& cfg = model_->config();
  const StackedDecoder& dec = model_->decoder();
  const std::size_t K = cfg.num_codebooks;
  const std::size_t dim = cfg.model_dim;
  const bool concat = options_.feedback == rvq::EmbeddingAggregation::kConcat;
  Clock& clock = options_.clock != nullptr ? *options_.clock : default_clock();

  nn::GenerationResult result;
  nn::RuntimeCounters& counters = result.counters;
  nn::Sampler sampler(options_.sampler, dec.max_head_size());
  nn::AttentionCache cache(*pool_, cfg.max_seq);
  auto ws = model_->backbone().make_step_workspace();
  std::vector<float> hidden(dim);
  std::vector<float> feedback(concat ? K * stack_->embed_dim() : dim);
  std::vector<float> backbone_input(dim);
  std::vector<TokenId> codes(K);
  state_ = DecodeState{};
  state_.emitted = TokenGrid(0, K);
  state_.emitted.reserve_frames(frames);
  result.frame_wall_ns.reserve(frames);

  const std::int64_t start = clock.now_ns();
  const std::vector<float> prompt_hidden = model_->backbone().prefill(prompt, cache, &counters);
  std::copy(prompt_hidden.end() - static_cast<std::ptrdiff_t>(dim), prompt_hidden.end(), hidden.begin());
  result.ttft_ns = clock.now_ns() - start;
  result.decoder_steps_at_first_token = counters.decoder_steps;
  if (counters.decoder_steps != 0 || counters.decoder_invocations != 0) {
    throw ContractViolation("decoder ran during prefill");
  }

  for (std::size_t t = 0; t < frames; ++t) {
    frame_decoder_.reset();
    FrameOptions opts;
    opts.allow_eos = options_.allow_eos;
    if (forced != nullptr) opts.forced = forced->row(t);
    if (logits != nullptr) opts.logits_out = std::span<float>(*logits).subspan(t * dec.total_logits(), dec.total_logits());
    frame_decoder_.decode_frame(hidden, sampler, codes, opts, &counters);
    state_.frame_index = t + 1;
    clock.frame_boundary();
    if (codes[0] == dec.eos_id()) {
      result.hit_eos = true;
      state_.terminated = true;
      break;
    }
    result.frame_wall_ns.push_back(clock.now_ns() - start);
    state_.emitted.append_row(codes);
    if (t + 1 == frames) break;

    rvq::aggregate_embeddings(codes, *stack_, options_.feedback, feedback);
    if (concat) {
      simd::kernels().matvec(model_->feedback_projection().data(), dim, feedback.size(), feedback.data(),
                             backbone_input.data());
    } else {
      std::copy(feedback.begin(), feedback.end(), backbone_input.begin());
    }
    model_->backbone().step(backbone_input, cache, ws, hidden, &counters);
  }
  state_.terminated = true;
  result.tokens = state_.emitted;
  return result;
}

nn::GenerationResult run_hierarchy(const HierarchyModel& model, std::span<const float> prompt, std::size_t frames,
                                   const nn::SamplerConfig& sampler, const rvq::QuantizerStack& stack) {
  if (frames == 0) throw std::invalid_argument("run_hierarchy: frames_requested must be at least 1");
  auto pool = model.backbone().make_pool(1);
  nn::SessionOptions options;
  options.sampler = sampler;
  HierarchySession session(model, *pool, stack, options);
  return session.run(prompt, frames);
}

}  // namespace mctok::hier
