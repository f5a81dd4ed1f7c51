// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "alloc_counter.hpp"
#include "mctok/clock.hpp"
#include "mctok/common.hpp"
#include "mctok/hier/hierarchy.hpp"
#include "random.hpp"

namespace mctok::hier {
namespace {

nn::ModelConfig Backbone(std::size_t K, std::size_t vocab = 12) {
  nn::ModelConfig c;
  c.layers = 2;
  c.model_dim = 32;
  c.heads = 2;
  c.head_dim = 16;
  c.ffn_dim = 64;
  c.vocab_size = vocab;
  c.num_codebooks = K;
  c.max_seq = 128;
  c.seed = 21;
  return c;
}

StackedDecoderConfig Decoder(const nn::ModelConfig& b) {
  auto d = StackedDecoderConfig::for_backbone(b);
  d.decoder_layers = 2;
  d.decoder_dim = 16;
  d.heads = 2;
  d.head_dim = 8;
  d.ffn_dim = 32;
  return d;
}

struct Fixture {
  explicit Fixture(std::size_t K, std::size_t vocab = 12)
      : model(Backbone(K, vocab), Decoder(Backbone(K, vocab))),
        stack(rvq::QuantizerStack::random(K, 4, vocab, 32, 25, 3)),
        pool(model.backbone().make_pool(4, 8)) {}
  HierarchyModel model;
  rvq::QuantizerStack stack;
  std::unique_ptr<nn::PagePool> pool;
};

nn::SamplerConfig Temperature(std::uint64_t seed) {
  nn::SamplerConfig s;
  s.mode = nn::SampleMode::kTemperature;
  s.temperature = 1.0f;
  s.seed = seed;
  return s;
}

TEST(FrameKvBlock, CapacityIsFixed) {
  FrameKvBlock block(2, 3, 4);
  EXPECT_NO_THROW(block.key(1, 2));
  EXPECT_THROW(block.key(0, 3), ContractViolation);
  EXPECT_THROW(block.value(1, 3), ContractViolation);
  const float* storage = block.storage();
  block.mark_filled(2);
  EXPECT_EQ(block.fill_count(), 3u);
  block.reset();
  EXPECT_EQ(block.fill_count(), 0u);
  EXPECT_EQ(block.storage(), storage);
}

TEST(StackedDecoder, HeadLayout) {
  Fixture f(3);
  const auto& d = f.model.decoder();
  EXPECT_EQ(d.head_size(0), 13u);
  EXPECT_EQ(d.head_size(1), 12u);
  EXPECT_EQ(d.head_offset(2), 25u);
  EXPECT_EQ(d.total_logits(), 37u);
  EXPECT_EQ(d.eos_id(), 14);
  EXPECT_EQ(d.index_to_token(0, 12), 14);
  EXPECT_EQ(d.index_to_token(1, 11), 11);
}

TEST(StaticFrameDecoder, SingleCodebookIsPlainHead) {
  Fixture f(1);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler greedy(nn::SamplerConfig{}, 16);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto h = testing::normal_vector(rng, 32);
    std::vector<TokenId> codes(1);
    std::vector<float> logits(f.model.decoder().total_logits());
    dec.reset();
    dec.decode_frame(h, greedy, codes, {.forced = {}, .logits_out = logits, .allow_eos = true});
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    EXPECT_EQ(codes[0], f.model.decoder().index_to_token(0, static_cast<std::size_t>(best)));
    EXPECT_EQ(decode_frame_reference(f.model.decoder(), h, greedy), codes);
  }
}

TEST(StaticFrameDecoder, MatchesReferenceUnderGreedy) {
  Fixture f(4);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler a(nn::SamplerConfig{}, 16), b(nn::SamplerConfig{}, 16);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto h = testing::normal_vector(rng, 32, 3.0);
    std::vector<TokenId> codes(4);
    std::vector<float> l1(f.model.decoder().total_logits()), l2(l1.size());
    dec.reset();
    dec.decode_frame(h, a, codes, {.forced = {}, .logits_out = l1, .allow_eos = true});
    EXPECT_EQ(decode_frame_reference(f.model.decoder(), h, b, {.forced = {}, .logits_out = l2, .allow_eos = true}),
              codes);
    EXPECT_EQ(l1, l2);
  }
}

TEST(StaticFrameDecoder, MatchesReferenceUnderSharedSeedSampling) {
  Fixture f(4);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler a(Temperature(77), 16), b(Temperature(77), 16);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto h = testing::normal_vector(rng, 32);
    std::vector<TokenId> codes(4);
    dec.reset();
    dec.decode_frame(h, a, codes);
    ASSERT_EQ(decode_frame_reference(f.model.decoder(), h, b), codes);
  }
}

TEST(StaticFrameDecoder, RequiresResetBetweenFrames) {
  Fixture f(3);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler s(nn::SamplerConfig{}, 16);
  std::vector<float> h(32, 0.1f);
  std::vector<TokenId> codes(3);
  dec.decode_frame(h, s, codes);
  EXPECT_EQ(dec.block().fill_count(), 3u);
  EXPECT_THROW(dec.decode_frame(h, s, codes), ContractViolation);
  dec.reset();
  EXPECT_NO_THROW(dec.decode_frame(h, s, codes));
}

TEST(StaticFrameDecoder, RejectsNanHidden) {
  Fixture f(2);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler s(nn::SamplerConfig{}, 16);
  std::vector<float> h(32, 0.0f);
  h[3] = std::nanf("");
  std::vector<TokenId> codes(2);
  EXPECT_THROW(dec.decode_frame(h, s, codes), std::invalid_argument);
}

TEST(StaticFrameDecoder, BlockAccountingAndNoSteadyStateAllocation) {
  Fixture f(5);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler s(Temperature(4), f.model.decoder().max_head_size());
  Rng rng(4);
  std::vector<TokenId> codes(5);
  std::vector<std::vector<float>> inputs;
  for (int i = 0; i < 100; ++i) inputs.push_back(testing::normal_vector(rng, 32));
  dec.decode_frame(inputs[0], s, codes);  // warmup
  nn::RuntimeCounters counters;
  std::size_t allocations = 0;
  for (const auto& h : inputs) {
    const std::uint64_t before = counters.decoder_blocks;
    testing::AllocationScope scope;
    dec.reset();
    dec.decode_frame(h, s, codes, {}, &counters);
    allocations += scope.count();
    EXPECT_EQ(counters.decoder_blocks - before, 5u * 2u);
  }
  EXPECT_EQ(allocations, 0u);
  EXPECT_EQ(counters.decoder_invocations, 100u);
  EXPECT_EQ(counters.decoder_steps, 500u);
  EXPECT_EQ(counters.decoder_allocations, 0u);
  EXPECT_EQ(dec.block().capacity(), 5u);
}

TEST(StaticFrameDecoder, InnerLoopIsCausal) {
  Fixture f(5);
  StaticFrameDecoder dec(f.model.decoder());
  nn::Sampler s(nn::SamplerConfig{}, 16);
  const auto& d = f.model.decoder();
  Rng rng(5);
  const auto h = testing::normal_vector(rng, 32);
  std::vector<TokenId> forced{1, 2, 3, 4, 5}, codes(5);
  std::vector<float> base(d.total_logits()), moved(d.total_logits());
  dec.reset();
  dec.decode_frame(h, s, codes, {.forced = forced, .logits_out = base, .allow_eos = true});
  forced[2] = 9;
  dec.reset();
  dec.decode_frame(h, s, codes, {.forced = forced, .logits_out = moved, .allow_eos = true});
  for (std::size_t k = 0; k < 5; ++k) {
    const auto first = static_cast<std::ptrdiff_t>(d.head_offset(k));
    const auto last = first + static_cast<std::ptrdiff_t>(d.head_size(k));
    const bool same = std::equal(base.begin() + first, base.begin() + last, moved.begin() + first);
    if (k <= 2) {
      EXPECT_TRUE(same) << "head " << k;
    } else {
      EXPECT_FALSE(same) << "head " << k;
    }
  }
}

TEST(HierarchySession, OneFrameEmitsKTokens) {
  Fixture f(3);
  nn::SessionOptions opt;
  opt.allow_eos = false;
  HierarchySession session(f.model, *f.pool, f.stack, opt);
  const auto r = session.run(std::vector<float>(2 * 32, 0.5f), 1);
  EXPECT_EQ(r.tokens.frames(), 1u);
  EXPECT_EQ(r.tokens.codebooks(), 3u);
  EXPECT_EQ(r.frame_wall_ns.size(), 1u);
}

TEST(HierarchySession, TwentyFiveFramesAtKEightIsTwoHundredTokens) {
  Fixture f(8, 16);
  nn::SessionOptions opt;
  opt.allow_eos = false;
  HierarchySession session(f.model, *f.pool, f.stack, opt);
  Rng rng(6);
  const auto r = session.run(testing::normal_vector(rng, 4 * 32), 25);
  EXPECT_EQ(r.tokens.frames() * r.tokens.codebooks(), 200u);
  EXPECT_EQ(r.counters.decoder_invocations, 25u);
  EXPECT_EQ(r.counters.decoder_blocks, 25u * 8u * 2u);
  EXPECT_EQ(r.counters.backbone_positions, 4u + 24u);
  EXPECT_EQ(r.counters.decoder_allocations, 0u);
  EXPECT_EQ(f.pool->pages_in_use(), 0u);
}

TEST(HierarchySession, RejectsZeroFramesAndMismatchedStacks) {
  Fixture f(3);
  EXPECT_THROW(run_hierarchy(f.model, std::vector<float>(32, 0.0f), 0, nn::SamplerConfig{}, f.stack),
               std::invalid_argument);
  HierarchySession session(f.model, *f.pool, f.stack);
  EXPECT_THROW(session.run(std::vector<float>(32, 0.0f), 0), std::invalid_argument);
  const auto wrong_k = rvq::QuantizerStack::random(2, 4, 12, 32, 25, 1);
  EXPECT_THROW(HierarchySession(f.model, *f.pool, wrong_k), std::invalid_argument);
  const auto wrong_h = rvq::QuantizerStack::random(3, 4, 12, 16, 25, 1);
  EXPECT_THROW(HierarchySession(f.model, *f.pool, wrong_h), std::invalid_argument);
  const auto wrong_e = rvq::QuantizerStack::random(3, 4, 11, 32, 25, 1);
  EXPECT_THROW(HierarchySession(f.model, *f.pool, wrong_e), std::invalid_argument);
}

TEST(HierarchySession, PrefillNeverTouchesDecoder) {
  Fixture f(4);
  HierarchySession session(f.model, *f.pool, f.stack);
  Rng rng(7);
  const auto r = session.prefill_only(testing::normal_vector(rng, 9 * 32));
  EXPECT_EQ(r.decoder_steps_at_first_token, 0u);
  EXPECT_EQ(r.counters.decoder_invocations, 0u);
  EXPECT_EQ(r.counters.backbone_positions, 9u);
  EXPECT_EQ(r.tokens.frames(), 0u);
  const auto run = session.run(testing::normal_vector(rng, 9 * 32), 3);
  EXPECT_EQ(run.decoder_steps_at_first_token, 0u);
}

TEST(HierarchySession, PrefixReplayReproducesShorterRun) {
  Fixture f(3);
  HierarchySession session(f.model, *f.pool, f.stack);
  Rng rng(8);
  const auto prompt = testing::normal_vector(rng, 5 * 32);
  const auto long_run = session.run(prompt, 10);
  const auto short_run = session.run(prompt, 4);
  ASSERT_EQ(short_run.tokens.frames(), 4u);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_TRUE(std::ranges::equal(short_run.tokens.row(t), long_run.tokens.row(t))) << t;
  }
  // Replaying the long run's tokens as forced input gives identical tokens.
  std::vector<float> logits;
  const auto forced = session.run_forced(prompt, long_run.tokens, logits);
  EXPECT_EQ(forced.tokens, long_run.tokens);
}

TEST(HierarchySession, PromptTruncationChangesLogits) {
  Fixture f(3);
  HierarchySession session(f.model, *f.pool, f.stack);
  Rng rng(9);
  const auto prompt = testing::normal_vector(rng, 6 * 32);
  const TokenGrid forced(3, 3, std::vector<TokenId>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  std::vector<float> full, cut;
  session.run_forced(prompt, forced, full);
  session.run_forced(std::span<const float>(prompt).first(5 * 32), forced, cut);
  EXPECT_NE(full, cut);
}

// Forced-token perturbation over frames and codebooks: logits before the
// perturbed cell, in time-then-depth order, never move.
TEST(HierarchySession, DualArDependencyStructure) {
  Fixture f(4);
  HierarchySession session(f.model, *f.pool, f.stack);
  const auto& d = f.model.decoder();
  Rng rng(10);
  const auto prompt = testing::normal_vector(rng, 3 * 32);
  TokenGrid grid(5, 4);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t k = 0; k < 4; ++k) grid.at(t, k) = static_cast<TokenId>(rng.below(12));
  }
  std::vector<float> base;
  session.run_forced(prompt, grid, base);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = rng.below(5), k = rng.below(4);
    TokenGrid moved = grid;
    moved.at(t, k) = static_cast<TokenId>((grid.at(t, k) + 1 + rng.below(11)) % 12);
    std::vector<float> logits;
    session.run_forced(prompt, moved, logits);
    for (std::size_t tt = 0; tt < 5; ++tt) {
      for (std::size_t kk = 0; kk < 4; ++kk) {
        if (tt > t || (tt == t && kk > k)) continue;
        const std::size_t off = tt * d.total_logits() + d.head_offset(kk);
        EXPECT_TRUE(std::equal(base.begin() + static_cast<std::ptrdiff_t>(off),
                               base.begin() + static_cast<std::ptrdiff_t>(off + d.head_size(kk)),
                               logits.begin() + static_cast<std::ptrdiff_t>(off)))
            << "perturbed (" << t << "," << k << ") moved (" << tt << "," << kk << ")";
      }
    }
  }
}

TEST(HierarchySession, ForcedEosEndsRunWithoutEmittingFrame) {
  Fixture f(3);
  HierarchySession session(f.model, *f.pool, f.stack);
  TokenGrid forced(4, 3, 1);
  forced.at(2, 0) = f.model.decoder().eos_id();
  std::vector<float> logits;
  const auto r = session.run_forced(std::vector<float>(32, 0.2f), forced, logits);
  EXPECT_TRUE(r.hit_eos);
  EXPECT_EQ(r.tokens.frames(), 2u);
  EXPECT_EQ(r.frame_wall_ns.size(), 2u);
  EXPECT_TRUE(session.state().terminated);
}

TEST(HierarchySession, FakeClockTimestamps) {
  Fixture f(2);
  FakeClock clock(1'000'000);
  nn::SessionOptions opt;
  opt.clock = &clock;
  opt.allow_eos = false;
  HierarchySession session(f.model, *f.pool, f.stack, opt);
  const auto r = session.run(std::vector<float>(3 * 32, 0.3f), 5);
  EXPECT_EQ(r.ttft_ns, 0);
  EXPECT_EQ(r.frame_wall_ns, (std::vector<std::int64_t>{1'000'000, 2'000'000, 3'000'000, 4'000'000, 5'000'000}));
}

TEST(HierarchySession, SeededSamplingIsDeterministic) {
  Fixture f(3);
  nn::SessionOptions opt;
  opt.sampler = Temperature(31);
  HierarchySession a(f.model, *f.pool, f.stack, opt), b(f.model, *f.pool, f.stack, opt);
  const std::vector<float> prompt(4 * 32, -0.1f);
  EXPECT_EQ(a.run(prompt, 8).tokens, b.run(prompt, 8).tokens);
  EXPECT_EQ(a.run(prompt, 8).tokens, a.run(prompt, 8).tokens);
}

TEST(HierarchySession, ConcatFeedbackIsAnAlternativeWiring) {
  Fixture f(3);
  nn::SessionOptions sum_opt, cat_opt;
  cat_opt.feedback = rvq::EmbeddingAggregation::kConcat;
  HierarchySession sum(f.model, *f.pool, f.stack, sum_opt), cat(f.model, *f.pool, f.stack, cat_opt);
  Rng rng(11);
  const auto prompt = testing::normal_vector(rng, 2 * 32);
  const TokenGrid forced(3, 3, std::vector<TokenId>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  std::vector<float> a, b;
  sum.run_forced(prompt, forced, a);
  cat.run_forced(prompt, forced, b);
  const std::size_t first = f.model.decoder().total_logits();
  EXPECT_TRUE(std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(first), b.begin()));
  EXPECT_NE(a, b);
}

TEST(HierarchyModel, BlobAndDescriptorRoundTrip) {
  Fixture f(3);
  auto flatten = [](HierarchyModel& m) {
    std::vector<float> all;
    m.for_each_parameter([&](std::span<float> w) { all.insert(all.end(), w.begin(), w.end()); });
    return all;
  };
  HierarchyModel regenerated = HierarchyModel::from_descriptor(f.model.descriptor());
  EXPECT_EQ(flatten(regenerated), flatten(f.model));
  HierarchyModel loaded = HierarchyModel::from_blob(f.model.to_blob());
  EXPECT_EQ(flatten(loaded), flatten(f.model));
  EXPECT_EQ(loaded.decoder().config().decoder_dim, 16u);
  nn::MultiheadModel other(Backbone(3));
  EXPECT_THROW(HierarchyModel::from_blob(other.to_blob()), FormatError);
}

}  // namespace
}  // namespace mctok::hier
