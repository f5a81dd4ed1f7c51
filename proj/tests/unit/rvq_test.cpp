// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "mctok/common.hpp"
#include "mctok/rvq/kmeans.hpp"
#include "mctok/rvq/quantizer.hpp"
#include "random.hpp"

namespace mctok::rvq {
namespace {

QuantizerStack MakeStack(std::vector<Matrix> books, std::size_t embed_dim = 4) {
  std::vector<Codebook> cbs;
  std::vector<Matrix> proj;
  for (std::size_t i = 0; i < books.size(); ++i) {
    proj.emplace_back(embed_dim, books[i].rows(), 0.0f);
    cbs.emplace_back(std::move(books[i]), i + 1);
  }
  return QuantizerStack(std::move(cbs), std::move(proj), 25);
}

// Exhaustive per-stage search in double precision, lowest index on ties.
struct OracleResult {
  std::vector<TokenId> codes;
  std::vector<float> residual;
};

OracleResult GreedyOracle(std::span<const float> f, const QuantizerStack& stack) {
  OracleResult out;
  out.residual.assign(f.begin(), f.end());
  for (std::size_t i = 0; i < stack.num_stages(); ++i) {
    const Codebook& book = stack.codebook(i);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < book.size(); ++k) {
      double d = 0;
      for (std::size_t j = 0; j < f.size(); ++j) {
        const double t = static_cast<double>(out.residual[j]) - book.entry(k)[j];
        d += t * t;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    for (std::size_t j = 0; j < f.size(); ++j) out.residual[j] -= book.entry(best)[j];
    out.codes.push_back(static_cast<TokenId>(best));
  }
  return out;
}

QuantizerStack ToyStack() {
  return MakeStack({Matrix(2, 2, {1.0f, 0.0f, 0.0f, 1.0f}), Matrix(2, 2, {0.1f, 0.0f, 0.0f, 0.1f})});
}

TEST(QuantizeFrame, ExactEntryQuantizesToItself) {
  Rng rng(1);
  const auto stack = MakeStack({testing::normal_matrix(rng, 8, 5)});
  const auto f = stack.codebook(0).entry(0);
  const auto r = quantize_frame(f, stack);
  EXPECT_EQ(r.codes, (CodeFrame{0}));
  EXPECT_EQ(r.stage_residual_norms.back(), 0.0f);
  EXPECT_TRUE(std::equal(f.begin(), f.end(), r.reconstruction.begin()));
}

TEST(QuantizeFrame, TwoDimensionalToyMatchesBruteForce) {
  const auto stack = ToyStack();
  const std::vector<float> f{1.05f, 0.02f};
  const auto r = quantize_frame(f, stack);
  const auto oracle = GreedyOracle(f, stack);
  EXPECT_EQ(r.codes, oracle.codes);
  EXPECT_EQ(r.codes, (CodeFrame{0, 0}));

  // For this input greedy is also the best of all four code paths.
  double best = std::numeric_limits<double>::infinity();
  CodeFrame best_path;
  for (TokenId a = 0; a < 2; ++a) {
    for (TokenId b = 0; b < 2; ++b) {
      const auto rec = dequantize(CodeFrame{a, b}, stack);
      const double d = std::pow(f[0] - rec[0], 2) + std::pow(f[1] - rec[1], 2);
      if (d < best) {
        best = d;
        best_path = {a, b};
      }
    }
  }
  EXPECT_EQ(r.codes, best_path);
  EXPECT_NEAR(r.stage_residual_norms.back(), std::hypot(-0.05, 0.02), 1e-6);
  EXPECT_EQ(dequantize(r.codes, stack), r.reconstruction);
}

TEST(QuantizeFrame, ZeroFramePicksLowestZeroRow) {
  Matrix book(4, 3, {1, 1, 1, 0, 0, 0, 2, 2, 2, 0, 0, 0});
  const auto stack = MakeStack({book, book});
  const auto r = quantize_frame(std::vector<float>(3, 0.0f), stack);
  EXPECT_EQ(r.codes, (CodeFrame{1, 1}));
  EXPECT_EQ(r.reconstruction, std::vector<float>(3, 0.0f));
}

TEST(QuantizeFrame, TiesGoToLowestIndex) {
  const auto stack = MakeStack({Matrix(3, 1, {1.0f, -1.0f, 1.0f})});
  EXPECT_EQ(quantize_frame(std::vector<float>{0.0f}, stack).codes, (CodeFrame{0}));
}

TEST(QuantizeFrame, RejectsBadInput) {
  const auto stack = ToyStack();
  EXPECT_THROW(quantize_frame(std::vector<float>{1.0f}, stack), std::invalid_argument);
  EXPECT_THROW(quantize_frame(std::vector<float>{std::nanf(""), 0.0f}, stack), std::invalid_argument);
  EXPECT_THROW(quantize_frame(std::vector<float>{INFINITY, 0.0f}, stack), std::invalid_argument);
}

TEST(QuantizeFrame, GreedyPropertyOnRandomStacks) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t D = 1 + rng.below(16), C = 1 + rng.below(4), E = 1 + rng.below(16);
    std::vector<Matrix> books;
    for (std::size_t i = 0; i < C; ++i) books.push_back(testing::normal_matrix(rng, E, D));
    const auto stack = MakeStack(books);
    for (int n = 0; n < 20; ++n) {
      const auto f = testing::normal_vector(rng, D, 2.0);
      const auto r = quantize_frame(f, stack);
      const auto oracle = GreedyOracle(f, stack);
      ASSERT_EQ(r.codes, oracle.codes);
      ASSERT_EQ(r.stage_residual_norms.size(), C + 1);
      // Chosen entry is at least as close as every other entry in its book.
      std::vector<float> res(f);
      for (std::size_t i = 0; i < C; ++i) {
        const auto& book = stack.codebook(i);
        for (std::size_t k = 0; k < E; ++k) {
          double d = 0;
          for (std::size_t j = 0; j < D; ++j) d += std::pow(static_cast<double>(res[j]) - book.entry(k)[j], 2);
          EXPECT_LE(r.stage_residual_norms[i + 1], std::sqrt(d) * (1 + 1e-5) + 1e-6);
        }
        for (std::size_t j = 0; j < D; ++j) res[j] -= book.entry(r.codes[i])[j];
      }
      EXPECT_EQ(dequantize(r.codes, stack), r.reconstruction);
    }
  }
}

TEST(QuantizeFrame, ResidualNormsNonIncreasingWithZeroRows) {
  Rng rng(8);
  std::vector<Matrix> books;
  for (int i = 0; i < 4; ++i) {
    Matrix m = testing::normal_matrix(rng, 6, 5);
    for (float& x : m.row(3)) x = 0.0f;
    books.push_back(m);
  }
  const auto stack = MakeStack(books);
  for (int n = 0; n < 100; ++n) {
    const auto r = quantize_frame(testing::normal_vector(rng, 5), stack);
    for (std::size_t i = 1; i < r.stage_residual_norms.size(); ++i) {
      EXPECT_LE(r.stage_residual_norms[i], r.stage_residual_norms[i - 1] * (1 + 1e-6f));
    }
  }
}

TEST(Dequantize, SingleStageReturnsEntryVerbatim) {
  Rng rng(9);
  const auto stack = MakeStack({testing::normal_matrix(rng, 5, 7)});
  for (TokenId k = 0; k < 5; ++k) {
    const auto e = stack.codebook(0).entry(k);
    EXPECT_EQ(dequantize(CodeFrame{k}, stack), std::vector<float>(e.begin(), e.end()));
  }
}

TEST(Dequantize, ZeroBooksGiveZero) {
  const auto stack = MakeStack({Matrix(3, 2, 0.0f), Matrix(3, 2, 0.0f)});
  EXPECT_EQ(dequantize(CodeFrame{2, 1}, stack), std::vector<float>(2, 0.0f));
}

TEST(Dequantize, RejectsOutOfRangeCodes) {
  const auto stack = ToyStack();
  EXPECT_THROW(dequantize(CodeFrame{0, 2}, stack), std::out_of_range);
  EXPECT_THROW(dequantize(CodeFrame{-1, 0}, stack), std::out_of_range);
  EXPECT_THROW(embed_codes(CodeFrame{0, 5}, stack), std::out_of_range);
}

TEST(EmbedCodes, ColumnSelect) {
  Matrix w(3, 4);
  for (std::size_t h = 0; h < 3; ++h) {
    for (std::size_t k = 0; k < 4; ++k) w(h, k) = static_cast<float>(h * 10 + k);
  }
  std::vector<Codebook> books{Codebook(Matrix(4, 2, 0.0f), 1), Codebook(Matrix(4, 2, 0.0f), 2)};
  const QuantizerStack stack(books, {w, w}, 25);
  const auto emb = embed_codes(CodeFrame{2, 3}, stack);
  ASSERT_EQ(emb.size(), 2u);
  EXPECT_EQ(emb[0], (std::vector<float>{2, 12, 22}));
  EXPECT_EQ(emb[1], (std::vector<float>{3, 13, 23}));

  std::vector<float> sum(3), cat(6);
  aggregate_embeddings(CodeFrame{2, 3}, stack, EmbeddingAggregation::kSum, sum);
  aggregate_embeddings(CodeFrame{2, 3}, stack, EmbeddingAggregation::kConcat, cat);
  EXPECT_EQ(sum, (std::vector<float>{5, 25, 45}));
  EXPECT_EQ(cat, (std::vector<float>{2, 12, 22, 3, 13, 23}));
}

TEST(EmbedCodes, ZeroProjectionGivesZero) {
  const auto stack = ToyStack();
  for (const auto& e : embed_codes(CodeFrame{1, 0}, stack)) EXPECT_EQ(e, std::vector<float>(4, 0.0f));
}

TEST(ReconstructionError, PartialStagesOnToyStack) {
  const auto stack = ToyStack();
  Matrix frames(0, 2);
  frames.append_row(std::vector<float>{1.05f, 0.02f});
  frames.append_row(std::vector<float>{0.1f, 0.9f});
  const double e1 = reconstruction_error(frames, stack, 1);
  const double e2 = reconstruction_error(frames, stack, 2);
  // Stage 1 picks (1,0) and (0,1); stage 2 picks (0.1,0) for both.
  const double o1 = (0.05 * 0.05 + 0.02 * 0.02 + 0.1 * 0.1 + 0.1 * 0.1) / 4;
  const double o2 = (0.05 * 0.05 + 0.02 * 0.02 + 0.0 + 0.1 * 0.1) / 4;
  EXPECT_NEAR(e1, o1, 1e-7);
  EXPECT_NEAR(e2, o2, 1e-7);
  EXPECT_LE(e2, e1);
}

TEST(ReconstructionError, ExactMembersGiveZero) {
  Rng rng(10);
  Matrix book = testing::normal_matrix(rng, 6, 4);
  const auto stack = MakeStack({book, Matrix(6, 4, 0.0f)});
  EXPECT_EQ(reconstruction_error(book, stack, 2), 0.0);
}

TEST(ReconstructionError, RejectsBadArguments) {
  const auto stack = ToyStack();
  Matrix frames(1, 2, 0.5f);
  EXPECT_THROW(reconstruction_error(frames, stack, 0), std::out_of_range);
  EXPECT_THROW(reconstruction_error(frames, stack, 3), std::out_of_range);
  EXPECT_THROW(reconstruction_error(Matrix(0, 2), stack, 1), std::invalid_argument);
}

TEST(ReconstructionError, MonotoneInStagesWithZeroRows) {
  Rng rng(11);
  std::vector<Matrix> books;
  for (int i = 0; i < 6; ++i) {
    Matrix m = testing::normal_matrix(rng, 8, 6, 1.0 / (i + 1));
    for (float& x : m.row(0)) x = 0.0f;
    books.push_back(m);
  }
  const auto stack = MakeStack(books);
  const Matrix frames = testing::normal_matrix(rng, 200, 6);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= 6; ++m) {
    const double e = reconstruction_error(frames, stack, m);
    EXPECT_LE(e, prev);
    prev = e;
  }
}

TEST(KMeans, SingletonClustersReproduceData) {
  Rng rng(12);
  const Matrix data = testing::normal_matrix(rng, 16, 3);
  const auto r = kmeans(data, 16, 5, 25, 1e-6);
  std::vector<bool> seen(16, false);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto c = r.centroids.row(r.assignment[i]);
    EXPECT_TRUE(std::equal(c.begin(), c.end(), data.row(i).begin()));
    EXPECT_FALSE(seen[r.assignment[i]]);
    seen[r.assignment[i]] = true;
  }
}

TEST(KMeans, CentroidsAreMeansOfFinalAssignment) {
  Rng rng(13);
  const Matrix data = testing::normal_matrix(rng, 300, 4);
  const auto r = kmeans(data, 7, 1, 25, 1e-6);
  for (std::size_t c = 0; c < 7; ++c) {
    std::vector<double> sum(4, 0.0);
    int n = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (r.assignment[i] != c) continue;
      ++n;
      for (int j = 0; j < 4; ++j) sum[j] += data(i, j);
    }
    if (n == 0) continue;
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(r.centroids(c, j), sum[j] / n, 1e-6);
  }
  EXPECT_LE(r.iterations, 25);
}

TEST(KMeans, RejectsTooFewPoints) {
  EXPECT_THROW(kmeans(Matrix(3, 2, 0.0f), 4, 0, 25, 1e-6), std::invalid_argument);
}

TEST(FitCodebooks, PerfectFitOnDistinctFrames) {
  Rng rng(14);
  const Matrix frames = testing::normal_matrix(rng, 12, 5);
  const auto stack = fit_codebooks(frames, 1, 12, 3);
  EXPECT_EQ(reconstruction_error(frames, stack, 1), 0.0);
}

TEST(FitCodebooks, DeterministicAndFinite) {
  Rng rng(15);
  const Matrix frames = testing::normal_matrix(rng, 200, 6);
  FitOptions opt;
  opt.embed_dim = 8;
  const auto a = fit_codebooks(frames, 3, 10, 42, opt);
  const auto b = fit_codebooks(frames, 3, 10, 42, opt);
  EXPECT_TRUE(a == b);
  for (std::size_t i = 0; i < a.num_stages(); ++i) {
    EXPECT_EQ(a.codebook(i).stage_index(), i + 1);
    for (float x : a.codebook(i).entries().data()) EXPECT_TRUE(std::isfinite(x));
    for (float x : a.projection(i).data()) EXPECT_LE(std::abs(x), 0.02f);
  }
  EXPECT_FALSE(a == fit_codebooks(frames, 3, 10, 43, opt));
}

TEST(FitCodebooks, ShallowFitIsPrefixOfDeepFit) {
  Rng rng(16);
  const Matrix frames = testing::normal_matrix(rng, 150, 4);
  const auto shallow = fit_codebooks(frames, 2, 8, 9);
  const auto deep = fit_codebooks(frames, 5, 8, 9);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(shallow.codebook(i).entries(), deep.codebook(i).entries());
    EXPECT_EQ(shallow.projection(i), deep.projection(i));
  }
}

TEST(FitCodebooks, ErrorNonIncreasingInStageCount) {
  Rng rng(17);
  const Matrix frames = testing::normal_matrix(rng, 400, 8);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t c : {1u, 4u, 8u, 16u}) {
    const double e = reconstruction_error(frames, fit_codebooks(frames, c, 16, 5), c);
    EXPECT_LE(e, prev) << "C=" << c;
    prev = e;
  }
}

TEST(FitCodebooks, RejectsInsufficientData) {
  EXPECT_THROW(fit_codebooks(Matrix(3, 2, 1.0f), 1, 4, 0), std::invalid_argument);
  EXPECT_THROW(fit_codebooks(Matrix(8, 2, 1.0f), 0, 4, 0), std::invalid_argument);
}

TEST(StackFormat, RoundTripIsBitExact) {
  const auto stack = QuantizerStack::random(3, 5, 7, 4, 50, 99);
  const auto bytes = serialize_stack(stack);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "QRVQ1");
  const auto back = deserialize_stack(bytes);
  EXPECT_TRUE(back == stack);
  EXPECT_EQ(back.frame_rate_hz(), 50u);
  EXPECT_EQ(bytes.size(), 5 + 5 * 4 + 4 * (3 * 7 * 5 + 3 * 4 * 7));

  const auto path = std::filesystem::temp_directory_path() / "mctok_stack_test.qrvq";
  save_stack(path, stack);
  EXPECT_TRUE(load_stack(path) == stack);
  std::filesystem::remove(path);
}

TEST(StackFormat, RejectsCorruptData) {
  auto bytes = serialize_stack(QuantizerStack::random(2, 3, 4, 2, 25, 1));
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_THROW(deserialize_stack(truncated), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_stack(bad_magic), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize_stack(trailing), FormatError);
}

TEST(QuantizerStack, RejectsInconsistentShapes) {
  std::vector<Codebook> books{Codebook(Matrix(4, 2, 0.0f), 1), Codebook(Matrix(4, 3, 0.0f), 2)};
  EXPECT_THROW(QuantizerStack(books, {Matrix(2, 4), Matrix(2, 4)}, 25), std::invalid_argument);
  std::vector<Codebook> ok{Codebook(Matrix(4, 2, 0.0f), 1)};
  EXPECT_THROW(QuantizerStack(ok, {Matrix(2, 5)}, 25), std::invalid_argument);
  EXPECT_THROW(QuantizerStack(ok, {Matrix(2, 4)}, 0), std::invalid_argument);
  EXPECT_THROW(QuantizerStack({}, {}, 25), std::invalid_argument);
}

}  // namespace
}  // namespace mctok::rvq
