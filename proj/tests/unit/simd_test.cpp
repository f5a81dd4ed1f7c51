// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mctok/simd/kernels.hpp"
#include "random.hpp"

namespace mctok::simd {
namespace {

std::vector<const KernelTable*> AvailableTables() {
  std::vector<const KernelTable*> out;
  for (Level l : {Level::kScalar, Level::kAvx2, Level::kNeon}) {
    if (const KernelTable* t = table_for(l)) out.push_back(t);
  }
  return out;
}

double DotOracle(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double AbsSum(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) * b[i]);
  return s;
}

TEST(SimdDispatch, ScalarAlwaysAvailable) {
  EXPECT_TRUE(supported(Level::kScalar));
  EXPECT_TRUE(supported(detect_best()));
  EXPECT_EQ(level_name(Level::kAvx2), "avx2");
}

TEST(SimdDispatch, SetLevelRejectsMissingLevel) {
  for (Level l : {Level::kAvx2, Level::kNeon}) {
    if (!supported(l)) {
      EXPECT_THROW(set_level(l), std::invalid_argument);
    }
  }
  const Level before = kernels().level;
  set_level(Level::kScalar);
  EXPECT_EQ(kernels().level, Level::kScalar);
  set_level(before);
}

// Every level agrees with a double-precision oracle to within the usual
// float summation bound, for lengths that exercise all tail paths.
TEST(SimdKernels, ReductionsMatchDoubleOracle) {
  Rng rng(1);
  for (const KernelTable* t : AvailableTables()) {
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = testing::normal_vector(rng, n);
      const auto b = testing::normal_vector(rng, n);
      const double bound = 2.0 * (n + 1) * 0x1.0p-24 * AbsSum(a, b) + 1e-30;
      EXPECT_NEAR(t->dot(a.data(), b.data(), n), DotOracle(a, b), bound) << t->name << " n=" << n;
      EXPECT_NEAR(t->sq_norm(a.data(), n), DotOracle(a, a), bound + 2.0 * (n + 1) * 0x1.0p-24 * AbsSum(a, a))
          << t->name;
      double l2 = 0, l2abs = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        l2 += d * d;
        l2abs += d * d;
      }
      EXPECT_NEAR(t->l2_sq(a.data(), b.data(), n), l2, 4.0 * (n + 1) * 0x1.0p-24 * l2abs + 1e-30) << t->name;
    }
  }
}

TEST(SimdKernels, L2OfIdenticalVectorsIsZero) {
  Rng rng(2);
  const auto a = testing::normal_vector(rng, 37);
  for (const KernelTable* t : AvailableTables()) EXPECT_EQ(t->l2_sq(a.data(), a.data(), a.size()), 0.0f);
}

TEST(SimdKernels, AxpyMatchesScalarWithinOneRounding) {
  Rng rng(3);
  for (const KernelTable* t : AvailableTables()) {
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 33u}) {
      const auto x = testing::normal_vector(rng, n);
      auto y = testing::normal_vector(rng, n);
      auto ref = y;
      t->axpy(0.75f, x.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        const double want = static_cast<double>(ref[i]) + 0.75 * x[i];
        EXPECT_NEAR(y[i], want, 2.0 * 0x1.0p-24 * (std::abs(ref[i]) + std::abs(0.75 * x[i])) + 1e-30);
      }
    }
  }
}

// Within one level, matvec and matmul_nt reproduce dot() bit for bit. The
// incremental and batched decode paths rely on this.
TEST(SimdKernels, MatrixKernelsAreBitIdenticalToDot) {
  Rng rng(4);
  for (const KernelTable* t : AvailableTables()) {
    for (std::size_t rows : {1u, 3u, 4u, 5u, 9u}) {
      for (std::size_t cols : {1u, 8u, 13u, 64u, 67u}) {
        for (std::size_t n : {1u, 2u, 4u, 5u, 7u}) {
          const auto w = testing::normal_vector(rng, rows * cols);
          const auto x = testing::normal_vector(rng, n * cols);
          std::vector<float> mv(rows), mm(n * rows);
          t->matvec(w.data(), rows, cols, x.data(), mv.data());
          t->matmul_nt(x.data(), n, w.data(), rows, cols, mm.data());
          for (std::size_t r = 0; r < rows; ++r) {
            const float d0 = t->dot(w.data() + r * cols, x.data(), cols);
            EXPECT_EQ(mv[r], d0) << t->name << " rows=" << rows << " cols=" << cols;
            for (std::size_t i = 0; i < n; ++i) {
              EXPECT_EQ(mm[i * rows + r], t->dot(x.data() + i * cols, w.data() + r * cols, cols)) << t->name;
            }
          }
        }
      }
    }
  }
}

TEST(SimdKernels, VectorLevelsAgreeWithScalar) {
  const KernelTable& s = *table_for(Level::kScalar);
  Rng rng(5);
  for (const KernelTable* t : AvailableTables()) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(300);
      const auto a = testing::normal_vector(rng, n);
      const auto b = testing::normal_vector(rng, n);
      const double bound = 4.0 * n * 0x1.0p-24 * AbsSum(a, b);
      EXPECT_NEAR(t->dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n), bound) << t->name;
    }
  }
}

}  // namespace
}  // namespace mctok::simd
