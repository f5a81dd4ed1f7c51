// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

// Built with -mavx2 -mfma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "mctok/simd/kernels.hpp"

namespace mctok::simd::avx2 {
namespace {

inline float HorizontalSum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// Every dot product in this file goes through this exact accumulation order:
// one 8-lane FMA chain, fixed horizontal reduction, then a scalar FMA tail.
inline float DotTail(float acc, const float* a, const float* b, std::size_t i, std::size_t n) {
  for (; i < n; ++i) acc = std::fma(a[i], b[i], acc);
  return acc;
}

float Dot(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  return DotTail(HorizontalSum(acc), a, b, i, n);
}

float L2Sq(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float sum = HorizontalSum(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    sum = std::fma(d, d, sum);
  }
  return sum;
}

float SqNorm(const float* a, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(a + i);
    acc = _mm256_fmadd_ps(v, v, acc);
  }
  float sum = HorizontalSum(acc);
  for (; i < n; ++i) sum = std::fma(a[i], a[i], sum);
  return sum;
}

void Axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// Four weight rows against one input: four independent chains, each identical
// to Dot() on its own row.
inline void Dot4(const float* w, std::size_t cols, const float* x, float* out) {
  const float* w0 = w;
  const float* w1 = w + cols;
  const float* w2 = w + 2 * cols;
  const float* w3 = w + 3 * cols;
  __m256 a0 = _mm256_setzero_ps();
  __m256 a1 = _mm256_setzero_ps();
  __m256 a2 = _mm256_setzero_ps();
  __m256 a3 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= cols; i += 8) {
    const __m256 xv = _mm256_loadu_ps(x + i);
    a0 = _mm256_fmadd_ps(_mm256_loadu_ps(w0 + i), xv, a0);
    a1 = _mm256_fmadd_ps(_mm256_loadu_ps(w1 + i), xv, a1);
    a2 = _mm256_fmadd_ps(_mm256_loadu_ps(w2 + i), xv, a2);
    a3 = _mm256_fmadd_ps(_mm256_loadu_ps(w3 + i), xv, a3);
  }
  out[0] = DotTail(HorizontalSum(a0), w0, x, i, cols);
  out[1] = DotTail(HorizontalSum(a1), w1, x, i, cols);
  out[2] = DotTail(HorizontalSum(a2), w2, x, i, cols);
  out[3] = DotTail(HorizontalSum(a3), w3, x, i, cols);
}

void MatVec(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) Dot4(w + r * cols, cols, x, y + r);
  for (; r < rows; ++r) y[r] = Dot(w + r * cols, x, cols);
}

// Blocks of four input rows share each weight row load.
void MatMulNT(const float* x, std::size_t n, const float* w, std::size_t rows, std::size_t cols, float* y) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float* x0 = x + i * cols;
    const float* x1 = x0 + cols;
    const float* x2 = x1 + cols;
    const float* x3 = x2 + cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const float* wr = w + r * cols;
      __m256 a0 = _mm256_setzero_ps();
      __m256 a1 = _mm256_setzero_ps();
      __m256 a2 = _mm256_setzero_ps();
      __m256 a3 = _mm256_setzero_ps();
      std::size_t k = 0;
      for (; k + 8 <= cols; k += 8) {
        const __m256 wv = _mm256_loadu_ps(wr + k);
        a0 = _mm256_fmadd_ps(_mm256_loadu_ps(x0 + k), wv, a0);
        a1 = _mm256_fmadd_ps(_mm256_loadu_ps(x1 + k), wv, a1);
        a2 = _mm256_fmadd_ps(_mm256_loadu_ps(x2 + k), wv, a2);
        a3 = _mm256_fmadd_ps(_mm256_loadu_ps(x3 + k), wv, a3);
      }
      y[(i + 0) * rows + r] = DotTail(HorizontalSum(a0), x0, wr, k, cols);
      y[(i + 1) * rows + r] = DotTail(HorizontalSum(a1), x1, wr, k, cols);
      y[(i + 2) * rows + r] = DotTail(HorizontalSum(a2), x2, wr, k, cols);
      y[(i + 3) * rows + r] = DotTail(HorizontalSum(a3), x3, wr, k, cols);
    }
  }
  for (; i < n; ++i) MatVec(w, rows, cols, x + i * cols, y + i * rows);
}

}  // namespace

const KernelTable kTable{Level::kAvx2, "avx2", Dot, L2Sq, SqNorm, Axpy, MatVec, MatMulNT};

}  // namespace mctok::simd::avx2
