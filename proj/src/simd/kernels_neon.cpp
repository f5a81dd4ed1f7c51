// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

// AArch64 only; NEON is part of the base ISA there.

#include <arm_neon.h>

#include <cmath>

#include "mctok/simd/kernels.hpp"

namespace mctok::simd::neon {
namespace {

inline float DotTail(float acc, const float* a, const float* b, std::size_t i, std::size_t n) {
  for (; i < n; ++i) acc = std::fma(a[i], b[i], acc);
  return acc;
}

float Dot(const float* a, const float* b, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
  return DotTail(vaddvq_f32(acc), a, b, i, n);
}

float L2Sq(const float* a, const float* b, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t d = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
    acc = vfmaq_f32(acc, d, d);
  }
  float sum = vaddvq_f32(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    sum = std::fma(d, d, sum);
  }
  return sum;
}

float SqNorm(const float* a, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(a + i);
    acc = vfmaq_f32(acc, v, v);
  }
  float sum = vaddvq_f32(acc);
  for (; i < n; ++i) sum = std::fma(a[i], a[i], sum);
  return sum;
}

void Axpy(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void MatVec(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = Dot(w + r * cols, x, cols);
}

void MatMulNT(const float* x, std::size_t n, const float* w, std::size_t rows, std::size_t cols, float* y) {
  for (std::size_t i = 0; i < n; ++i) MatVec(w, rows, cols, x + i * cols, y + i * rows);
}

}  // namespace

const KernelTable kTable{Level::kNeon, "neon", Dot, L2Sq, SqNorm, Axpy, MatVec, MatMulNT};

}  // namespace mctok::simd::neon
