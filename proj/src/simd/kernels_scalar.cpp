// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/simd/kernels.hpp"

namespace mctok::simd::scalar {
namespace {

float Dot(const float* a, const float* b, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

float L2Sq(const float* a, const float* b, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

float SqNorm(const float* a, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * a[i];
  return sum;
}

void Axpy(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void MatVec(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = Dot(w + r * cols, x, cols);
}

void MatMulNT(const float* x, std::size_t n, const float* w, std::size_t rows, std::size_t cols, float* y) {
  for (std::size_t i = 0; i < n; ++i) MatVec(w, rows, cols, x + i * cols, y + i * rows);
}

}  // namespace

const KernelTable kTable{Level::kScalar, "scalar", Dot, L2Sq, SqNorm, Axpy, MatVec, MatMulNT};

}  // namespace mctok::simd::scalar
