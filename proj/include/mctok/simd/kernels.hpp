// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace mctok::simd {

enum class Level { kScalar, kAvx2, kNeon };

// Function table for one instruction-set level. Within a level, matvec and
// matmul_nt reproduce dot() bit for bit on every output element, so batched
// and row-at-a-time transformer passes agree exactly.
struct KernelTable {
  Level level;
  const char* name;
  float (*dot)(const float* a, const float* b, std::size_t n);
  float (*l2_sq)(const float* a, const float* b, std::size_t n);
  float (*sq_norm)(const float* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // y[r] = dot(w + r * cols, x), w row-major [rows x cols]
  void (*matvec)(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y);
  // y[i * rows + r] = dot(x + i * cols, w + r * cols)
  void (*matmul_nt)(const float* x, std::size_t n, const float* w, std::size_t rows, std::size_t cols,
                    float* y);
};

// Active table. Chosen once at startup from CPU features, overridable with the
// MCTOK_SIMD environment variable ("scalar", "avx2", "neon").
const KernelTable& kernels();

// Table for a specific level, or nullptr when the build or CPU lacks it.
const KernelTable* table_for(Level level);

bool supported(Level level);
Level detect_best();

// Switches the active table. Not thread-safe; call before starting sessions.
void set_level(Level level);

std::string_view level_name(Level level);

inline float dot(std::span<const float> a, std::span<const float> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline float l2_sq(std::span<const float> a, std::span<const float> b) {
  return kernels().l2_sq(a.data(), b.data(), a.size());
}

inline float sq_norm(std::span<const float> a) { return kernels().sq_norm(a.data(), a.size()); }

inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

namespace scalar {
extern const KernelTable kTable;
}
#if defined(MCTOK_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif
#if defined(MCTOK_HAVE_NEON)
namespace neon {
extern const KernelTable kTable;
}
#endif

}  // namespace mctok::simd
