// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mctok/simd/kernels.hpp"

namespace mctok::simd {
namespace {

bool CpuHasAvx2() {
#if defined(MCTOK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* Initial() {
  Level level = detect_best();
  if (const char* env = std::getenv("MCTOK_SIMD")) {
    const std::string want(env);
    if (want == "scalar") level = Level::kScalar;
    if (want == "avx2" && supported(Level::kAvx2)) level = Level::kAvx2;
    if (want == "neon" && supported(Level::kNeon)) level = Level::kNeon;
  }
  return table_for(level);
}

const KernelTable*& Active() {
  static const KernelTable* active = Initial();
  return active;
}

}  // namespace

const KernelTable* table_for(Level level) {
  switch (level) {
    case Level::kScalar:
      return &scalar::kTable;
    case Level::kAvx2:
#if defined(MCTOK_HAVE_AVX2)
      if (CpuHasAvx2()) return &avx2::kTable;
#endif
      return nullptr;
    case Level::kNeon:
#if defined(MCTOK_HAVE_NEON)
      return &neon::kTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool supported(Level level) { return table_for(level) != nullptr; }

Level detect_best() {
  if (supported(Level::kAvx2)) return Level::kAvx2;
  if (supported(Level::kNeon)) return Level::kNeon;
  return Level::kScalar;
}

const KernelTable& kernels() { return *Active(); }

void set_level(Level level) {
  const KernelTable* table = table_for(level);
  if (table == nullptr) throw std::invalid_argument("SIMD level not available: " + std::string(level_name(level)));
  Active() = table;
}

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kScalar:
      return "scalar";
    case Level::kAvx2:
      return "avx2";
    case Level::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace mctok::simd
