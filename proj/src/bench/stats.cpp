// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/bench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mctok::bench {

double nearest_rank(std::span<const double> sorted, double percent) {
  if (sorted.empty()) throw std::invalid_argument("nearest_rank: no samples");
  const auto n = static_cast<double>(sorted.size());
  // The small epsilon keeps p * n that lands on an integer from rounding up.
  auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencyStats percentiles(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("percentiles: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  LatencyStats s;
  s.avg = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  // Summation rounding can push the mean a hair outside [min, max].
  s.avg = std::clamp(s.avg, sorted.front(), sorted.back());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p95 = nearest_rank(sorted, 95.0);
  s.p99 = nearest_rank(sorted, 99.0);
  return s;
}

double median(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return nearest_rank(sorted, 50.0);
}

}  // namespace mctok::bench
