// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace mctok::bench {

struct LatencyStats {
  double avg = 0;
  double min = 0;
  double p95 = 0;
  double p99 = 0;
  double max = 0;
};

// Nearest-rank percentile of already-sorted samples: element ceil(p/100 * n)
// (1-based), clamped to [1, n].
double nearest_rank(std::span<const double> sorted, double percent);

// Throws std::invalid_argument on an empty sample set.
LatencyStats percentiles(std::span<const double> samples);

double median(std::span<const double> samples);

}  // namespace mctok::bench
