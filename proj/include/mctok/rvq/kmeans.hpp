// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mctok/rvq/frames.hpp"

namespace mctok::rvq {

struct KMeansResult {
  Matrix centroids;
  std::vector<std::uint32_t> assignment;
  int iterations = 0;
  bool converged = false;
};

// Lloyd's algorithm. Centroids start at `k` distinct training rows drawn with
// the seeded generator. Each iteration assigns then recomputes means, so the
// returned centroids are the means of the returned assignment. Empty clusters
// keep their previous centroid. Stops when the summed squared centroid shift
// falls below `relative_tolerance` times the summed squared centroid norm.
KMeansResult kmeans(const Matrix& data, std::size_t k, std::uint64_t seed, int max_iterations,
                    double relative_tolerance);

}  // namespace mctok::rvq
