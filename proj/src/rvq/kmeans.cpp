// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/rvq/kmeans.hpp"

#include <numeric>
#include <stdexcept>

#include "mctok/rng.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::rvq {

KMeansResult kmeans(const Matrix& data, std::size_t k, std::uint64_t seed, int max_iterations,
                    double relative_tolerance) {
  const std::size_t n = data.rows();
  const std::size_t dim = data.cols();
  if (k == 0) throw std::invalid_argument("kmeans: k must be positive");
  if (n < k) throw std::invalid_argument("kmeans: fewer training rows than clusters");

  // Partial Fisher-Yates: the first k slots become distinct sample indices.
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.below(n - i)]);

  KMeansResult result;
  result.centroids = Matrix(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = data.row(order[c]);
    std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
  }
  result.assignment.assign(n, 0);

  const auto& kern = simd::kernels();
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  for (int iter = 0; iter < max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = data.row(i).data();
      std::uint32_t best = 0;
      float best_d = kern.l2_sq(x, result.centroids.row(0).data(), dim);
      for (std::size_t c = 1; c < k; ++c) {
        const float d = kern.l2_sq(x, result.centroids.row(c).data(), dim);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      result.assignment[i] = best;
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.assignment[i];
      const auto x = data.row(i);
      double* s = sums.data() + c * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
      ++counts[c];
    }

    double shift = 0.0;
    double norm = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto centroid = result.centroids.row(c);
      if (counts[c] == 0) {
        for (float v : centroid) norm += static_cast<double>(v) * v;
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < dim; ++j) {
        const float updated = counts[c] == 1 ? static_cast<float>(sums[c * dim + j])
                                             : static_cast<float>(sums[c * dim + j] * inv);
        const double delta = static_cast<double>(updated) - centroid[j];
        shift += delta * delta;
        norm += static_cast<double>(updated) * updated;
        centroid[j] = updated;
      }
    }
    result.iterations = iter + 1;
    if (shift <= relative_tolerance * std::max(norm, 1e-30)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace mctok::rvq
