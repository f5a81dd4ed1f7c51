// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/nn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mctok::nn {
namespace {

void CheckLogits(std::span<const float> logits) {
  if (logits.empty()) throw std::invalid_argument("sample: empty logits");
  for (float v : logits) {
    if (std::isnan(v)) throw std::invalid_argument("sample: NaN logit");
  }
}

}  // namespace

void SamplerConfig::validate() const {
  if (mode == SampleMode::kTemperature && !(temperature > 0.0f && std::isfinite(temperature))) {
    throw std::invalid_argument("SamplerConfig: temperature must be positive");
  }
  if (top_k && *top_k == 0) throw std::invalid_argument("SamplerConfig: top_k must be positive");
}

std::size_t argmax(std::span<const float> logits) {
  CheckLogits(logits);
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  if (logits[best] == -std::numeric_limits<float>::infinity()) throw std::invalid_argument("sample: every id masked");
  return best;
}

Sampler::Sampler(const SamplerConfig& config, std::size_t max_vocab) : config_(config), rng_(config.seed) {
  config_.validate();
  probs_.resize(max_vocab);
  order_.resize(max_vocab);
}

void Sampler::ensure_scratch(std::size_t n) {
  if (probs_.size() < n) {
    probs_.resize(n);
    order_.resize(n);
    ++growths_;
  }
}

std::size_t Sampler::sample(std::span<const float> logits) {
  const std::size_t best = argmax(logits);
  if (config_.mode == SampleMode::kGreedy) return best;

  const std::size_t n = logits.size();
  ensure_scratch(n);
  const double max_logit = logits[best];
  const double inv_t = 1.0 / config_.temperature;

  // Ids outside the top-k (ties resolved toward lower index) get zero mass.
  double kth_value = -std::numeric_limits<double>::infinity();
  std::size_t kth_index = n;
  if (config_.top_k && *config_.top_k < n) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::uint32_t>(i);
    const auto before = [&](std::uint32_t a, std::uint32_t b) {
      return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
    };
    const auto nth = order_.begin() + static_cast<std::ptrdiff_t>(*config_.top_k - 1);
    std::nth_element(order_.begin(), nth, order_.begin() + static_cast<std::ptrdiff_t>(n), before);
    kth_value = logits[*nth];
    kth_index = *nth;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool kept = kth_index == n || logits[i] > kth_value || (logits[i] == kth_value && i <= kth_index);
    const double p = kept ? std::exp((static_cast<double>(logits[i]) - max_logit) * inv_t) : 0.0;
    probs_[i] = p;
    total += p;
  }

  const double target = rng_.uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = best;
  for (std::size_t i = 0; i < n; ++i) {
    if (probs_[i] <= 0.0) continue;
    cumulative += probs_[i];
    last_positive = i;
    if (target < cumulative) return i;
  }
  return last_positive;
}

}  // namespace mctok::nn
