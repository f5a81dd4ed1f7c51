// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mctok/rng.hpp"

namespace mctok::nn {

enum class SampleMode { kGreedy, kTemperature };

struct SamplerConfig {
  SampleMode mode = SampleMode::kGreedy;
  float temperature = 1.0f;
  std::optional<std::size_t> top_k;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stateful token sampler. Greedy picks the first maximum. Temperature mode
// draws exactly one uniform per call, so two samplers built from the same
// config produce the same sequence when fed the same logits. Logits may hold
// -inf (masked ids) but not NaN.
class Sampler {
 public:
  explicit Sampler(const SamplerConfig& config, std::size_t max_vocab = 0);

  std::size_t sample(std::span<const float> logits);

  const SamplerConfig& config() const { return config_; }
  // Number of times the scratch buffers had to grow.
  std::size_t scratch_growths() const { return growths_; }

 private:
  void ensure_scratch(std::size_t n);

  SamplerConfig config_;
  Rng rng_;
  std::vector<double> probs_;
  std::vector<std::uint32_t> order_;
  std::size_t growths_ = 0;
};

// Stateless argmax with lowest-index tie-break.
std::size_t argmax(std::span<const float> logits);

}  // namespace mctok::nn
