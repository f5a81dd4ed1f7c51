// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mctok/bench/reports.hpp"
#include "mctok/bench/stats.hpp"
#include "mctok/clock.hpp"
#include "mctok/hier/hierarchy.hpp"
#include "mctok/io/kv_file.hpp"
#include "mctok/nn/model.hpp"
#include "mctok/nn/session.hpp"
#include "mctok/rvq/quantizer.hpp"

namespace mctok::bench {

enum class Mode { kHierarchy, kMultihead };
enum class Phase { kPrefill, kDecode };

std::string mode_name(Mode m);
Mode parse_mode(std::string_view s);
std::string phase_name(Phase p);
Phase parse_phase(std::string_view s);

struct BenchConfig {
  Mode mode = Mode::kHierarchy;
  std::vector<std::size_t> input_lengths{512, 256, 128, 64, 32, 16};
  std::size_t iterations = 100;
  std::size_t warmup = 3;
  std::size_t chunk_codebook_tokens = 200;
  std::uint32_t frame_rate_hz = 25;
  std::size_t codebooks = 8;
  // Frames decoded per TPOT run.
  std::size_t tpot_frames = 16;

  std::vector<std::size_t> batch_sizes{1};
  std::vector<Phase> phases{Phase::kPrefill, Phase::kDecode};
  std::vector<std::size_t> prefill_lengths{2048, 1024, 128};
  std::vector<std::size_t> decode_lengths{2048, 1024, 128};
  double duration_s = 10.0;
  // Sequences the stress-test page pool can hold; 0 sizes it to the batch.
  std::size_t pool_sequences = 0;

  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless every count is positive and the
  // chunk size is a multiple of the codebook count.
  void validate() const;

  // Overrides fields present in `kv`. Keys mirror the CLI flag names with
  // '-' replaced by '_' (input_len, iters, chunk_tokens, ...).
  void apply(const io::KeyValues& kv);
};

// First-chunk geometry: codebook tokens per chunk, backbone frames, seconds
// of audio. Construction checks the divisions are exact.
class ChunkSpec {
 public:
  ChunkSpec(std::size_t codebook_tokens, std::size_t codebooks, std::uint32_t frame_rate_hz);

  std::size_t codebook_tokens() const { return tokens_; }
  std::size_t codebooks() const { return codebooks_; }
  std::size_t backbone_frames() const { return tokens_ / codebooks_; }
  std::uint32_t frame_rate_hz() const { return rate_; }
  double audio_seconds() const { return static_cast<double>(backbone_frames()) / rate_; }

 private:
  std::size_t tokens_;
  std::size_t codebooks_;
  std::uint32_t rate_;
};

// Mean interval between consecutive frame completion times, in ms. The
// first frame is excluded as its time includes prefill. Throws
// std::invalid_argument with fewer than 2 frames.
double tpot_ms(std::span<const std::int64_t> frame_wall_ns);

// Uniform facade over the two decoding modes.
class SessionRunner {
 public:
  virtual ~SessionRunner() = default;
  virtual nn::GenerationResult run(std::span<const float> prompt, std::size_t frames) = 0;
  virtual nn::GenerationResult prefill_only(std::span<const float> prompt) = 0;
};

struct ChunkMeasurement {
  LatencyStats stats;
  std::vector<double> samples_ms;
  std::size_t failed_runs = 0;
};

struct StressResult {
  ThroughputRow row;
  std::size_t requests = 0;
};

// Owns one model (randomly initialised from `model`), its quantizer stack
// and a page pool, and measures latency and throughput against it.
class Bench {
 public:
  Bench(BenchConfig config, nn::ModelConfig model, Clock* clock = nullptr);
  ~Bench();

  const BenchConfig& config() const { return config_; }
  const nn::ModelConfig& model_config() const { return model_; }
  std::string model_name() const;

  // Fresh session on `pool`; benchmarks mask EOS so every request runs to
  // the requested length.
  std::unique_ptr<SessionRunner> make_runner(nn::PagePool& pool, Clock* clock) const;
  std::unique_ptr<SessionRunner> make_runner() { return make_runner(*pool_, clock_); }

  // Deterministic prompt of `length` backbone input embeddings.
  std::vector<float> prompt(std::size_t length) const;

  // Median TTFT over `iterations` runs. Throws ContractViolation if any run
  // saw decoder activity before its first hidden state.
  double measure_ttft(std::size_t input_length);
  std::vector<double> ttft_samples(std::size_t input_length);

  // Time until the chunk's last frame is emitted, aggregated over
  // `iterations` runs; failed runs are counted and left out.
  ChunkMeasurement measure_first_chunk(std::size_t input_length);

  // Mean TPOT over `iterations` runs of `tpot_frames` frames.
  double measure_tpot(std::size_t input_length);

  LatencyRow latency_row(std::size_t input_length);
  std::vector<LatencyRow> latency_report();

  // Runs `phase` on `batch` concurrent sessions for duration_s seconds.
  // `length` is the prompt length for prefill and the frame count for decode.
  StressResult stress_test(Phase phase, std::size_t length, std::size_t batch);
  // One report per configured batch size.
  std::vector<ThroughputReport> throughput_reports();

  ReportMeta meta() const;

 private:
  void warm_up(SessionRunner& runner, std::size_t input_length, std::size_t frames);

  BenchConfig config_;
  nn::ModelConfig model_;
  Clock* clock_;
  std::unique_ptr<hier::HierarchyModel> hierarchy_;
  std::unique_ptr<nn::MultiheadModel> multihead_;
  std::unique_ptr<rvq::QuantizerStack> stack_;
  std::unique_ptr<nn::PagePool> pool_;
};

}  // namespace mctok::bench
