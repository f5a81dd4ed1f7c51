// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/bench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "mctok/common.hpp"
#include "mctok/layout/delay.hpp"
#include "mctok/nn/multihead_session.hpp"
#include "mctok/rng.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::bench {
namespace {

constexpr double kNsPerMs = 1e6;
// Latent dimensionality of the benchmark quantizer stack. Only its
// projections feed the model, so the value has no effect on timing.
constexpr std::size_t kLatentDim = 16;

class HierarchyRunner final : public SessionRunner {
 public:
  HierarchyRunner(const hier::HierarchyModel& model, nn::PagePool& pool, const rvq::QuantizerStack& stack,
                  nn::SessionOptions options)
      : session_(model, pool, stack, options) {}
  nn::GenerationResult run(std::span<const float> prompt, std::size_t frames) override {
    return session_.run(prompt, frames);
  }
  nn::GenerationResult prefill_only(std::span<const float> prompt) override { return session_.prefill_only(prompt); }

 private:
  hier::HierarchySession session_;
};

class MultiheadRunner final : public SessionRunner {
 public:
  MultiheadRunner(const nn::MultiheadModel& model, nn::PagePool& pool, nn::SessionOptions options)
      : session_(model, pool,
                 layout::DelaySpec::canonical(model.config().num_codebooks,
                                              static_cast<TokenId>(model.config().vocab_size)),
                 options) {}
  nn::GenerationResult run(std::span<const float> prompt, std::size_t frames) override {
    return session_.run(prompt, frames).generation;
  }
  nn::GenerationResult prefill_only(std::span<const float> prompt) override { return session_.prefill_only(prompt); }

 private:
  nn::MultiheadSession session_;
};

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw std::invalid_argument(std::string("bench config: ") + what + " must be positive");
}

void require_positive(const std::vector<std::size_t>& v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string("bench config: ") + what + " must not be empty");
  for (std::size_t x : v) require_positive(x, what);
}

std::vector<std::size_t> to_sizes(const std::vector<long long>& v, const char* what) {
  std::vector<std::size_t> out;
  for (long long x : v) {
    if (x <= 0) throw std::invalid_argument(std::string("bench config: ") + what + " must be positive");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::size_t non_negative(const io::KeyValues& kv, const char* key) {
  const long long v = kv.require_int(key);
  if (v < 0) throw std::invalid_argument(std::string("bench config: ") + key + " must not be negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string mode_name(Mode m) { return m == Mode::kHierarchy ? "hierarchy" : "multihead"; }

Mode parse_mode(std::string_view s) {
  if (s == "hierarchy") return Mode::kHierarchy;
  if (s == "multihead" || s == "multihead_delay") return Mode::kMultihead;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

std::string phase_name(Phase p) { return p == Phase::kPrefill ? "prefill" : "decode"; }

Phase parse_phase(std::string_view s) {
  if (s == "prefill") return Phase::kPrefill;
  if (s == "decode") return Phase::kDecode;
  throw std::invalid_argument("unknown phase: " + std::string(s));
}

void BenchConfig::validate() const {
  require_positive(input_lengths, "input_len");
  require_positive(iterations, "iters");
  require_positive(chunk_codebook_tokens, "chunk_tokens");
  require_positive(frame_rate_hz, "frame_rate");
  require_positive(codebooks, "codebooks");
  if (tpot_frames < 2) throw std::invalid_argument("bench config: tpot_frames must be at least 2");
  require_positive(batch_sizes, "batch");
  require_positive(prefill_lengths, "prefill_len");
  require_positive(decode_lengths, "decode_len");
  if (phases.empty()) throw std::invalid_argument("bench config: no phase selected");
  if (!(duration_s > 0)) throw std::invalid_argument("bench config: duration must be positive");
  ChunkSpec(chunk_codebook_tokens, codebooks, frame_rate_hz);
}

void BenchConfig::apply(const io::KeyValues& kv) {
  if (auto v = kv.get("mode")) mode = parse_mode(*v);
  if (kv.contains("input_len")) input_lengths = to_sizes(kv.require_int_list("input_len"), "input_len");
  if (kv.contains("iters")) iterations = non_negative(kv, "iters");
  if (kv.contains("warmup")) warmup = non_negative(kv, "warmup");
  if (kv.contains("chunk_tokens")) chunk_codebook_tokens = non_negative(kv, "chunk_tokens");
  if (kv.contains("frame_rate")) {
    const std::size_t rate = non_negative(kv, "frame_rate");
    if (rate > UINT32_MAX) throw std::invalid_argument("bench config: frame_rate out of range");
    frame_rate_hz = static_cast<std::uint32_t>(rate);
  }
  if (kv.contains("codebooks")) codebooks = non_negative(kv, "codebooks");
  if (kv.contains("tpot_frames")) tpot_frames = non_negative(kv, "tpot_frames");
  if (kv.contains("batch")) batch_sizes = to_sizes(kv.require_int_list("batch"), "batch");
  if (auto v = kv.get("phase")) {
    phases.clear();
    if (*v == "all") {
      phases = {Phase::kPrefill, Phase::kDecode};
    } else {
      phases.push_back(parse_phase(*v));
    }
  }
  if (kv.contains("prefill_len")) prefill_lengths = to_sizes(kv.require_int_list("prefill_len"), "prefill_len");
  if (kv.contains("decode_len")) decode_lengths = to_sizes(kv.require_int_list("decode_len"), "decode_len");
  if (kv.contains("duration")) duration_s = kv.get_double("duration", duration_s);
  if (kv.contains("pool_sequences")) pool_sequences = non_negative(kv, "pool_sequences");
  if (kv.contains("seed")) seed = kv.require_u64("seed");
}

ChunkSpec::ChunkSpec(std::size_t codebook_tokens, std::size_t codebooks, std::uint32_t frame_rate_hz)
    : tokens_(codebook_tokens), codebooks_(codebooks), rate_(frame_rate_hz) {
  if (tokens_ == 0 || codebooks_ == 0 || rate_ == 0) throw std::invalid_argument("ChunkSpec: zero field");
  if (tokens_ % codebooks_ != 0) {
    throw std::invalid_argument("ChunkSpec: " + std::to_string(tokens_) + " tokens not divisible by K=" +
                                std::to_string(codebooks_));
  }
}

double tpot_ms(std::span<const std::int64_t> frame_wall_ns) {
  if (frame_wall_ns.size() < 2) throw std::invalid_argument("tpot: need at least 2 frames");
  const auto span_ns = static_cast<double>(frame_wall_ns.back() - frame_wall_ns.front());
  return span_ns / static_cast<double>(frame_wall_ns.size() - 1) / kNsPerMs;
}

Bench::Bench(BenchConfig config, nn::ModelConfig model, Clock* clock)
    : config_(std::move(config)), model_(model), clock_(clock) {
  config_.validate();
  model_.num_codebooks = config_.codebooks;
  model_.validate();
  if (config_.mode == Mode::kHierarchy) {
    hierarchy_ = std::make_unique<hier::HierarchyModel>(model_);
    stack_ = std::make_unique<rvq::QuantizerStack>(rvq::QuantizerStack::random(
        model_.num_codebooks, kLatentDim, model_.vocab_size, model_.model_dim, config_.frame_rate_hz,
        derive_seed(model_.seed, 0x57AC)));
    pool_ = hierarchy_->backbone().make_pool(1);
  } else {
    multihead_ = std::make_unique<nn::MultiheadModel>(model_);
    pool_ = multihead_->backbone().make_pool(1);
  }
}

Bench::~Bench() = default;

std::string Bench::model_name() const {
  return mode_name(config_.mode) + "-L" + std::to_string(model_.layers) + "-D" + std::to_string(model_.model_dim);
}

std::unique_ptr<SessionRunner> Bench::make_runner(nn::PagePool& pool, Clock* clock) const {
  nn::SessionOptions options;
  options.sampler.mode = nn::SampleMode::kTemperature;
  options.sampler.seed = config_.seed;
  options.allow_eos = false;
  options.clock = clock;
  if (hierarchy_) return std::make_unique<HierarchyRunner>(*hierarchy_, pool, *stack_, options);
  return std::make_unique<MultiheadRunner>(*multihead_, pool, options);
}

std::vector<float> Bench::prompt(std::size_t length) const {
  Rng rng(derive_seed(config_.seed, length));
  std::vector<float> out(length * model_.model_dim);
  for (float& x : out) x = static_cast<float>(rng.normal());
  return out;
}

void Bench::warm_up(SessionRunner& runner, std::size_t input_length, std::size_t frames) {
  const auto p = prompt(input_length);
  for (std::size_t i = 0; i < config_.warmup; ++i) {
    if (frames == 0) {
      runner.prefill_only(p);
    } else {
      runner.run(p, frames);
    }
  }
}

std::vector<double> Bench::ttft_samples(std::size_t input_length) {
  auto runner = make_runner();
  warm_up(*runner, input_length, 0);
  const auto p = prompt(input_length);
  std::vector<double> samples;
  samples.reserve(config_.iterations);
  for (std::size_t i = 0; i < config_.iterations; ++i) {
    const nn::GenerationResult r = runner->prefill_only(p);
    if (r.decoder_steps_at_first_token != 0 || r.counters.decoder_invocations != 0) {
      throw ContractViolation("decoder activity observed during prefill");
    }
    samples.push_back(static_cast<double>(r.ttft_ns) / kNsPerMs);
  }
  return samples;
}

double Bench::measure_ttft(std::size_t input_length) { return median(ttft_samples(input_length)); }

ChunkMeasurement Bench::measure_first_chunk(std::size_t input_length) {
  const ChunkSpec chunk(config_.chunk_codebook_tokens, config_.codebooks, config_.frame_rate_hz);
  const std::size_t frames = chunk.backbone_frames();
  auto runner = make_runner();
  warm_up(*runner, input_length, frames);
  const auto p = prompt(input_length);
  ChunkMeasurement m;
  for (std::size_t i = 0; i < config_.iterations; ++i) {
    try {
      const nn::GenerationResult r = runner->run(p, frames);
      if (r.tokens.frames() != frames || r.tokens.frames() * r.tokens.codebooks() != chunk.codebook_tokens()) {
        ++m.failed_runs;
        continue;
      }
      m.samples_ms.push_back(static_cast<double>(r.frame_wall_ns.back()) / kNsPerMs);
    } catch (const std::exception&) {
      ++m.failed_runs;
    }
  }
  if (m.samples_ms.empty()) throw std::runtime_error("first chunk: every run failed");
  m.stats = percentiles(m.samples_ms);
  return m;
}

double Bench::measure_tpot(std::size_t input_length) {
  auto runner = make_runner();
  warm_up(*runner, input_length, config_.tpot_frames);
  const auto p = prompt(input_length);
  double total = 0;
  for (std::size_t i = 0; i < config_.iterations; ++i) {
    total += tpot_ms(runner->run(p, config_.tpot_frames).frame_wall_ns);
  }
  return total / static_cast<double>(config_.iterations);
}

LatencyRow Bench::latency_row(std::size_t input_length) {
  const ChunkMeasurement chunk = measure_first_chunk(input_length);
  LatencyRow row;
  row.model = model_name();
  row.backbone_input_length = input_length;
  row.avg_ms = chunk.stats.avg;
  row.min_ms = chunk.stats.min;
  row.p95_ms = chunk.stats.p95;
  row.p99_ms = chunk.stats.p99;
  row.max_ms = chunk.stats.max;
  row.failed_runs = chunk.failed_runs;
  row.ttft_ms = measure_ttft(input_length);
  row.tpot_ms = measure_tpot(input_length);
  check_latency_row(row);
  return row;
}

std::vector<LatencyRow> Bench::latency_report() {
  std::vector<LatencyRow> rows;
  for (std::size_t len : config_.input_lengths) rows.push_back(latency_row(len));
  return rows;
}

StressResult Bench::stress_test(Phase phase, std::size_t length, std::size_t batch) {
  require_positive(length, "length");
  require_positive(batch, "batch");
  if (!(config_.duration_s > 0)) throw std::invalid_argument("stress_test: duration must be positive");
  const nn::Backbone& backbone = hierarchy_ ? hierarchy_->backbone() : multihead_->backbone();
  const std::size_t prompt_len = phase == Phase::kPrefill ? length : 1;
  const std::size_t frames = phase == Phase::kPrefill ? 0 : length;
  if (prompt_len + frames + config_.codebooks > model_.max_seq) {
    throw std::invalid_argument("stress_test: request longer than the model's max_seq");
  }
  auto pool = backbone.make_pool(config_.pool_sequences != 0 ? config_.pool_sequences : batch);
  const auto p = prompt(prompt_len);

  std::vector<std::unique_ptr<SessionRunner>> runners;
  for (std::size_t b = 0; b < batch; ++b) runners.push_back(make_runner(*pool, nullptr));

  std::atomic<bool> partial{false};
  std::mutex mu;
  std::exception_ptr failure;
  std::vector<std::uint64_t> tokens(batch, 0);
  std::vector<std::size_t> requests(batch, 0);

  using SteadyTime = std::chrono::steady_clock;
  const auto start = SteadyTime::now();
  const auto deadline = start + std::chrono::duration_cast<SteadyTime::duration>(
                                    std::chrono::duration<double>(config_.duration_s));
  std::vector<std::thread> threads;
  for (std::size_t b = 0; b < batch; ++b) {
    threads.emplace_back([&, b] {
      try {
        do {
          if (frames == 0) {
            runners[b]->prefill_only(p);
            tokens[b] += prompt_len;
          } else {
            const auto r = runners[b]->run(p, frames);
            tokens[b] += r.tokens.frames() * r.tokens.codebooks();
          }
          ++requests[b];
        } while (SteadyTime::now() < deadline && !partial.load());
      } catch (const CapacityError&) {
        partial.store(true);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        partial.store(true);
      }
    });
  }
  for (auto& t : threads) t.join();
  const double elapsed = std::chrono::duration<double>(SteadyTime::now() - start).count();
  if (failure) std::rethrow_exception(failure);

  StressResult out;
  const auto total = std::accumulate(tokens.begin(), tokens.end(), std::uint64_t{0});
  const double rate = static_cast<double>(total) / elapsed;
  out.requests = std::accumulate(requests.begin(), requests.end(), std::size_t{0});
  out.row.phase = phase_name(phase);
  out.row.input_length = prompt_len;
  out.row.output_length = phase == Phase::kPrefill ? 1 : frames;
  if (phase == Phase::kPrefill) {
    out.row.backbone_input_tokens_per_s = rate;
  } else {
    out.row.codebook_output_tokens_per_s = rate;
  }
  out.row.duration_s = elapsed;
  out.row.partial = partial.load();
  check_throughput_row(out.row);
  return out;
}

std::vector<ThroughputReport> Bench::throughput_reports() {
  std::vector<ThroughputReport> reports;
  for (std::size_t batch : config_.batch_sizes) {
    ThroughputReport report;
    report.model = model_name();
    report.batch = batch;
    for (Phase phase : config_.phases) {
      const auto& lengths = phase == Phase::kPrefill ? config_.prefill_lengths : config_.decode_lengths;
      for (std::size_t len : lengths) report.rows.push_back(stress_test(phase, len, batch).row);
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

ReportMeta Bench::meta() const {
  return {mode_name(config_.mode), config_.seed, std::string(simd::kernels().name), config_.iterations};
}

}  // namespace mctok::bench
