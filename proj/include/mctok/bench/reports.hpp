// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mctok::bench {

// Everything measured for one backbone input length. Written out as two
// tables: TTFT/TPOT and first-chunk latency.
struct LatencyRow {
  std::string model;
  std::size_t backbone_input_length = 0;
  double avg_ms = 0;
  double min_ms = 0;
  double p95_ms = 0;
  double p99_ms = 0;
  double max_ms = 0;
  double ttft_ms = 0;
  double tpot_ms = 0;
  std::size_t failed_runs = 0;
};

struct ThroughputRow {
  std::string phase;  // "prefill" | "decode"
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::optional<double> backbone_input_tokens_per_s;   // prefill rows
  std::optional<double> codebook_output_tokens_per_s;  // decode rows
  double duration_s = 0;
  bool partial = false;  // a session hit resource exhaustion
};

// Stress-test rows for one model at one batch size.
struct ThroughputReport {
  std::string model;
  std::size_t batch = 1;
  std::vector<ThroughputRow> rows;
  bool partial() const;
};

inline constexpr std::array<std::string_view, 4> kTtftFields = {"model", "backbone_input_length", "ttft_ms",
                                                                 "tpot_ms"};
inline constexpr std::array<std::string_view, 7> kFirstChunkFields = {
    "model", "backbone_input_length", "avg_ms", "min_ms", "p95_ms", "p99_ms", "max_ms"};
inline constexpr std::array<std::string_view, 5> kThroughputFields = {
    "phase", "input_length", "output_length", "backbone_input_tokens_per_s", "codebook_output_tokens_per_s"};

struct ReportMeta {
  std::string mode;
  std::uint64_t seed = 0;
  std::string simd;
  std::size_t iterations = 0;
};

// Throws std::logic_error when a row breaks min <= avg <= max or
// min <= p95 <= p99 <= max.
void check_latency_row(const LatencyRow& row);
// Throws std::logic_error on a negative rate or a rate in the wrong column
// for the row's phase.
void check_throughput_row(const ThroughputRow& row);

// CSV: fixed header line, one line per row. Missing rates are written "--".
std::string ttft_csv(const std::vector<LatencyRow>& rows);
std::string first_chunk_csv(const std::vector<LatencyRow>& rows);
std::string throughput_csv(const ThroughputReport& report);

// JSON: {"table": name, "meta": {...}, "rows": [...]}; rows carry exactly the
// CSV fields, missing rates are null. Bookkeeping that has no column in the
// table (failed runs, batch, duration, partial) lives in "meta".
nlohmann::json ttft_json(const std::vector<LatencyRow>& rows, const ReportMeta& meta);
nlohmann::json first_chunk_json(const std::vector<LatencyRow>& rows, const ReportMeta& meta);
nlohmann::json throughput_json(const ThroughputReport& report, const ReportMeta& meta);

}  // namespace mctok::bench
