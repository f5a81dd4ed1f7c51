// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/bench/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace mctok::bench {
namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string num_or_dash(const std::optional<double>& v) { return v ? num(*v) : "--"; }

template <std::size_t N>
std::string header(const std::array<std::string_view, N>& fields) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

nlohmann::json meta_json(const ReportMeta& meta) {
  return {{"mode", meta.mode}, {"seed", meta.seed}, {"simd", meta.simd}, {"iterations", meta.iterations}};
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

bool ThroughputReport::partial() const {
  return std::any_of(rows.begin(), rows.end(), [](const ThroughputRow& r) { return r.partial; });
}

void check_latency_row(const LatencyRow& r) {
  if (!(r.min_ms <= r.avg_ms && r.avg_ms <= r.max_ms)) throw std::logic_error("latency row: avg outside [min, max]");
  if (!(r.min_ms <= r.p95_ms && r.p95_ms <= r.p99_ms && r.p99_ms <= r.max_ms))
    throw std::logic_error("latency row: percentiles out of order");
}

void check_throughput_row(const ThroughputRow& r) {
  const bool prefill = r.phase == "prefill";
  if (!prefill && r.phase != "decode") throw std::logic_error("throughput row: unknown phase " + r.phase);
  const auto& filled = prefill ? r.backbone_input_tokens_per_s : r.codebook_output_tokens_per_s;
  const auto& empty = prefill ? r.codebook_output_tokens_per_s : r.backbone_input_tokens_per_s;
  if (!filled || empty) throw std::logic_error("throughput row: rate in the wrong column for " + r.phase);
  if (*filled < 0) throw std::logic_error("throughput row: negative rate");
}

std::string ttft_csv(const std::vector<LatencyRow>& rows) {
  std::string out = header(kTtftFields);
  for (const auto& r : rows) {
    out += r.model + ',' + std::to_string(r.backbone_input_length) + ',' + num(r.ttft_ms) + ',' + num(r.tpot_ms) + '\n';
  }
  return out;
}

std::string first_chunk_csv(const std::vector<LatencyRow>& rows) {
  std::string out = header(kFirstChunkFields);
  for (const auto& r : rows) {
    out += r.model + ',' + std::to_string(r.backbone_input_length) + ',' + num(r.avg_ms) + ',' + num(r.min_ms) + ',' +
           num(r.p95_ms) + ',' + num(r.p99_ms) + ',' + num(r.max_ms) + '\n';
  }
  return out;
}

std::string throughput_csv(const ThroughputReport& report) {
  std::string out = header(kThroughputFields);
  for (const auto& r : report.rows) {
    out += r.phase + ',' + std::to_string(r.input_length) + ',' + std::to_string(r.output_length) + ',' +
           num_or_dash(r.backbone_input_tokens_per_s) + ',' + num_or_dash(r.codebook_output_tokens_per_s) + '\n';
  }
  return out;
}

nlohmann::json ttft_json(const std::vector<LatencyRow>& rows, const ReportMeta& meta) {
  nlohmann::json out{{"table", "ttft_tpot"}, {"meta", meta_json(meta)}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows) {
    out["rows"].push_back({{"model", r.model},
                           {"backbone_input_length", r.backbone_input_length},
                           {"ttft_ms", r.ttft_ms},
                           {"tpot_ms", r.tpot_ms}});
  }
  return out;
}

nlohmann::json first_chunk_json(const std::vector<LatencyRow>& rows, const ReportMeta& meta) {
  nlohmann::json out{{"table", "first_chunk"}, {"meta", meta_json(meta)}, {"rows", nlohmann::json::array()}};
  nlohmann::json failed = nlohmann::json::object();
  for (const auto& r : rows) {
    out["rows"].push_back({{"model", r.model},
                           {"backbone_input_length", r.backbone_input_length},
                           {"avg_ms", r.avg_ms},
                           {"min_ms", r.min_ms},
                           {"p95_ms", r.p95_ms},
                           {"p99_ms", r.p99_ms},
                           {"max_ms", r.max_ms}});
    failed[std::to_string(r.backbone_input_length)] = r.failed_runs;
  }
  out["meta"]["failed_runs"] = failed;
  return out;
}

nlohmann::json throughput_json(const ThroughputReport& report, const ReportMeta& meta) {
  nlohmann::json out{{"table", "throughput"}, {"meta", meta_json(meta)}, {"rows", nlohmann::json::array()}};
  nlohmann::json durations = nlohmann::json::array();
  for (const auto& r : report.rows) {
    out["rows"].push_back({{"phase", r.phase},
                           {"input_length", r.input_length},
                           {"output_length", r.output_length},
                           {"backbone_input_tokens_per_s", opt(r.backbone_input_tokens_per_s)},
                           {"codebook_output_tokens_per_s", opt(r.codebook_output_tokens_per_s)}});
    durations.push_back(r.duration_s);
  }
  out["meta"]["model"] = report.model;
  out["meta"]["batch"] = report.batch;
  out["meta"]["duration_s"] = durations;
  out["meta"]["partial"] = report.partial();
  return out;
}

}  // namespace mctok::bench
