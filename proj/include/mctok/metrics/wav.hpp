// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mctok::metrics {

struct Waveform {
  std::vector<float> samples;  // full scale is [-1, 1]
  std::uint32_t sample_rate_hz = 0;

  // Throws std::invalid_argument when empty, non-finite or without a sample
  // rate. Only encoding requires samples within full scale.
  void validate() const;
};

// 16-bit PCM mono RIFF/WAVE. Samples map to int16 as round(x * 32767);
// -32768 reads back as -1. Unknown chunks are skipped. Encoding throws
// std::invalid_argument for samples outside [-1, 1].
std::vector<std::uint8_t> encode_wav(const Waveform& w);
// Throws FormatError on malformed or truncated data and on any encoding
// other than 16-bit PCM mono.
Waveform decode_wav(std::span<const std::uint8_t> bytes);

Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace mctok::metrics
