// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/metrics/wav.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "mctok/common.hpp"
#include "mctok/io/binary.hpp"

namespace mctok::metrics {
namespace {

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kBits = 16;
constexpr double kScale = 32767.0;

}  // namespace

void Waveform::validate() const {
  if (samples.empty()) throw std::invalid_argument("waveform: no samples");
  if (sample_rate_hz == 0) throw std::invalid_argument("waveform: sample rate must be positive");
  for (float x : samples) {
    if (!std::isfinite(x)) throw std::invalid_argument("waveform: non-finite sample");
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  w.validate();
  for (float x : w.samples) {
    if (x < -1.0f || x > 1.0f) throw std::invalid_argument("wav: sample outside [-1, 1]");
  }
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  io::ByteWriter out;
  out.put_bytes("RIFF");
  out.put_u32(36 + data_bytes);
  out.put_bytes("WAVE");
  out.put_bytes("fmt ");
  out.put_u32(16);
  out.put_u16(kPcm);
  out.put_u16(1);
  out.put_u32(w.sample_rate_hz);
  out.put_u32(w.sample_rate_hz * 2);
  out.put_u16(2);
  out.put_u16(kBits);
  out.put_bytes("data");
  out.put_u32(data_bytes);
  for (float x : w.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(static_cast<double>(x) * kScale));
    out.put_u16(static_cast<std::uint16_t>(q));
  }
  return out.bytes();
}

Waveform decode_wav(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  if (in.take_bytes(4) != "RIFF") throw FormatError("wav: missing RIFF tag");
  in.u32();  // riff size, not trusted
  if (in.take_bytes(4) != "WAVE") throw FormatError("wav: missing WAVE tag");

  std::optional<std::uint32_t> rate;
  Waveform w;
  bool have_data = false;
  while (!have_data) {
    if (in.remaining() < 8) throw FormatError("wav: no data chunk");
    const std::string id(in.take_bytes(4));
    const std::uint32_t size = in.u32();
    if (id == "fmt ") {
      if (size < 16) throw FormatError("wav: fmt chunk too short");
      const std::uint16_t format = in.u16();
      const std::uint16_t channels = in.u16();
      const std::uint32_t sample_rate = in.u32();
      in.u32();  // byte rate
      const std::uint16_t block_align = in.u16();
      const std::uint16_t bits = in.u16();
      in.take_bytes(size - 16 + (size & 1));
      if (format != kPcm) throw FormatError("wav: unsupported encoding " + std::to_string(format));
      if (channels != 1) throw FormatError("wav: only mono is supported, got " + std::to_string(channels));
      if (bits != kBits || block_align != 2) throw FormatError("wav: only 16-bit samples are supported");
      if (sample_rate == 0) throw FormatError("wav: zero sample rate");
      rate = sample_rate;
    } else if (id == "data") {
      if (!rate) throw FormatError("wav: data chunk before fmt chunk");
      if (size % 2 != 0) throw FormatError("wav: odd data size");
      if (size == 0) throw FormatError("wav: empty data chunk");
      std::string_view raw = in.take_bytes(size);
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto lo = static_cast<std::uint8_t>(raw[2 * i]);
        const auto hi = static_cast<std::uint8_t>(raw[2 * i + 1]);
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        w.samples[i] = static_cast<float>(std::max(-1.0, v / kScale));
      }
      have_data = true;
    } else {
      in.take_bytes(static_cast<std::size_t>(size) + (size & 1));
    }
  }
  w.sample_rate_hz = *rate;
  return w;
}

Waveform read_wav(const std::filesystem::path& path) { return decode_wav(io::read_file(path)); }

void write_wav(const std::filesystem::path& path, const Waveform& w) { io::write_file(path, encode_wav(w)); }

}  // namespace mctok::metrics
