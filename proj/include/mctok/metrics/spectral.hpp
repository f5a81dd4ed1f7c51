// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mctok/io/kv_file.hpp"
#include "mctok/metrics/wav.hpp"
#include "mctok/rvq/frames.hpp"

namespace mctok::metrics {

// Floor applied before every log of a magnitude or energy.
inline constexpr double kLogFloor = 1e-10;
// SI-SDR reported for an exact (or numerically exact) match.
inline constexpr double kSiSdrCapDb = 100.0;

// Single-resolution STFT with a periodic Hann window, no padding. Mel bins
// use the HTK mel scale and unnormalised triangular filters.
struct SpectrogramConfig {
  std::size_t fft_size = 1024;
  std::size_t hop = 640;  // 16 kHz / 25 Hz
  std::size_t mel_bins = 80;
  double fmin = 0.0;
  double fmax = 8000.0;

  // Throws std::invalid_argument unless hop <= fft_size, mel_bins >= 1 and
  // 0 <= fmin < fmax <= sample_rate / 2.
  void validate(std::uint32_t sample_rate_hz) const;

  // Hop giving exactly `frame_rate_hz` frames per second; throws if the
  // sample rate is not a multiple of it.
  static std::size_t hop_for_frame_rate(std::uint32_t sample_rate_hz, std::uint32_t frame_rate_hz);

  // Keys: fft_size, hop, mel_bins, fmin, fmax.
  void apply(const io::KeyValues& kv);
  static SpectrogramConfig load(const std::filesystem::path& path);
};

// [frames x bins] in row-major order.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  double at(std::size_t f, std::size_t b) const { return values[f * bins + b]; }
};

std::vector<double> hann_window(std::size_t n);
double hz_to_mel(double hz);
double mel_to_hz(double mel);
// Number of analysis frames; throws std::invalid_argument when the signal is
// shorter than one FFT window.
std::size_t frame_count(std::size_t samples, const SpectrogramConfig& cfg);

// |STFT|, bins = fft_size / 2 + 1.
Spectrogram magnitude_spectrogram(std::span<const float> samples, const SpectrogramConfig& cfg);
// [mel_bins x (fft_size / 2 + 1)] filter weights.
std::vector<double> mel_filterbank(const SpectrogramConfig& cfg, std::uint32_t sample_rate_hz);
// Filterbank applied to the power spectrum, before the log.
Spectrogram mel_energies(const Waveform& w, const SpectrogramConfig& cfg);

// Scale-invariant SDR in dB, capped at kSiSdrCapDb. Throws
// std::invalid_argument on length or rate mismatch or a silent reference.
double si_sdr(const Waveform& reference, const Waveform& estimate);
// Mean |log(max(|X|, floor)) - log(max(|Y|, floor))| over every STFT bin.
double stft_distance(const Waveform& reference, const Waveform& estimate, const SpectrogramConfig& cfg);
// Same on log mel energies.
double mel_distance(const Waveform& reference, const Waveform& estimate, const SpectrogramConfig& cfg);

// Log-mel frames [frames x mel_bins], natural log with kLogFloor.
rvq::FrameSet extract_mel_frames(const Waveform& w, const SpectrogramConfig& cfg);
// Mean absolute difference of two log-mel frame sets of equal shape: the
// mel distance evaluated directly on features.
double mel_feature_distance(const rvq::FrameSet& reference, const rvq::FrameSet& estimate);

struct MetricsReport {
  double si_sdr_db = 0;
  double stft_distance = 0;
  double mel_distance = 0;
};

inline constexpr std::array<std::string_view, 3> kMetricsFields = {"si_sdr_db", "stft_distance", "mel_distance"};

MetricsReport evaluate(const Waveform& reference, const Waveform& estimate, const SpectrogramConfig& cfg);
std::string metrics_csv(const MetricsReport& report);
nlohmann::json metrics_json(const MetricsReport& report, const SpectrogramConfig& cfg);

}  // namespace mctok::metrics
