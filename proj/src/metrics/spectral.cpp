// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/metrics/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace mctok::metrics {
namespace {

// FFTW's planner is not reentrant; execution on a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    if (in_ == nullptr || out_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw std::runtime_error("fftw: planning failed");
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double magnitude(std::size_t k) const { return std::hypot(out_[k][0], out_[k][1]); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

void check_pair(const Waveform& a, const Waveform& b) {
  a.validate();
  b.validate();
  if (a.samples.size() != b.samples.size()) throw std::invalid_argument("metrics: length mismatch");
  if (a.sample_rate_hz != b.sample_rate_hz) throw std::invalid_argument("metrics: sample rate mismatch");
}

double mean_log_abs_diff(const Spectrogram& a, const Spectrogram& b) {
  double sum = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    sum += std::abs(std::log(std::max(a.values[i], kLogFloor)) - std::log(std::max(b.values[i], kLogFloor)));
  }
  return sum / static_cast<double>(a.values.size());
}

}  // namespace

void SpectrogramConfig::validate(std::uint32_t sample_rate_hz) const {
  if (fft_size < 2) throw std::invalid_argument("spectrogram: fft_size must be at least 2");
  if (hop == 0 || hop > fft_size) throw std::invalid_argument("spectrogram: hop must be in [1, fft_size]");
  if (mel_bins == 0) throw std::invalid_argument("spectrogram: mel_bins must be at least 1");
  if (!(fmin >= 0 && fmin < fmax && fmax <= sample_rate_hz / 2.0)) {
    throw std::invalid_argument("spectrogram: need 0 <= fmin < fmax <= sample_rate / 2");
  }
}

std::size_t SpectrogramConfig::hop_for_frame_rate(std::uint32_t sample_rate_hz, std::uint32_t frame_rate_hz) {
  if (frame_rate_hz == 0 || sample_rate_hz % frame_rate_hz != 0) {
    throw std::invalid_argument("spectrogram: sample rate is not a multiple of the frame rate");
  }
  return sample_rate_hz / frame_rate_hz;
}

void SpectrogramConfig::apply(const io::KeyValues& kv) {
  auto size = [&](const char* key, std::size_t& field) {
    if (!kv.contains(key)) return;
    const long long v = kv.require_int(key);
    if (v < 0) throw std::invalid_argument(std::string("spectrogram: negative ") + key);
    field = static_cast<std::size_t>(v);
  };
  size("fft_size", fft_size);
  size("hop", hop);
  size("mel_bins", mel_bins);
  fmin = kv.get_double("fmin", fmin);
  fmax = kv.get_double("fmax", fmax);
}

SpectrogramConfig SpectrogramConfig::load(const std::filesystem::path& path) {
  SpectrogramConfig cfg;
  cfg.apply(io::KeyValues::load(path));
  return cfg;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_count(std::size_t samples, const SpectrogramConfig& cfg) {
  if (cfg.hop == 0 || cfg.fft_size < 2) throw std::invalid_argument("spectrogram: bad fft_size or hop");
  if (samples < cfg.fft_size) {
    throw std::invalid_argument("spectrogram: " + std::to_string(samples) + " samples is shorter than one frame of " +
                                std::to_string(cfg.fft_size));
  }
  return (samples - cfg.fft_size) / cfg.hop + 1;
}

Spectrogram magnitude_spectrogram(std::span<const float> samples, const SpectrogramConfig& cfg) {
  Spectrogram s;
  s.frames = frame_count(samples.size(), cfg);
  s.bins = cfg.fft_size / 2 + 1;
  s.values.resize(s.frames * s.bins);
  const auto window = hann_window(cfg.fft_size);
  RealFft fft(cfg.fft_size);
  for (std::size_t f = 0; f < s.frames; ++f) {
    const float* x = samples.data() + f * cfg.hop;
    for (std::size_t i = 0; i < cfg.fft_size; ++i) fft.input()[i] = window[i] * x[i];
    fft.execute();
    for (std::size_t k = 0; k < s.bins; ++k) s.values[f * s.bins + k] = fft.magnitude(k);
  }
  return s;
}

std::vector<double> mel_filterbank(const SpectrogramConfig& cfg, std::uint32_t sample_rate_hz) {
  cfg.validate(sample_rate_hz);
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.mel_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.mel_bins + 1));
  }
  std::vector<double> fb(cfg.mel_bins * bins, 0.0);
  for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate_hz / static_cast<double>(cfg.fft_size);
      const double up = (hz - left) / (center - left);
      const double down = (right - hz) / (right - center);
      fb[m * bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

Spectrogram mel_energies(const Waveform& w, const SpectrogramConfig& cfg) {
  w.validate();
  const auto fb = mel_filterbank(cfg, w.sample_rate_hz);
  const Spectrogram mag = magnitude_spectrogram(w.samples, cfg);
  Spectrogram mel;
  mel.frames = mag.frames;
  mel.bins = cfg.mel_bins;
  mel.values.assign(mel.frames * mel.bins, 0.0);
  for (std::size_t f = 0; f < mag.frames; ++f) {
    for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
      double e = 0;
      for (std::size_t k = 0; k < mag.bins; ++k) {
        const double p = mag.at(f, k);
        e += fb[m * mag.bins + k] * p * p;
      }
      mel.values[f * mel.bins + m] = e;
    }
  }
  return mel;
}

double si_sdr(const Waveform& reference, const Waveform& estimate) {
  check_pair(reference, estimate);
  double ref_energy = 0, cross = 0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    const double r = reference.samples[i];
    ref_energy += r * r;
    cross += r * static_cast<double>(estimate.samples[i]);
  }
  if (ref_energy == 0) throw std::invalid_argument("si_sdr: reference is silent");
  const double alpha = cross / ref_energy;
  double target = 0, residual = 0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    const double t = alpha * reference.samples[i];
    const double e = static_cast<double>(estimate.samples[i]) - t;
    target += t * t;
    residual += e * e;
  }
  if (residual == 0) return kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / residual));
}

double stft_distance(const Waveform& reference, const Waveform& estimate, const SpectrogramConfig& cfg) {
  check_pair(reference, estimate);
  cfg.validate(reference.sample_rate_hz);
  return mean_log_abs_diff(magnitude_spectrogram(reference.samples, cfg),
                           magnitude_spectrogram(estimate.samples, cfg));
}

double mel_distance(const Waveform& reference, const Waveform& estimate, const SpectrogramConfig& cfg) {
  check_pair(reference, estimate);
  return mean_log_abs_diff(mel_energies(reference, cfg), mel_energies(estimate, cfg));
}

rvq::FrameSet extract_mel_frames(const Waveform& w, const SpectrogramConfig& cfg) {
  const Spectrogram mel = mel_energies(w, cfg);
  rvq::FrameSet out(mel.frames, mel.bins);
  for (std::size_t i = 0; i < mel.values.size(); ++i) {
    out.data()[i] = static_cast<float>(std::log(std::max(mel.values[i], kLogFloor)));
  }
  return out;
}

double mel_feature_distance(const rvq::FrameSet& reference, const rvq::FrameSet& estimate) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols()) {
    throw std::invalid_argument("mel_feature_distance: shape mismatch");
  }
  if (reference.empty()) throw std::invalid_argument("mel_feature_distance: no frames");
  double sum = 0;
  const auto a = reference.data();
  const auto b = estimate.data();
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return sum / static_cast<double>(a.size());
}

MetricsReport evaluate(const Waveform& reference, const Waveform& estimate, const SpectrogramConfig& cfg) {
  return {si_sdr(reference, estimate), stft_distance(reference, estimate, cfg), mel_distance(reference, estimate, cfg)};
}

std::string metrics_csv(const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "si_sdr_db,stft_distance,mel_distance\n%.6f,%.6f,%.6f\n", r.si_sdr_db,
                r.stft_distance, r.mel_distance);
  return buf;
}

nlohmann::json metrics_json(const MetricsReport& r, const SpectrogramConfig& cfg) {
  return {{"table", "metrics"},
          {"meta",
           {{"fft_size", cfg.fft_size},
            {"hop", cfg.hop},
            {"mel_bins", cfg.mel_bins},
            {"fmin", cfg.fmin},
            {"fmax", cfg.fmax},
            {"log_floor", kLogFloor}}},
          {"rows", nlohmann::json::array({{{"si_sdr_db", r.si_sdr_db},
                                           {"stft_distance", r.stft_distance},
                                           {"mel_distance", r.mel_distance}}})}};
}

}  // namespace mctok::metrics
