// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/rvq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mctok/common.hpp"
#include "mctok/io/binary.hpp"
#include "mctok/rng.hpp"
#include "mctok/rvq/kmeans.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::rvq {
namespace {

constexpr std::string_view kStackMagic = "QRVQ1";

bool AllFinite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

void CheckCodes(std::span<const TokenId> codes, const QuantizerStack& stack) {
  if (codes.size() != stack.num_stages()) {
    throw std::invalid_argument("code frame has " + std::to_string(codes.size()) + " codes, stack has " +
                                std::to_string(stack.num_stages()) + " stages");
  }
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 0 || static_cast<std::size_t>(codes[i]) >= stack.codebook(i).size()) {
      throw std::out_of_range("code " + std::to_string(codes[i]) + " out of range for stage " + std::to_string(i));
    }
  }
}

void AddInto(std::span<float> acc, std::span<const float> v) {
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += v[j];
}

}  // namespace

Codebook::Codebook(Matrix entries, std::size_t stage_index) : entries_(std::move(entries)), stage_index_(stage_index) {
  if (entries_.rows() == 0 || entries_.cols() == 0) throw std::invalid_argument("Codebook: empty");
  if (!AllFinite(entries_.data())) throw std::invalid_argument("Codebook: non-finite entry");
}

QuantizerStack::QuantizerStack(std::vector<Codebook> codebooks, std::vector<Matrix> projections,
                               std::uint32_t frame_rate_hz)
    : codebooks_(std::move(codebooks)), projections_(std::move(projections)), frame_rate_hz_(frame_rate_hz) {
  if (codebooks_.empty()) throw std::invalid_argument("QuantizerStack: needs at least one codebook");
  if (projections_.size() != codebooks_.size()) throw std::invalid_argument("QuantizerStack: one projection per stage");
  if (frame_rate_hz_ == 0) throw std::invalid_argument("QuantizerStack: frame rate must be positive");
  for (std::size_t i = 0; i < codebooks_.size(); ++i) {
    if (codebooks_[i].dim() != dim()) throw std::invalid_argument("QuantizerStack: codebook dimensions differ");
    if (codebooks_[i].size() != entries()) throw std::invalid_argument("QuantizerStack: codebook sizes differ");
    if (projections_[i].cols() != codebooks_[i].size()) {
      throw std::invalid_argument("QuantizerStack: projection columns must equal codebook size");
    }
    if (projections_[i].rows() == 0 || projections_[i].rows() != projections_.front().rows()) {
      throw std::invalid_argument("QuantizerStack: projection output dimensions differ");
    }
  }
}

QuantizerStack QuantizerStack::random(std::size_t stages, std::size_t dim, std::size_t entries,
                                      std::size_t embed_dim, std::uint32_t frame_rate_hz, std::uint64_t seed) {
  std::vector<Codebook> books;
  std::vector<Matrix> projections;
  for (std::size_t i = 0; i < stages; ++i) {
    Rng rng(derive_seed(seed, i));
    Matrix entries_m(entries, dim);
    for (float& v : entries_m.data()) v = static_cast<float>(rng.normal());
    books.emplace_back(std::move(entries_m), i + 1);
    Matrix w(embed_dim, entries);
    for (float& v : w.data()) v = rng.uniform(-0.02f, 0.02f);
    projections.push_back(std::move(w));
  }
  return QuantizerStack(std::move(books), std::move(projections), frame_rate_hz);
}

bool operator==(const QuantizerStack& a, const QuantizerStack& b) {
  if (a.frame_rate_hz_ != b.frame_rate_hz_ || a.codebooks_.size() != b.codebooks_.size()) return false;
  for (std::size_t i = 0; i < a.codebooks_.size(); ++i) {
    if (!(a.codebooks_[i].entries() == b.codebooks_[i].entries())) return false;
    if (a.codebooks_[i].stage_index() != b.codebooks_[i].stage_index()) return false;
    if (!(a.projections_[i] == b.projections_[i])) return false;
  }
  return true;
}

std::pair<std::size_t, float> nearest_entry(std::span<const float> query, const Codebook& book) {
  const auto& kern = simd::kernels();
  std::size_t best = 0;
  float best_d = kern.l2_sq(query.data(), book.entry(0).data(), query.size());
  for (std::size_t k = 1; k < book.size(); ++k) {
    const float d = kern.l2_sq(query.data(), book.entry(k).data(), query.size());
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return {best, best_d};
}

QuantizationResult quantize_frame(std::span<const float> frame, const QuantizerStack& stack) {
  if (frame.size() != stack.dim()) {
    throw std::invalid_argument("frame dimension " + std::to_string(frame.size()) + " != stack dimension " +
                                std::to_string(stack.dim()));
  }
  if (!AllFinite(frame)) throw std::invalid_argument("frame contains non-finite values");

  QuantizationResult out;
  out.codes.reserve(stack.num_stages());
  out.reconstruction.assign(frame.size(), 0.0f);
  out.stage_residual_norms.reserve(stack.num_stages() + 1);
  out.stage_residual_norms.push_back(std::sqrt(simd::sq_norm(frame)));

  std::vector<float> residual(frame.begin(), frame.end());
  for (std::size_t i = 0; i < stack.num_stages(); ++i) {
    const auto [k, dist] = nearest_entry(residual, stack.codebook(i));
    const auto e = stack.codebook(i).entry(k);
    for (std::size_t j = 0; j < residual.size(); ++j) residual[j] -= e[j];
    AddInto(out.reconstruction, e);
    out.codes.push_back(static_cast<TokenId>(k));
    out.stage_residual_norms.push_back(std::sqrt(dist));
  }
  return out;
}

std::vector<float> dequantize(std::span<const TokenId> codes, const QuantizerStack& stack) {
  CheckCodes(codes, stack);
  std::vector<float> out(stack.dim(), 0.0f);
  for (std::size_t i = 0; i < codes.size(); ++i) AddInto(out, stack.codebook(i).entry(codes[i]));
  return out;
}

std::vector<std::vector<float>> embed_codes(std::span<const TokenId> codes, const QuantizerStack& stack) {
  CheckCodes(codes, stack);
  std::vector<std::vector<float>> out;
  out.reserve(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const Matrix& w = stack.projection(i);
    std::vector<float> e(w.rows());
    for (std::size_t h = 0; h < w.rows(); ++h) e[h] = w(h, codes[i]);
    out.push_back(std::move(e));
  }
  return out;
}

void aggregate_embeddings(std::span<const TokenId> codes, const QuantizerStack& stack, EmbeddingAggregation mode,
                          std::span<float> out) {
  CheckCodes(codes, stack);
  const std::size_t h_dim = stack.embed_dim();
  const std::size_t want = mode == EmbeddingAggregation::kSum ? h_dim : h_dim * codes.size();
  if (out.size() != want) throw std::invalid_argument("aggregate_embeddings: output size mismatch");
  if (mode == EmbeddingAggregation::kSum) std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const Matrix& w = stack.projection(i);
    for (std::size_t h = 0; h < h_dim; ++h) {
      if (mode == EmbeddingAggregation::kSum) {
        out[h] += w(h, codes[i]);
      } else {
        out[i * h_dim + h] = w(h, codes[i]);
      }
    }
  }
}

FrameSet reconstruct_frames(const FrameSet& frames, const QuantizerStack& stack, std::size_t stages_used) {
  if (frames.empty()) throw std::invalid_argument("reconstruction: empty frame list");
  if (stages_used < 1 || stages_used > stack.num_stages()) {
    throw std::out_of_range("stages_used must be in [1, " + std::to_string(stack.num_stages()) + "]");
  }
  if (frames.cols() != stack.dim()) throw std::invalid_argument("reconstruction: frame dimension mismatch");
  FrameSet out(frames.rows(), frames.cols());
  std::vector<float> residual(frames.cols());
  for (std::size_t f = 0; f < frames.rows(); ++f) {
    const auto frame = frames.row(f);
    if (!AllFinite(frame)) throw std::invalid_argument("frame contains non-finite values");
    std::copy(frame.begin(), frame.end(), residual.begin());
    auto recon = out.row(f);
    for (std::size_t i = 0; i < stages_used; ++i) {
      const auto e = stack.codebook(i).entry(nearest_entry(residual, stack.codebook(i)).first);
      for (std::size_t j = 0; j < residual.size(); ++j) residual[j] -= e[j];
      AddInto(recon, e);
    }
  }
  return out;
}

double reconstruction_error(const FrameSet& frames, const QuantizerStack& stack, std::size_t stages_used) {
  const FrameSet recon = reconstruct_frames(frames, stack, stages_used);
  double sum = 0.0;
  const auto a = frames.data();
  const auto b = recon.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

TokenGrid encode_frames(const FrameSet& frames, const QuantizerStack& stack) {
  TokenGrid grid(0, stack.num_stages());
  for (std::size_t f = 0; f < frames.rows(); ++f) grid.append_row(quantize_frame(frames.row(f), stack).codes);
  return grid;
}

QuantizerStack fit_codebooks(const FrameSet& training, std::size_t stages, std::size_t entries_per_book,
                             std::uint64_t seed, const FitOptions& options) {
  if (stages < 1) throw std::invalid_argument("fit_codebooks: need at least one stage");
  if (entries_per_book < 1) throw std::invalid_argument("fit_codebooks: need at least one entry per book");
  if (training.rows() < entries_per_book) {
    throw std::invalid_argument("fit_codebooks: insufficient data (" + std::to_string(training.rows()) +
                                " frames for " + std::to_string(entries_per_book) + " entries)");
  }
  if (!AllFinite(training.data())) throw std::invalid_argument("fit_codebooks: non-finite training data");

  Matrix residual = training;
  std::vector<Codebook> books;
  std::vector<Matrix> projections;
  for (std::size_t i = 0; i < stages; ++i) {
    KMeansResult km = kmeans(residual, entries_per_book, derive_seed(seed, 2 * i), options.max_iterations,
                             options.relative_tolerance);
    // Residuals for the next stage follow the greedy quantizer, not the final
    // k-means assignment, so training matches what quantize_frame will see.
    Codebook book(std::move(km.centroids), i + 1);
    for (std::size_t f = 0; f < residual.rows(); ++f) {
      auto r = residual.row(f);
      const auto e = book.entry(nearest_entry(r, book).first);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] -= e[j];
    }
    books.push_back(std::move(book));

    Rng rng(derive_seed(seed, 2 * i + 1));
    Matrix w(options.embed_dim, entries_per_book);
    for (float& v : w.data()) v = rng.uniform(-0.02f, 0.02f);
    projections.push_back(std::move(w));
  }
  return QuantizerStack(std::move(books), std::move(projections), options.frame_rate_hz);
}

std::vector<std::uint8_t> serialize_stack(const QuantizerStack& stack) {
  io::ByteWriter w;
  w.put_bytes(kStackMagic);
  w.put_u32(static_cast<std::uint32_t>(stack.num_stages()));
  w.put_u32(static_cast<std::uint32_t>(stack.dim()));
  w.put_u32(static_cast<std::uint32_t>(stack.entries()));
  w.put_u32(static_cast<std::uint32_t>(stack.embed_dim()));
  w.put_u32(stack.frame_rate_hz());
  for (std::size_t i = 0; i < stack.num_stages(); ++i) w.put_f32s(stack.codebook(i).entries().data());
  for (std::size_t i = 0; i < stack.num_stages(); ++i) w.put_f32s(stack.projection(i).data());
  return w.bytes();
}

QuantizerStack deserialize_stack(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.take_bytes(kStackMagic.size()) != kStackMagic) throw FormatError("not a QRVQ1 stack");
  const std::uint64_t stages = r.u32();
  const std::uint64_t dim = r.u32();
  const std::uint64_t entries = r.u32();
  const std::uint64_t embed_dim = r.u32();
  const std::uint32_t frame_rate = r.u32();
  if (stages == 0 || dim == 0 || entries == 0 || embed_dim == 0) throw FormatError("QRVQ1: zero-sized field");
  const std::uint64_t floats = stages * (entries * dim + embed_dim * entries);
  if (r.remaining() != floats * 4) throw FormatError("QRVQ1: payload size does not match header");

  std::vector<Codebook> books;
  for (std::size_t i = 0; i < stages; ++i) {
    Matrix m(entries, dim);
    r.f32s(m.data());
    books.emplace_back(std::move(m), i + 1);
  }
  std::vector<Matrix> projections;
  for (std::size_t i = 0; i < stages; ++i) {
    Matrix m(embed_dim, entries);
    r.f32s(m.data());
    projections.push_back(std::move(m));
  }
  return QuantizerStack(std::move(books), std::move(projections), frame_rate);
}

void save_stack(const std::filesystem::path& path, const QuantizerStack& stack) {
  io::write_file(path, serialize_stack(stack));
}

QuantizerStack load_stack(const std::filesystem::path& path) { return deserialize_stack(io::read_file(path)); }

}  // namespace mctok::rvq
