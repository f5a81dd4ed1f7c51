// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/nn/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mctok/common.hpp"
#include "mctok/rng.hpp"
#include "mctok/simd/kernels.hpp"

namespace mctok::nn {
namespace {

constexpr float kNormEps = 1e-5f;
constexpr double kRopeBase = 10000.0;

}  // namespace

void init_uniform(std::span<float> w, std::size_t fan_in, std::uint64_t seed) {
  Rng rng(seed);
  const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
  for (float& v : w) v = rng.uniform(-bound, bound);
}

TransformerStack::TransformerStack(const StackShape& shape, std::uint64_t seed) : shape_(shape) {
  if (shape.layers == 0 || shape.dim == 0 || shape.heads == 0 || shape.head_dim == 0 || shape.ffn_dim == 0 ||
      shape.max_positions == 0) {
    throw std::invalid_argument("TransformerStack: all dimensions must be positive");
  }
  if (shape.head_dim % 2 != 0) throw std::invalid_argument("TransformerStack: head_dim must be even");
  const std::size_t dim = shape.dim;
  const std::size_t kv = shape.kv_dim();
  const std::size_t ffn = shape.ffn_dim;

  std::uint64_t stream = 0;
  auto fill = [&](std::vector<float>& w, std::size_t rows, std::size_t cols) {
    w.resize(rows * cols);
    init_uniform(w, cols, derive_seed(seed, stream++));
  };
  blocks_.resize(shape.layers);
  for (BlockWeights& b : blocks_) {
    b.attn_norm.assign(dim, 1.0f);
    b.mlp_norm.assign(dim, 1.0f);
    fill(b.wq, kv, dim);
    fill(b.wk, kv, dim);
    fill(b.wv, kv, dim);
    fill(b.wo, dim, kv);
    fill(b.w_up, ffn, dim);
    fill(b.w_down, dim, ffn);
  }
  final_norm_.assign(dim, 1.0f);

  const std::size_t half = shape.head_dim / 2;
  rope_cos_.resize(shape.max_positions * half);
  rope_sin_.resize(shape.max_positions * half);
  for (std::size_t pos = 0; pos < shape.max_positions; ++pos) {
    for (std::size_t i = 0; i < half; ++i) {
      const double theta = std::pow(kRopeBase, -2.0 * static_cast<double>(i) / static_cast<double>(shape.head_dim));
      const double angle = static_cast<double>(pos) * theta;
      rope_cos_[pos * half + i] = static_cast<float>(std::cos(angle));
      rope_sin_[pos * half + i] = static_cast<float>(std::sin(angle));
    }
  }
}

TransformerStack::Workspace::Workspace(const StackShape& shape, std::size_t rows)
    : max_rows(rows),
      x(rows * shape.dim),
      xn(rows * shape.dim),
      q(rows * shape.kv_dim()),
      k(rows * shape.kv_dim()),
      v(rows * shape.kv_dim()),
      attn(rows * shape.kv_dim()),
      proj(rows * shape.dim),
      up(rows * shape.ffn_dim),
      scores(shape.max_positions) {}

void TransformerStack::rms_norm(const float* x, const float* gain, float* out) const {
  const std::size_t dim = shape_.dim;
  const float mean_sq = simd::kernels().sq_norm(x, dim) / static_cast<float>(dim);
  const float scale = 1.0f / std::sqrt(mean_sq + kNormEps);
  for (std::size_t i = 0; i < dim; ++i) out[i] = x[i] * scale * gain[i];
}

void TransformerStack::apply_rope(float* row, std::size_t pos) const {
  const std::size_t half = shape_.head_dim / 2;
  const float* c = rope_cos_.data() + pos * half;
  const float* s = rope_sin_.data() + pos * half;
  for (std::size_t h = 0; h < shape_.heads; ++h) {
    float* head = row + h * shape_.head_dim;
    for (std::size_t i = 0; i < half; ++i) {
      const float a = head[2 * i];
      const float b = head[2 * i + 1];
      head[2 * i] = a * c[i] - b * s[i];
      head[2 * i + 1] = a * s[i] + b * c[i];
    }
  }
}

void TransformerStack::forward(const float* input, std::size_t rows, std::size_t start_pos, KvStore& kv,
                               Workspace& ws, float* output, std::uint64_t* block_counter) const {
  if (rows == 0) return;
  if (rows > ws.max_rows) throw ContractViolation("forward: workspace too small for batch");
  if (start_pos + rows > shape_.max_positions) throw CapacityError("forward: position beyond max_seq");

  const auto& kern = simd::kernels();
  const std::size_t dim = shape_.dim;
  const std::size_t kv_dim = shape_.kv_dim();
  const std::size_t ffn = shape_.ffn_dim;
  const std::size_t hd = shape_.head_dim;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

  std::copy(input, input + rows * dim, ws.x.begin());

  for (std::size_t layer = 0; layer < shape_.layers; ++layer) {
    const BlockWeights& b = blocks_[layer];

    for (std::size_t r = 0; r < rows; ++r) rms_norm(ws.x.data() + r * dim, b.attn_norm.data(), ws.xn.data() + r * dim);
    kern.matmul_nt(ws.xn.data(), rows, b.wq.data(), kv_dim, dim, ws.q.data());
    kern.matmul_nt(ws.xn.data(), rows, b.wk.data(), kv_dim, dim, ws.k.data());
    kern.matmul_nt(ws.xn.data(), rows, b.wv.data(), kv_dim, dim, ws.v.data());
    for (std::size_t r = 0; r < rows; ++r) {
      apply_rope(ws.q.data() + r * kv_dim, start_pos + r);
      apply_rope(ws.k.data() + r * kv_dim, start_pos + r);
      std::copy_n(ws.k.data() + r * kv_dim, kv_dim, kv.key(layer, start_pos + r));
      std::copy_n(ws.v.data() + r * kv_dim, kv_dim, kv.value(layer, start_pos + r));
    }

    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t pos = start_pos + r;
      float* out = ws.attn.data() + r * kv_dim;
      std::fill_n(out, kv_dim, 0.0f);
      for (std::size_t h = 0; h < shape_.heads; ++h) {
        const float* q = ws.q.data() + r * kv_dim + h * hd;
        float max_score = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j <= pos; ++j) {
          const float s = kern.dot(q, kv.key(layer, j) + h * hd, hd) * scale;
          ws.scores[j] = s;
          max_score = std::max(max_score, s);
        }
        float total = 0.0f;
        for (std::size_t j = 0; j <= pos; ++j) {
          ws.scores[j] = std::exp(ws.scores[j] - max_score);
          total += ws.scores[j];
        }
        const float inv_total = 1.0f / total;
        for (std::size_t j = 0; j <= pos; ++j) {
          kern.axpy(ws.scores[j] * inv_total, kv.value(layer, j) + h * hd, out + h * hd, hd);
        }
      }
    }
    kern.matmul_nt(ws.attn.data(), rows, b.wo.data(), dim, kv_dim, ws.proj.data());
    for (std::size_t i = 0; i < rows * dim; ++i) ws.x[i] += ws.proj[i];

    for (std::size_t r = 0; r < rows; ++r) rms_norm(ws.x.data() + r * dim, b.mlp_norm.data(), ws.xn.data() + r * dim);
    kern.matmul_nt(ws.xn.data(), rows, b.w_up.data(), ffn, dim, ws.up.data());
    for (std::size_t i = 0; i < rows * ffn; ++i) {
      const float u = ws.up[i];
      ws.up[i] = u / (1.0f + std::exp(-u));
    }
    kern.matmul_nt(ws.up.data(), rows, b.w_down.data(), dim, ffn, ws.proj.data());
    for (std::size_t i = 0; i < rows * dim; ++i) ws.x[i] += ws.proj[i];
  }

  for (std::size_t r = 0; r < rows; ++r) rms_norm(ws.x.data() + r * dim, final_norm_.data(), output + r * dim);
  if (block_counter != nullptr) *block_counter += rows * shape_.layers;
}

void TransformerStack::for_each_parameter(const std::function<void(std::span<float>)>& fn) {
  for (BlockWeights& b : blocks_) {
    for (auto* w : {&b.attn_norm, &b.wq, &b.wk, &b.wv, &b.wo, &b.mlp_norm, &b.w_up, &b.w_down}) fn(*w);
  }
  fn(final_norm_);
}

}  // namespace mctok::nn
