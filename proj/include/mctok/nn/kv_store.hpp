// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace mctok::nn {

// Key/value storage addressed by (layer, position). Each row is kv_dim floats.
class KvStore {
 public:
  virtual ~KvStore() = default;
  virtual float* key(std::size_t layer, std::size_t pos) = 0;
  virtual float* value(std::size_t layer, std::size_t pos) = 0;
};

}  // namespace mctok::nn
