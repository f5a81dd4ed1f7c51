// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mctok {

// Resource limits reached (page pool, max_seq). Recoverable by the caller:
// shrink the request or free sessions.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal contract broken (double free, decoder activity during prefill,
// unreset frame block). Indicates a bug, not a load condition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or unsupported on-disk data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mctok
