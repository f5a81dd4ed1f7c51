// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>

namespace mctok {

// Time source for generation sessions. Sessions call frame_boundary() each
// time a frame completes and then read now_ns(); a fake clock can use that
// seam to advance deterministically.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ns() = 0;
  virtual void frame_boundary() {}
};

class SteadyClock final : public Clock {
 public:
  std::int64_t now_ns() override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

// Stands still except when told to move: by `per_frame_ns` at every frame
// boundary, or explicitly through advance().
class FakeClock final : public Clock {
 public:
  explicit FakeClock(std::int64_t per_frame_ns = 0) : per_frame_ns_(per_frame_ns) {}
  std::int64_t now_ns() override { return now_; }
  void frame_boundary() override { now_ += per_frame_ns_; }
  void advance(std::int64_t ns) { now_ += ns; }

 private:
  std::int64_t per_frame_ns_;
  std::int64_t now_ = 0;
};

inline Clock& default_clock() {
  thread_local SteadyClock clock;
  return clock;
}

}  // namespace mctok
