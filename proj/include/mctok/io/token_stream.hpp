// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mctok/token_grid.hpp"

namespace mctok::io {

// u32 T, u32 C, then T*C u16 indices row-major, little-endian.
std::vector<std::uint8_t> encode_token_stream(const TokenGrid& grid);
TokenGrid decode_token_stream(std::span<const std::uint8_t> bytes);

void write_token_stream(const std::filesystem::path& path, const TokenGrid& grid);
TokenGrid read_token_stream(const std::filesystem::path& path);

// `frame_index,wall_ns` with a header row.
void write_frame_timestamps(const std::filesystem::path& path, std::span<const std::int64_t> wall_ns);

}  // namespace mctok::io
