// Copyright (C) 2026 The mctok Authors
// SPDX-License-Identifier: Apache-2.0

#include "mctok/io/token_stream.hpp"

#include <fstream>
#include <limits>
#include <string>

#include "mctok/io/binary.hpp"

namespace mctok::io {

std::vector<std::uint8_t> encode_token_stream(const TokenGrid& grid) {
  ByteWriter w;
  w.put_u32(static_cast<std::uint32_t>(grid.frames()));
  w.put_u32(static_cast<std::uint32_t>(grid.codebooks()));
  for (TokenId id : grid.data()) {
    if (id < 0 || id > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("token id " + std::to_string(id) + " does not fit in u16");
    }
    w.put_u16(static_cast<std::uint16_t>(id));
  }
  return w.bytes();
}

TokenGrid decode_token_stream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint64_t frames = r.u32();
  const std::uint64_t codebooks = r.u32();
  if (r.remaining() != frames * codebooks * 2) throw FormatError("token stream: payload size does not match header");
  std::vector<TokenId> tokens(frames * codebooks);
  for (TokenId& id : tokens) id = r.u16();
  return TokenGrid(frames, codebooks, std::move(tokens));
}

void write_token_stream(const std::filesystem::path& path, const TokenGrid& grid) {
  write_file(path, encode_token_stream(grid));
}

TokenGrid read_token_stream(const std::filesystem::path& path) { return decode_token_stream(read_file(path)); }

void write_frame_timestamps(const std::filesystem::path& path, std::span<const std::int64_t> wall_ns) {
  std::string out = "frame_index,wall_ns\n";
  for (std::size_t i = 0; i < wall_ns.size(); ++i) out += std::to_string(i) + "," + std::to_string(wall_ns[i]) + "\n";
  write_text(path, out);
}

}  // namespace mctok::io
