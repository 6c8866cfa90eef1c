#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ibse {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 32-byte SHA-256 digest.
using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(ByteView bytes);

/// Strict inverse of to_hex: lowercase hex only, even length.
std::optional<Bytes> from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view text) {
  return Bytes(text.begin(), text.end());
}

inline ByteView as_bytes(const std::string& text) {
  return ByteView(reinterpret_cast<const std::uint8_t*>(text.data()),
                  text.size());
}

}  // namespace ibse
