#pragma once

#include <array>
#include <cstdint>

#include "ibse/bytes.hpp"

namespace ibse {

using SipHashKey = std::array<std::uint8_t, 16>;

/// 64-bit SipHash with configurable compression (c) and finalization (d)
/// round counts. SipHash-2-4 is the original parameterization; the
/// identity digest uses the faster SipHash-1-3 variant.
std::uint64_t siphash(const SipHashKey& key, ByteView message, int c_rounds,
                      int d_rounds);

inline std::uint64_t siphash24(const SipHashKey& key, ByteView message) {
  return siphash(key, message, 2, 4);
}

inline std::uint64_t siphash13(const SipHashKey& key, ByteView message) {
  return siphash(key, message, 1, 3);
}

}  // namespace ibse
