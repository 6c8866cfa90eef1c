#include "ibse/siphash.hpp"

#include <bit>

namespace ibse {

namespace {

std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

struct SipState {
  std::uint64_t v0, v1, v2, v3;

  void round() {
    v0 += v1;
    v1 = std::rotl(v1, 13);
    v1 ^= v0;
    v0 = std::rotl(v0, 32);
    v2 += v3;
    v3 = std::rotl(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = std::rotl(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = std::rotl(v1, 17);
    v1 ^= v2;
    v2 = std::rotl(v2, 32);
  }
};

}  // namespace

std::uint64_t siphash(const SipHashKey& key, ByteView message, int c_rounds,
                      int d_rounds) {
  const std::uint64_t k0 = load_le64(key.data());
  const std::uint64_t k1 = load_le64(key.data() + 8);

  SipState s{0x736f6d6570736575ULL ^ k0, 0x646f72616e646f6dULL ^ k1,
             0x6c7967656e657261ULL ^ k0, 0x7465646279746573ULL ^ k1};

  auto absorb = [&](std::uint64_t m) {
    s.v3 ^= m;
    for (int r = 0; r < c_rounds; ++r) s.round();
    s.v0 ^= m;
  };

  const std::size_t len = message.size();
  const std::size_t full = len - (len % 8);
  for (std::size_t off = 0; off < full; off += 8) {
    absorb(load_le64(message.data() + off));
  }

  // Final word: remaining bytes, zero padded, length mod 256 in the MSB.
  std::uint64_t last = static_cast<std::uint64_t>(len & 0xFF) << 56;
  for (std::size_t i = full; i < len; ++i) {
    last |= static_cast<std::uint64_t>(message[i]) << (8 * (i - full));
  }
  absorb(last);

  s.v2 ^= 0xFF;
  for (int r = 0; r < d_rounds; ++r) s.round();
  return s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
}

}  // namespace ibse
