#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibse/bytes.hpp"
#include "ibse/errors.hpp"

namespace ibse {

/// Non-empty byte string naming the data owner. The digest of this value
/// is mixed into every chunk key, binding decryption to the identity.
class Identity {
 public:
  explicit Identity(Bytes bytes) : bytes_(std::move(bytes)) {
    if (bytes_.empty()) raise(Errc::empty_identity, "identity must be non-empty");
  }
  explicit Identity(std::string_view text) : Identity(to_bytes(text)) {}

  const Bytes& bytes() const noexcept { return bytes_; }
  ByteView view() const noexcept { return bytes_; }

 private:
  Bytes bytes_;
};

/// One chunk's entry in the data map. dst refers to the stored
/// (encrypted and obfuscated) blob, src to the plaintext chunk.
struct ChunkRecord {
  std::uint64_t index = 0;
  Digest src_hash{};
  Digest dst_hash{};
  std::uint64_t src_size = 0;
  std::uint64_t dst_size = 0;

  bool operator==(const ChunkRecord&) const = default;
};

/// The decryption key material for one file: without these per-chunk
/// hashes and sizes the stored blobs cannot be reassembled.
struct DataMap {
  std::string version;
  std::uint64_t file_size = 0;
  std::vector<ChunkRecord> chunks;

  bool operator==(const DataMap&) const = default;
};

/// Per-chunk cipher inputs. key is already identity-mixed; pad_seed is
/// cycled over the ciphertext for the obfuscation step.
struct ChunkMaterial {
  std::array<std::uint8_t, 16> key{};
  std::array<std::uint8_t, 16> iv{};
  std::array<std::uint8_t, 64> pad_seed{};
};

struct EncryptedFile {
  DataMap map;
  std::vector<Bytes> blobs;
};

namespace selfenc {

inline constexpr std::size_t kMinChunks = 3;
inline constexpr std::size_t kMinInputSize = 3;
inline constexpr std::size_t kMaxChunkSize = std::size_t{1} << 20;  // 1 MiB
inline constexpr std::size_t kAesBlockSize = 16;
inline constexpr std::string_view kFormatVersion = "idse-v1";

/// Split plan for an input of the given length: N = max(3, ceil(len / 1 MiB))
/// chunks whose sizes differ by at most one byte. The first (len mod N)
/// chunks carry the extra byte.
std::vector<std::uint64_t> chunk_sizes(std::uint64_t length);

std::vector<Bytes> split_chunks(ByteView data);

/// Concatenation in index order; inverse of split_chunks.
Bytes join_chunks(std::span<const Bytes> chunks);

Digest chunk_hash(ByteView chunk);

/// SipHash-1-3 of the identity bytes under the all-zero key, serialized
/// little-endian.
std::array<std::uint8_t, 8> identity_digest(const Identity& id);

/// output[i] = src[i mod len(src)].
Bytes cycle_bytes(ByteView src, std::size_t out_len);

/// Key/IV come from the preceding chunk's hash (cyclically); the first
/// key half is XORed with the cycled identity digest. The obfuscation
/// pad seed is the chunk's own hash followed by the hash two behind.
ChunkMaterial derive_chunk_material(std::size_t index,
                                    std::span<const Digest> hashes,
                                    const Identity& id);

/// AES-128-CBC with PKCS#7 padding, then XOR with the cycled pad seed.
/// Output length is (floor(len/16) + 1) * 16.
Bytes encrypt_chunk(ByteView chunk, const ChunkMaterial& material);

/// Inverse of encrypt_chunk. Throws cipher_error on invalid padding,
/// the typical symptom of decrypting under the wrong identity.
Bytes decrypt_chunk(ByteView blob, const ChunkMaterial& material);

EncryptedFile self_encrypt(ByteView data, const Identity& id);

Bytes self_decrypt(const DataMap& map, std::span<const ByteView> blobs,
                   const Identity& id);
Bytes self_decrypt(const DataMap& map, std::span<const Bytes> blobs,
                   const Identity& id);

}  // namespace selfenc
}  // namespace ibse
