#include "ibse/selfenc.hpp"

#include <openssl/evp.h>

#include <memory>

#include "ibse/sha256.hpp"
#include "ibse/siphash.hpp"

namespace ibse::selfenc {

namespace {

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

Bytes aes128_cbc(ByteView input, const ChunkMaterial& m, bool encrypt) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) raise(Errc::cipher_error, "cipher context allocation failed");

  if (EVP_CipherInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, m.key.data(),
                        m.iv.data(), encrypt ? 1 : 0) != 1) {
    raise(Errc::cipher_error, "cipher init failed");
  }
  // PKCS#7 padding is on by default; keep it explicit.
  EVP_CIPHER_CTX_set_padding(ctx.get(), 1);

  Bytes out(input.size() + kAesBlockSize);
  int written = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &written, input.data(),
                       static_cast<int>(input.size())) != 1) {
    raise(Errc::cipher_error, "cipher update failed");
  }
  int tail = 0;
  if (EVP_CipherFinal_ex(ctx.get(), out.data() + written, &tail) != 1) {
    // On decryption this is the invalid-padding path.
    raise(Errc::cipher_error, "invalid padding");
  }
  out.resize(static_cast<std::size_t>(written) + tail);
  return out;
}

void xor_cycled_pad(Bytes& data, ByteView pad_seed) {
  const std::size_t n = pad_seed.size();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] ^= pad_seed[i % n];
}

void check_map_shape(const DataMap& map, std::size_t blob_count) {
  if (map.chunks.size() < kMinChunks) {
    raise(Errc::malformed_map, "data map has fewer than 3 chunks");
  }
  if (blob_count != map.chunks.size()) {
    raise(Errc::malformed_map, "blob count does not match data map");
  }
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < map.chunks.size(); ++i) {
    if (map.chunks[i].index != i) {
      raise(Errc::malformed_map, "chunk indices not contiguous");
    }
    total += map.chunks[i].src_size;
  }
  if (total != map.file_size) {
    raise(Errc::malformed_map, "chunk sizes do not sum to file size");
  }
}

}  // namespace

std::vector<std::uint64_t> chunk_sizes(std::uint64_t length) {
  if (length < kMinInputSize) {
    raise(Errc::input_too_small, "need at least 3 bytes to form 3 chunks");
  }
  const std::uint64_t by_size = (length + kMaxChunkSize - 1) / kMaxChunkSize;
  const std::uint64_t n = std::max<std::uint64_t>(kMinChunks, by_size);
  const std::uint64_t base = length / n;
  const std::uint64_t rem = length % n;
  std::vector<std::uint64_t> sizes(n, base);
  for (std::uint64_t i = 0; i < rem; ++i) sizes[i] = base + 1;
  return sizes;
}

std::vector<Bytes> split_chunks(ByteView data) {
  std::vector<Bytes> chunks;
  std::size_t offset = 0;
  for (std::uint64_t size : chunk_sizes(data.size())) {
    chunks.emplace_back(data.begin() + offset, data.begin() + offset + size);
    offset += size;
  }
  return chunks;
}

Bytes join_chunks(std::span<const Bytes> chunks) {
  std::size_t total = 0;
  for (const Bytes& c : chunks) total += c.size();
  Bytes out;
  out.reserve(total);
  for (const Bytes& c : chunks) out.insert(out.end(), c.begin(), c.end());
  return out;
}

Digest chunk_hash(ByteView chunk) { return sha256(chunk); }

std::array<std::uint8_t, 8> identity_digest(const Identity& id) {
  const SipHashKey zero_key{};
  std::uint64_t h = siphash13(zero_key, id.view());
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(h >> (8 * i));
  return out;
}

Bytes cycle_bytes(ByteView src, std::size_t out_len) {
  if (src.empty()) raise(Errc::empty_source, "cannot cycle an empty source");
  Bytes out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = src[i % src.size()];
  return out;
}

ChunkMaterial derive_chunk_material(std::size_t index,
                                    std::span<const Digest> hashes,
                                    const Identity& id) {
  const std::size_t n = hashes.size();
  if (n < kMinChunks) raise(Errc::malformed_map, "fewer than 3 chunk hashes");
  if (index >= n) raise(Errc::index_out_of_range, "chunk index out of range");

  const Digest& key_source = hashes[(index + n - 1) % n];
  const auto id_pad = cycle_bytes(identity_digest(id), 16);

  ChunkMaterial m;
  for (int i = 0; i < 16; ++i) m.key[i] = key_source[i] ^ id_pad[i];
  std::copy(key_source.begin() + 16, key_source.end(), m.iv.begin());

  const Digest& pad_a = hashes[index];
  const Digest& pad_b = hashes[(index + n - 2) % n];
  std::copy(pad_a.begin(), pad_a.end(), m.pad_seed.begin());
  std::copy(pad_b.begin(), pad_b.end(), m.pad_seed.begin() + 32);
  return m;
}

Bytes encrypt_chunk(ByteView chunk, const ChunkMaterial& material) {
  Bytes blob = aes128_cbc(chunk, material, /*encrypt=*/true);
  xor_cycled_pad(blob, material.pad_seed);
  return blob;
}

Bytes decrypt_chunk(ByteView blob, const ChunkMaterial& material) {
  if (blob.empty() || blob.size() % kAesBlockSize != 0) {
    raise(Errc::bad_length, "blob length must be a positive multiple of 16");
  }
  Bytes ciphertext(blob.begin(), blob.end());
  xor_cycled_pad(ciphertext, material.pad_seed);
  return aes128_cbc(ciphertext, material, /*encrypt=*/false);
}

EncryptedFile self_encrypt(ByteView data, const Identity& id) {
  const auto sizes = chunk_sizes(data.size());
  const std::size_t n = sizes.size();

  std::vector<Digest> hashes(n);
  std::vector<ByteView> chunks(n);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    chunks[i] = data.subspan(offset, sizes[i]);
    hashes[i] = chunk_hash(chunks[i]);
    offset += sizes[i];
  }

  EncryptedFile out;
  out.map.version = std::string(kFormatVersion);
  out.map.file_size = data.size();
  out.map.chunks.reserve(n);
  out.blobs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto material = derive_chunk_material(i, hashes, id);
    Bytes blob = encrypt_chunk(chunks[i], material);
    out.map.chunks.push_back(ChunkRecord{
        .index = i,
        .src_hash = hashes[i],
        .dst_hash = chunk_hash(blob),
        .src_size = sizes[i],
        .dst_size = blob.size(),
    });
    out.blobs.push_back(std::move(blob));
  }
  return out;
}

Bytes self_decrypt(const DataMap& map, std::span<const ByteView> blobs,
                   const Identity& id) {
  check_map_shape(map, blobs.size());

  for (std::size_t i = 0; i < blobs.size(); ++i) {
    if (chunk_hash(blobs[i]) != map.chunks[i].dst_hash) {
      raise(Errc::integrity_error,
            "stored chunk " + std::to_string(i) + " does not match its hash");
    }
  }

  std::vector<Digest> hashes(map.chunks.size());
  for (std::size_t i = 0; i < map.chunks.size(); ++i) {
    hashes[i] = map.chunks[i].src_hash;
  }

  Bytes out;
  out.reserve(map.file_size);
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const auto material = derive_chunk_material(i, hashes, id);
    Bytes plain;
    try {
      plain = decrypt_chunk(blobs[i], material);
    } catch (const Error& e) {
      if (e.code() == Errc::cipher_error) {
        raise(Errc::identity_mismatch,
              "chunk " + std::to_string(i) + " did not decrypt; wrong identity");
      }
      throw;
    }
    // A wrong identity can survive the padding check by chance; the
    // plaintext hash is the authoritative verdict.
    if (plain.size() != map.chunks[i].src_size ||
        chunk_hash(plain) != map.chunks[i].src_hash) {
      raise(Errc::identity_mismatch,
            "chunk " + std::to_string(i) + " decrypted to unexpected content");
    }
    out.insert(out.end(), plain.begin(), plain.end());
  }
  return out;
}

Bytes self_decrypt(const DataMap& map, std::span<const Bytes> blobs,
                   const Identity& id) {
  std::vector<ByteView> views(blobs.begin(), blobs.end());
  return self_decrypt(map, views, id);
}

}  // namespace ibse::selfenc
