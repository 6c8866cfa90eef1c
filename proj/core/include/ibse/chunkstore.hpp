#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ibse/bytes.hpp"

namespace ibse {

/// Content identifier of a stored blob: lowercase hex of its SHA-256.
class Cid {
 public:
  static Cid of(ByteView blob);

  /// Throws std::invalid_argument unless the input is 64 lowercase hex
  /// characters.
  static Cid parse(std::string_view hex);

  const std::string& str() const noexcept { return hex_; }

  bool operator==(const Cid&) const = default;
  auto operator<=>(const Cid&) const = default;

 private:
  explicit Cid(std::string hex) : hex_(std::move(hex)) {}
  std::string hex_;
};

inline Cid cid_of(ByteView blob) { return Cid::of(blob); }

/// Content-addressed blob store: put names each object by its digest,
/// get verifies the digest on read.
class ChunkStore {
 public:
  virtual ~ChunkStore() = default;

  /// Idempotent; re-putting identical bytes leaves the store unchanged.
  virtual Cid put(ByteView blob) = 0;

  /// Throws not_found for unknown CIDs and corrupt_object when the
  /// stored bytes no longer match their name.
  virtual Bytes get(const Cid& cid) const = 0;

  /// True iff get would succeed.
  virtual bool has(const Cid& cid) const;
};

class MemoryChunkStore final : public ChunkStore {
 public:
  Cid put(ByteView blob) override;
  Bytes get(const Cid& cid) const override;
  bool has(const Cid& cid) const override;
  std::size_t size() const noexcept { return objects_.size(); }

 private:
  std::map<std::string, Bytes> objects_;
};

/// One file per object, filename = CID, written via temp file then
/// atomic rename. Persists across process restarts.
class DirectoryChunkStore final : public ChunkStore {
 public:
  explicit DirectoryChunkStore(std::filesystem::path root);

  Cid put(ByteView blob) override;
  Bytes get(const Cid& cid) const override;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path object_path(const Cid& cid) const;
  std::filesystem::path root_;
};

}  // namespace ibse
