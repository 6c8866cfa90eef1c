#include "ibse/chunkstore.hpp"

#include <fstream>
#include <random>
#include <stdexcept>
#include <system_error>

#include "ibse/errors.hpp"
#include "ibse/sha256.hpp"

namespace ibse {

namespace fs = std::filesystem;

Cid Cid::of(ByteView blob) { return Cid(to_hex(sha256(blob))); }

Cid Cid::parse(std::string_view hex) {
  if (hex.size() != 64) {
    throw std::invalid_argument("CID must be 64 hex characters");
  }
  for (char c : hex) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      throw std::invalid_argument("CID must be lowercase hex");
    }
  }
  return Cid(std::string(hex));
}

bool ChunkStore::has(const Cid& cid) const {
  try {
    (void)get(cid);
    return true;
  } catch (const Error& e) {
    if (e.code() == Errc::not_found || e.code() == Errc::corrupt_object) {
      return false;
    }
    throw;
  }
}

Cid MemoryChunkStore::put(ByteView blob) {
  Cid cid = Cid::of(blob);
  objects_.try_emplace(cid.str(), blob.begin(), blob.end());
  return cid;
}

Bytes MemoryChunkStore::get(const Cid& cid) const {
  auto it = objects_.find(cid.str());
  if (it == objects_.end()) {
    raise(Errc::not_found, "no object " + cid.str());
  }
  return it->second;
}

bool MemoryChunkStore::has(const Cid& cid) const {
  return objects_.contains(cid.str());
}

DirectoryChunkStore::DirectoryChunkStore(fs::path root)
    : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    raise(Errc::storage_failure,
          "cannot create store directory " + root_.string());
  }
}

fs::path DirectoryChunkStore::object_path(const Cid& cid) const {
  return root_ / cid.str();
}

Cid DirectoryChunkStore::put(ByteView blob) {
  Cid cid = Cid::of(blob);
  const fs::path target = object_path(cid);

  std::error_code ec;
  if (fs::exists(target, ec)) return cid;  // content-addressed: idempotent

  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path tmp = root_ / (".put-" + std::to_string(rng()) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size()));
    if (!out.good()) {
      fs::remove(tmp, ec);
      raise(Errc::storage_failure, "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    raise(Errc::storage_failure, "rename failed for " + target.string());
  }
  return cid;
}

Bytes DirectoryChunkStore::get(const Cid& cid) const {
  const fs::path path = object_path(cid);
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::not_found, "no object " + cid.str());

  Bytes blob((std::istreambuf_iterator<char>(in)),
             std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::storage_failure, "read failed for " + path.string());

  if (Cid::of(blob) != cid) {
    raise(Errc::corrupt_object,
          "stored bytes no longer match CID " + cid.str());
  }
  return blob;
}

}  // namespace ibse
