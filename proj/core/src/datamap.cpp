#include "ibse/datamap.hpp"

#include <nlohmann/json.hpp>

#include "ibse/errors.hpp"

namespace ibse::datamap {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_lower_hex64(const std::string& s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

Digest digest_from_field(const json& obj, const char* field) {
  if (!obj.contains(field) || !obj[field].is_string()) {
    raise(Errc::invalid_map, std::string(field) + " missing or not a string");
  }
  const std::string hex = obj[field].get<std::string>();
  if (!is_lower_hex64(hex)) {
    raise(Errc::invalid_map,
          std::string(field) + " is not 64 lowercase hex characters");
  }
  Digest d{};
  auto bytes = from_hex(hex);
  std::copy(bytes->begin(), bytes->end(), d.begin());
  return d;
}

std::uint64_t uint_from_field(const json& obj, const char* field) {
  if (!obj.contains(field) || !obj[field].is_number_unsigned()) {
    raise(Errc::invalid_map,
          std::string(field) + " missing or not an unsigned integer");
  }
  return obj[field].get<std::uint64_t>();
}

constexpr std::size_t kChunkFieldCount = 5;
constexpr std::size_t kTopFieldCount = 3;

}  // namespace

void validate(const DataMap& map) {
  if (map.chunks.size() < selfenc::kMinChunks) {
    raise(Errc::invalid_map, "fewer than 3 chunks");
  }
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < map.chunks.size(); ++i) {
    const ChunkRecord& rec = map.chunks[i];
    if (rec.index != i) {
      raise(Errc::invalid_map, "chunk indices not exactly 0..N-1 in order");
    }
    const std::uint64_t expected_dst =
        (rec.src_size / selfenc::kAesBlockSize + 1) * selfenc::kAesBlockSize;
    if (rec.dst_size != expected_dst) {
      raise(Errc::invalid_map,
            "dst_size does not follow the PKCS#7 expansion rule");
    }
    total += rec.src_size;
  }
  if (total != map.file_size) {
    raise(Errc::invalid_map, "src sizes do not sum to file_size");
  }
}

Bytes serialize(const DataMap& map) {
  if (map.version != selfenc::kFormatVersion) {
    raise(Errc::invalid_map, "version tag must be idse-v1");
  }
  validate(map);

  ordered_json doc;
  doc["version"] = map.version;
  doc["file_size"] = map.file_size;
  auto chunks = ordered_json::array();
  for (const ChunkRecord& rec : map.chunks) {
    ordered_json c;
    c["index"] = rec.index;
    c["src_hash"] = to_hex(rec.src_hash);
    c["dst_hash"] = to_hex(rec.dst_hash);
    c["src_size"] = rec.src_size;
    c["dst_size"] = rec.dst_size;
    chunks.push_back(std::move(c));
  }
  doc["chunks"] = std::move(chunks);

  const std::string text = doc.dump();
  return Bytes(text.begin(), text.end());
}

DataMap parse(ByteView bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    raise(Errc::malformed_map, e.what());
  }
  if (!doc.is_object()) raise(Errc::malformed_map, "document is not an object");

  if (!doc.contains("version") || !doc["version"].is_string()) {
    raise(Errc::malformed_map, "version field missing");
  }
  const std::string version = doc["version"].get<std::string>();
  if (version != selfenc::kFormatVersion) {
    raise(Errc::unsupported_version, "unsupported version tag: " + version);
  }

  if (doc.size() != kTopFieldCount) {
    raise(Errc::invalid_map, "unexpected top-level fields");
  }
  if (!doc.contains("chunks") || !doc["chunks"].is_array()) {
    raise(Errc::invalid_map, "chunks missing or not an array");
  }

  DataMap map;
  map.version = version;
  map.file_size = uint_from_field(doc, "file_size");
  for (const json& c : doc["chunks"]) {
    if (!c.is_object() || c.size() != kChunkFieldCount) {
      raise(Errc::invalid_map, "chunk record has unexpected fields");
    }
    map.chunks.push_back(ChunkRecord{
        .index = uint_from_field(c, "index"),
        .src_hash = digest_from_field(c, "src_hash"),
        .dst_hash = digest_from_field(c, "dst_hash"),
        .src_size = uint_from_field(c, "src_size"),
        .dst_size = uint_from_field(c, "dst_size"),
    });
  }
  validate(map);
  return map;
}

}  // namespace ibse::datamap
