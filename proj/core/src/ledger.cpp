#include "ibse/ledger.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <stdexcept>
#include <system_error>

#include "ibse/errors.hpp"

namespace ibse {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_lower_hex(std::string_view s) {
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

void check_owner(const std::string& owner) {
  if (owner.empty() || owner.size() % 2 != 0 || !is_lower_hex(owner)) {
    throw std::invalid_argument(
        "owner must be non-empty lowercase hex of even length");
  }
}

Bytes read_file_or(const fs::path& path, Errc errc, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc, std::string(what) + ": " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)),
              std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::storage_failure, "read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path& path, ByteView bytes) {
  std::error_code ec;
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path tmp = path;
  tmp += "." + std::to_string(rng()) + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) {
      fs::remove(tmp, ec);
      raise(Errc::storage_failure, "write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    raise(Errc::storage_failure, "rename failed: " + path.string());
  }
}

struct PkeyFree {
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;

std::array<std::uint8_t, 32> ed25519_public_from_private(
    const std::array<std::uint8_t, 32>& priv) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                           priv.data(), priv.size()));
  if (!key) raise(Errc::storage_failure, "invalid ed25519 private key");
  std::array<std::uint8_t, 32> pub{};
  std::size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) != 1 ||
      len != pub.size()) {
    raise(Errc::storage_failure, "public key derivation failed");
  }
  return pub;
}

std::array<std::uint8_t, 32> ed25519_generate_private() {
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree> ctx(
      EVP_PKEY_CTX_new_id(EVP_PKEY_ED25519, nullptr));
  EVP_PKEY* raw = nullptr;
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
      EVP_PKEY_keygen(ctx.get(), &raw) != 1) {
    raise(Errc::storage_failure, "ed25519 key generation failed");
  }
  PkeyPtr key(raw);
  std::array<std::uint8_t, 32> priv{};
  std::size_t len = priv.size();
  if (EVP_PKEY_get_raw_private_key(key.get(), priv.data(), &len) != 1 ||
      len != priv.size()) {
    raise(Errc::storage_failure, "private key export failed");
  }
  return priv;
}

std::string to_hex32(const std::array<std::uint8_t, 32>& bytes) {
  return to_hex(ByteView(bytes.data(), bytes.size()));
}

constexpr char kWalletKeyFile[] = "wallet.key";
constexpr char kWalletPubFile[] = "wallet.pub";

}  // namespace

std::string generate_uuid_v4() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi = rng();
  std::uint64_t lo = rng();
  // version 4, variant 10
  hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;
  lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;

  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xFFFF),
                static_cast<unsigned>(hi & 0xFFFF),
                static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return std::string(buf);
}

bool is_uuid_v4(std::string_view s) {
  if (s.size() != 36) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return false;
    } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  if (s[14] != '4') return false;
  const char variant = s[19];
  return variant == '8' || variant == '9' || variant == 'a' || variant == 'b';
}

Ledger::Ledger(fs::path file) : file_(std::move(file)) {
  if (fs::exists(file_)) load();
}

void Ledger::load() {
  const Bytes bytes =
      read_file_or(file_, Errc::storage_failure, "cannot open ledger");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    raise(Errc::storage_failure, "ledger file is not valid JSON: " + file_.string());
  }
  if (!doc.is_object()) {
    raise(Errc::storage_failure, "ledger file is not a JSON object");
  }
  for (const auto& [id, rec] : doc.items()) {
    Asset asset;
    asset.id = id;
    asset.owner = rec.at("Owner").get<std::string>();
    asset.cids = rec.at("CID").get<std::vector<std::string>>();
    assets_.emplace(id, std::move(asset));
  }
}

void Ledger::persist() const {
  if (file_.empty()) return;
  ordered_json doc = ordered_json::object();
  for (const auto& [id, asset] : assets_) {  // std::map keeps ids sorted
    ordered_json rec;
    rec["ID"] = asset.id;
    rec["Owner"] = asset.owner;
    rec["CID"] = asset.cids;
    doc[id] = std::move(rec);
  }
  const std::string text = doc.dump();
  write_file_atomic(file_, as_bytes(text));
}

Asset Ledger::create(std::string owner, std::vector<std::string> cids) {
  return create_with_id(generate_uuid_v4(), std::move(owner), std::move(cids));
}

Asset Ledger::create_with_id(std::string id, std::string owner,
                             std::vector<std::string> cids) {
  check_owner(owner);
  if (cids.empty()) raise(Errc::empty_cids, "asset needs at least one CID");
  if (assets_.contains(id)) {
    raise(Errc::already_exists, "asset " + id + " already exists");
  }
  Asset asset{std::move(id), std::move(owner), std::move(cids)};
  auto [it, inserted] = assets_.emplace(asset.id, asset);
  (void)inserted;
  persist();
  return it->second;
}

Asset Ledger::read(const std::string& id) const {
  auto it = assets_.find(id);
  if (it == assets_.end()) raise(Errc::not_found, "asset " + id + " does not exist");
  return it->second;
}

Asset Ledger::update(const std::string& id, std::string owner,
                     std::vector<std::string> cids) {
  check_owner(owner);
  auto it = assets_.find(id);
  if (it == assets_.end()) raise(Errc::not_found, "asset " + id + " does not exist");
  it->second.owner = std::move(owner);
  it->second.cids = std::move(cids);
  persist();
  return it->second;
}

void Ledger::remove(const std::string& id) {
  auto it = assets_.find(id);
  if (it == assets_.end()) raise(Errc::not_found, "asset " + id + " does not exist");
  assets_.erase(it);
  persist();
}

std::vector<Asset> Ledger::list() const {
  std::vector<Asset> out;
  out.reserve(assets_.size());
  for (const auto& [id, asset] : assets_) out.push_back(asset);
  return out;
}

Wallet Wallet::init(const fs::path& home) {
  std::error_code ec;
  fs::create_directories(home, ec);
  if (ec || !fs::is_directory(home)) {
    raise(Errc::storage_failure, "cannot create wallet home " + home.string());
  }
  const fs::path key_path = home / kWalletKeyFile;
  const fs::path pub_path = home / kWalletPubFile;

  Wallet wallet;
  if (fs::exists(key_path)) {
    const Bytes raw =
        read_file_or(key_path, Errc::storage_failure, "cannot open wallet key");
    if (raw.size() != 32) {
      raise(Errc::storage_failure, "wallet key is not 32 bytes");
    }
    std::copy(raw.begin(), raw.end(), wallet.private_key_.begin());
  } else {
    wallet.private_key_ = ed25519_generate_private();
    write_file_atomic(key_path, ByteView(wallet.private_key_.data(), 32));
    fs::permissions(key_path,
                    fs::perms::owner_read | fs::perms::owner_write, ec);
  }

  wallet.public_key_ = ed25519_public_from_private(wallet.private_key_);
  wallet.identity_hex_ = to_hex32(wallet.public_key_);
  if (!fs::exists(pub_path)) {
    write_file_atomic(pub_path, ByteView(wallet.public_key_.data(), 32));
  }
  return wallet;
}

}  // namespace ibse
