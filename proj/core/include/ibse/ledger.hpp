#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ibse/bytes.hpp"

namespace ibse {

std::string generate_uuid_v4();
bool is_uuid_v4(std::string_view s);

/// Ledger entry registering one encrypted file: a generated UUID, the
/// owner's public-key hex, and the CIDs of the stored chunks in order.
struct Asset {
  std::string id;
  std::string owner;
  std::vector<std::string> cids;

  bool operator==(const Asset&) const = default;
};

/// World-state simulation with create/read/update/delete semantics:
/// create fails on an existing key, the others fail on a missing key.
/// When constructed with a file path the state is persisted there as a
/// canonical JSON document, written atomically on every mutation.
class Ledger {
 public:
  Ledger() = default;  // volatile, in-memory only
  explicit Ledger(std::filesystem::path file);

  Asset create(std::string owner, std::vector<std::string> cids);
  Asset create_with_id(std::string id, std::string owner,
                       std::vector<std::string> cids);
  Asset read(const std::string& id) const;
  Asset update(const std::string& id, std::string owner,
               std::vector<std::string> cids);
  void remove(const std::string& id);

  /// All assets, sorted by id.
  std::vector<Asset> list() const;

  std::size_t size() const noexcept { return assets_.size(); }

 private:
  void load();
  void persist() const;

  std::map<std::string, Asset> assets_;
  std::filesystem::path file_;
};

/// Ed25519 keypair persisted under a home directory. The public key's
/// lowercase hex doubles as the encryption identity in the add/get
/// workflow.
class Wallet {
 public:
  /// Generates a keypair on first call and reloads it afterwards.
  static Wallet init(const std::filesystem::path& home);

  const std::string& identity_hex() const noexcept { return identity_hex_; }
  const std::array<std::uint8_t, 32>& public_key() const noexcept {
    return public_key_;
  }
  const std::array<std::uint8_t, 32>& private_key() const noexcept {
    return private_key_;
  }

 private:
  Wallet() = default;
  std::array<std::uint8_t, 32> private_key_{};
  std::array<std::uint8_t, 32> public_key_{};
  std::string identity_hex_;
};

}  // namespace ibse
