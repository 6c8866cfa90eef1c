#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ibse/errors.hpp"

namespace ibse::cli {

struct AppConfig {
  std::filesystem::path home;
  std::filesystem::path store_root;
  std::filesystem::path ledger_path;

  /// home comes from IBSE_HOME, falling back to $HOME/.ibse; the two
  /// flags override the store and ledger locations underneath it.
  static AppConfig resolve(const std::optional<std::string>& store_flag,
                           const std::optional<std::string>& ledger_flag);
};

/// The identity used for encryption and decryption: the override
/// persisted by `init [identity]` when present, otherwise the wallet's
/// public-key hex.
std::string active_identity(const AppConfig& config);

/// Initializes or reloads the wallet, persists the optional identity
/// override, prints and returns the active identity.
std::string cmd_init(const AppConfig& config,
                     const std::optional<std::string>& identity_override);

/// Encrypts the file, stores every blob, registers the asset, writes
/// the data map to key_output_path. Prints the asset UUID as the final
/// stdout line and returns it.
std::string cmd_add(const AppConfig& config, const std::filesystem::path& file,
                    const std::filesystem::path& key_output_path);

/// Resolves the asset, fetches its chunks, decrypts them against the
/// given data map, writes the restored file to destination.
void cmd_get(const AppConfig& config, const std::string& block,
             const std::filesystem::path& key,
             const std::filesystem::path& destination);

/// One line per asset: id, owner prefix, chunk count. Sorted by id.
void cmd_ls(const AppConfig& config);

struct BenchOptions {
  std::vector<std::uint64_t> sizes;  // empty selects the default sweep
  int runs = 10;
  std::filesystem::path out = "report.csv";
  bool with_abi = false;
  std::uint64_t seed = 0x1b5e;
};

void cmd_bench(const AppConfig& config, const BenchOptions& options);

/// 0 success, 2 usage, 3 not-found, 4 crypto or integrity, 5 storage.
int exit_code_for(Errc code) noexcept;

}  // namespace ibse::cli
