#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <span>

#include "ibse/bench.hpp"
#include "ibse/chunkstore.hpp"
#include "ibse/datamap.hpp"
#include "ibse/ledger.hpp"
#include "ibse/selfenc.hpp"

namespace ibse::cli {

namespace fs = std::filesystem;

namespace {

constexpr char kIdentityFile[] = "identity";
constexpr std::string_view kBenchIdentity = "ibse-bench";

Bytes read_file(const fs::path& path, Errc missing_code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(missing_code, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)),
              std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::storage_failure, "read failed: " + path.string());
  return bytes;
}

void write_file(const fs::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::storage_failure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) raise(Errc::storage_failure, "write failed: " + path.string());
}

std::string trim_trailing(std::string text) {
  while (!text.empty() &&
         (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) {
    text.pop_back();
  }
  return text;
}

}  // namespace

AppConfig AppConfig::resolve(const std::optional<std::string>& store_flag,
                             const std::optional<std::string>& ledger_flag) {
  AppConfig config;
  if (const char* env = std::getenv("IBSE_HOME"); env != nullptr && *env) {
    config.home = env;
  } else if (const char* home = std::getenv("HOME");
             home != nullptr && *home) {
    config.home = fs::path(home) / ".ibse";
  } else {
    config.home = fs::current_path() / ".ibse";
  }
  config.store_root =
      store_flag ? fs::path(*store_flag) : config.home / "store";
  config.ledger_path =
      ledger_flag ? fs::path(*ledger_flag) : config.home / "ledger.json";
  return config;
}

std::string active_identity(const AppConfig& config) {
  const fs::path override_path = config.home / kIdentityFile;
  if (fs::exists(override_path)) {
    const Bytes raw = read_file(override_path, Errc::storage_failure);
    const std::string text =
        trim_trailing(std::string(raw.begin(), raw.end()));
    if (!text.empty()) return text;
  }
  return Wallet::init(config.home).identity_hex();
}

std::string cmd_init(const AppConfig& config,
                     const std::optional<std::string>& identity_override) {
  const Wallet wallet = Wallet::init(config.home);
  std::string identity = wallet.identity_hex();
  if (identity_override) {
    if (identity_override->empty()) {
      raise(Errc::empty_identity, "identity override must be non-empty");
    }
    write_file(config.home / kIdentityFile, as_bytes(*identity_override));
    identity = *identity_override;
  }
  std::cout << identity << "\n";
  return identity;
}

std::string cmd_add(const AppConfig& config, const fs::path& file,
                    const fs::path& key_output_path) {
  if (!fs::exists(file) || fs::is_directory(file)) {
    raise(Errc::file_not_found, "no such file: " + file.string());
  }
  const Bytes data = read_file(file, Errc::file_not_found);

  const Wallet wallet = Wallet::init(config.home);
  const Identity id(active_identity(config));
  const EncryptedFile enc = selfenc::self_encrypt(data, id);

  DirectoryChunkStore store(config.store_root);
  std::vector<std::string> cids;
  cids.reserve(enc.blobs.size());
  for (const Bytes& blob : enc.blobs) cids.push_back(store.put(blob).str());

  Ledger ledger(config.ledger_path);
  // The registered owner is always the wallet key, even when an
  // override identity did the encrypting.
  const Asset asset = ledger.create(wallet.identity_hex(), std::move(cids));

  write_file(key_output_path, datamap::serialize(enc.map));
  std::cout << asset.id << "\n";
  return asset.id;
}

void cmd_get(const AppConfig& config, const std::string& block,
             const fs::path& key, const fs::path& destination) {
  Ledger ledger(config.ledger_path);
  const Asset asset = ledger.read(block);

  const Bytes map_bytes = read_file(key, Errc::file_not_found);
  const DataMap map = datamap::parse(map_bytes);
  if (map.chunks.size() != asset.cids.size()) {
    raise(Errc::integrity_error,
          "data map does not describe asset " + block);
  }

  const DirectoryChunkStore store(config.store_root);
  std::vector<Bytes> blobs;
  blobs.reserve(asset.cids.size());
  for (const std::string& hex : asset.cids) {
    blobs.push_back(store.get(Cid::parse(hex)));
  }

  const Identity id(active_identity(config));
  const Bytes plain =
      selfenc::self_decrypt(map, std::span<const Bytes>(blobs), id);
  write_file(destination, plain);
}

void cmd_ls(const AppConfig& config) {
  const Ledger ledger(config.ledger_path);
  for (const Asset& asset : ledger.list()) {
    std::cout << asset.id << ' ' << asset.owner.substr(0, 12) << ' '
              << asset.cids.size() << "\n";
  }
}

void cmd_bench(const AppConfig& config, const BenchOptions& options) {
  const std::vector<std::uint64_t> sizes =
      options.sizes.empty() ? bench::default_sizes() : options.sizes;
  for (const std::uint64_t size : sizes) {
    if (size < selfenc::kMinInputSize) {
      raise(Errc::input_too_small, "bench sizes must be at least 3 bytes");
    }
  }

  const auto corpus =
      bench::gen_corpus(config.home / "bench-corpus", sizes, options.seed);
  const Identity id(kBenchIdentity);

  auto records = bench::run_bench(corpus, options.runs,
                                  bench::PathKind::native, id);
  if (options.with_abi) {
    const auto abi_records =
        bench::run_bench(corpus, options.runs, bench::PathKind::abi, id);
    records.insert(records.end(), abi_records.begin(), abi_records.end());
  }

  const bench::BenchReport report = bench::fit_and_report(records);
  bench::write_csv(report, options.out);

  char line[160];
  auto print_fit = [&](const char* label, const bench::LinearFit& fit) {
    std::snprintf(line, sizeof(line),
                  "%s fit: %.4e s/byte + %.4e s (r_squared=%.4f over %d sizes)",
                  label, fit.slope, fit.intercept, fit.r_squared, fit.points);
    std::cout << line << "\n";
  };
  if (report.native_fit) print_fit("native", *report.native_fit);
  if (report.abi_fit) print_fit("abi", *report.abi_fit);
  for (const bench::OverheadRow& row : report.overheads) {
    std::snprintf(line, sizeof(line), "overhead at %llu bytes: %.2f%%",
                  static_cast<unsigned long long>(row.size_bytes),
                  row.overhead_pct);
    std::cout << line << "\n";
  }
  std::cout << "report written to " << options.out.string() << "\n";
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::not_found:
    case Errc::file_not_found:
      return 3;
    case Errc::input_too_small:
    case Errc::empty_identity:
    case Errc::empty_source:
    case Errc::index_out_of_range:
    case Errc::cipher_error:
    case Errc::bad_length:
    case Errc::integrity_error:
    case Errc::identity_mismatch:
    case Errc::malformed_map:
    case Errc::unsupported_version:
    case Errc::invalid_map:
    case Errc::corrupt_object:
      return 4;
    case Errc::insufficient_data:
      return 2;
    default:
      return 5;
  }
}

}  // namespace ibse::cli
