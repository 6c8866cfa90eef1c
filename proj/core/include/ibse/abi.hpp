#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ibse/bytes.hpp"

namespace ibse::abi {

/// How the host interprets the raw 64-bit value an export returns.
enum class ReturnKind { unit, integer, byte_string_address };

/// Status codes of the module's encrypt/decrypt exports.
enum Status : std::int32_t {
  kOk = 0,
  kMissingInput = 1,
  kInputTooSmall = 2,
  kEmptyIdentity = 3,
  kIoFailure = 4,
  kIdentityMismatch = 6,
  kIntegrityFailure = 7,
};

struct SandboxConfig {
  /// Directories the module may read and write; everything else traps
  /// to an I/O failure, mirroring a preopened-directory sandbox.
  std::vector<std::filesystem::path> granted_dirs;
  std::size_t max_memory = std::size_t{512} << 20;
  bool inherit_stdout = false;
};

/// In-process model of the sandboxed encryption module: a flat export
/// table invoked by name, a linear byte memory that is the only channel
/// for string arguments, and an explicit allocate/deallocate pair
/// because the host heap is unreachable from inside.
///
/// Exports: abi_allocate, abi_deallocate, abi_encrypt, abi_decrypt,
/// abi_echo. All payload bytes cross the boundary through linear
/// memory in bounded windows.
class SandboxModule {
 public:
  explicit SandboxModule(SandboxConfig config);

  std::uint64_t invoke_raw(std::string_view fn,
                           std::span<const std::uint64_t> args);
  bool has_export(std::string_view fn) const;
  ReturnKind export_kind(std::string_view fn) const;

  // Host-side linear memory access, bounds-checked. A violation is a
  // trap, surfaced as invocation_error.
  void write_memory(std::uint32_t addr, ByteView bytes);
  Bytes read_memory(std::uint32_t addr, std::uint32_t len) const;
  std::string read_cstring(std::uint32_t addr) const;

  std::size_t memory_size() const noexcept { return memory_.size(); }
  std::size_t live_allocations() const noexcept { return live_.size(); }
  std::size_t live_bytes() const noexcept;

 private:
  // exported surface
  std::uint32_t abi_allocate(std::uint32_t size);
  void abi_deallocate(std::uint32_t addr, std::uint32_t size);
  std::int32_t abi_encrypt(std::uint32_t file_path_addr,
                           std::uint32_t identity_addr,
                           std::uint32_t out_dir_addr);
  std::int32_t abi_decrypt(std::uint32_t map_path_addr,
                           std::uint32_t chunks_dir_addr,
                           std::uint32_t identity_addr,
                           std::uint32_t out_path_addr);
  std::uint32_t abi_echo(std::uint32_t str_addr);

  std::filesystem::path granted_path(std::string_view raw) const;
  std::uint32_t must_allocate(std::uint32_t size);
  void grow_to(std::size_t size);
  Bytes read_file_windowed(const std::filesystem::path& path);
  void write_file_windowed(const std::filesystem::path& path, ByteView bytes);

  SandboxConfig config_;
  std::vector<std::uint8_t> memory_;
  std::map<std::uint32_t, std::uint32_t> live_;       // addr -> requested size
  std::map<std::uint32_t, std::uint32_t> free_list_;  // addr -> gap length
};

struct AllocationRecord {
  std::uint32_t addr = 0;
  std::uint32_t size = 0;
};

/// Host-side convenience wrapper: accepts native arguments, copies byte
/// strings into freshly allocated sandbox memory with a trailing zero,
/// records every allocation, casts results per the declared ReturnKind,
/// and releases all recorded allocations exactly once at shutdown.
class HostWrapper {
 public:
  using Arg = std::variant<std::int64_t, std::string>;
  using Value = std::variant<std::monostate, std::int64_t, std::string>;

  explicit HostWrapper(SandboxModule& module) : module_(module) {}
  ~HostWrapper();

  HostWrapper(const HostWrapper&) = delete;
  HostWrapper& operator=(const HostWrapper&) = delete;

  Value invoke(std::string_view fn, ReturnKind kind,
               std::span<const Arg> args);

  /// Deallocation sweep over the log; idempotent.
  void shutdown();

  const std::vector<AllocationRecord>& allocation_log() const noexcept {
    return log_;
  }

 private:
  SandboxModule& module_;
  std::vector<AllocationRecord> log_;
};

/// Fixed name of the data-map file abi_encrypt writes into its output
/// directory, next to the CID-named blobs.
inline constexpr std::string_view kDataMapFileName = "datamap.idsemap";

}  // namespace ibse::abi
