#include "ibse/abi.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ibse/datamap.hpp"
#include "ibse/errors.hpp"
#include "ibse/selfenc.hpp"

namespace ibse::abi {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPageSize = std::size_t{64} << 10;
constexpr std::uint32_t kHeapBase = 16;  // offsets below this are never handed out
constexpr std::uint32_t kWindowSize = 64 << 10;

std::uint32_t align8(std::uint32_t size) { return (size + 7u) & ~7u; }

// Inserts a gap and merges it with lexically adjacent gaps.
void insert_gap(std::map<std::uint32_t, std::uint32_t>& gaps, std::uint32_t addr,
                std::uint32_t len) {
  auto it = gaps.emplace(addr, len).first;
  auto next = std::next(it);
  if (next != gaps.end() && it->first + it->second == next->first) {
    it->second += next->second;
    gaps.erase(next);
  }
  if (it != gaps.begin()) {
    auto prev = std::prev(it);
    if (prev->first + prev->second == it->first) {
      prev->second += it->second;
      gaps.erase(it);
    }
  }
}

}  // namespace

SandboxModule::SandboxModule(SandboxConfig config) : config_(std::move(config)) {
  if (config_.max_memory < kPageSize) config_.max_memory = kPageSize;
  grow_to(kPageSize);
  free_list_.emplace(kHeapBase,
                     static_cast<std::uint32_t>(memory_.size()) - kHeapBase);
}

void SandboxModule::grow_to(std::size_t size) {
  if (size <= memory_.size()) return;
  const std::size_t target = (size + kPageSize - 1) / kPageSize * kPageSize;
  if (target > config_.max_memory) {
    raise(Errc::out_of_memory, "linear memory limit of " +
                                   std::to_string(config_.max_memory) +
                                   " bytes exceeded");
  }
  memory_.resize(target, 0);
}

std::uint32_t SandboxModule::abi_allocate(std::uint32_t size) {
  if (size == 0) {
    raise(Errc::invocation_error, "abi_allocate: size must be positive");
  }
  const std::uint32_t reserved = align8(size);

  auto carve = [&](std::map<std::uint32_t, std::uint32_t>::iterator it)
      -> std::uint32_t {
    const std::uint32_t addr = it->first;
    const std::uint32_t gap = it->second;
    free_list_.erase(it);
    if (gap > reserved) free_list_.emplace(addr + reserved, gap - reserved);
    live_.emplace(addr, size);
    return addr;
  };

  for (auto it = free_list_.begin(); it != free_list_.end(); ++it) {
    if (it->second >= reserved) return carve(it);
  }

  // No gap fits: extend memory so the trailing gap (or a fresh one at the
  // old end) covers the request. Exhaustion is reported as address 0.
  std::uint32_t tail = static_cast<std::uint32_t>(memory_.size());
  if (!free_list_.empty()) {
    auto last = std::prev(free_list_.end());
    if (last->first + last->second == memory_.size()) tail = last->first;
  }
  try {
    grow_to(static_cast<std::size_t>(tail) + reserved);
  } catch (const Error& e) {
    if (e.code() == Errc::out_of_memory) return 0;
    throw;
  }
  free_list_[tail] = static_cast<std::uint32_t>(memory_.size()) - tail;
  return carve(free_list_.find(tail));
}

void SandboxModule::abi_deallocate(std::uint32_t addr, std::uint32_t size) {
  auto it = live_.find(addr);
  if (it == live_.end()) {
    raise(Errc::invalid_free,
          "no live allocation at offset " + std::to_string(addr));
  }
  if (it->second != size) {
    raise(Errc::invalid_free, "allocation at offset " + std::to_string(addr) +
                                  " has size " + std::to_string(it->second) +
                                  ", not " + std::to_string(size));
  }
  live_.erase(it);
  insert_gap(free_list_, addr, align8(size));
}

std::uint32_t SandboxModule::must_allocate(std::uint32_t size) {
  const std::uint32_t addr = abi_allocate(size);
  if (addr == 0) raise(Errc::out_of_memory, "sandbox allocation failed");
  return addr;
}

std::size_t SandboxModule::live_bytes() const noexcept {
  std::size_t total = 0;
  for (const auto& [addr, size] : live_) total += size;
  return total;
}

void SandboxModule::write_memory(std::uint32_t addr, ByteView bytes) {
  if (static_cast<std::size_t>(addr) + bytes.size() > memory_.size()) {
    raise(Errc::invocation_error, "out-of-bounds linear memory write");
  }
  std::copy(bytes.begin(), bytes.end(), memory_.begin() + addr);
}

Bytes SandboxModule::read_memory(std::uint32_t addr, std::uint32_t len) const {
  if (static_cast<std::size_t>(addr) + len > memory_.size()) {
    raise(Errc::invocation_error, "out-of-bounds linear memory read");
  }
  return Bytes(memory_.begin() + addr, memory_.begin() + addr + len);
}

std::string SandboxModule::read_cstring(std::uint32_t addr) const {
  if (addr == 0 || addr >= memory_.size()) {
    raise(Errc::invocation_error, "invalid string address");
  }
  const auto begin = memory_.begin() + addr;
  const auto end = std::find(begin, memory_.end(), std::uint8_t{0});
  if (end == memory_.end()) {
    raise(Errc::invocation_error, "unterminated string in linear memory");
  }
  return std::string(begin, end);
}

bool SandboxModule::has_export(std::string_view fn) const {
  return fn == "abi_allocate" || fn == "abi_deallocate" ||
         fn == "abi_encrypt" || fn == "abi_decrypt" || fn == "abi_echo";
}

ReturnKind SandboxModule::export_kind(std::string_view fn) const {
  if (fn == "abi_allocate" || fn == "abi_encrypt" || fn == "abi_decrypt") {
    return ReturnKind::integer;
  }
  if (fn == "abi_deallocate") return ReturnKind::unit;
  if (fn == "abi_echo") return ReturnKind::byte_string_address;
  raise(Errc::unknown_function, "no export named " + std::string(fn));
}

std::uint64_t SandboxModule::invoke_raw(std::string_view fn,
                                        std::span<const std::uint64_t> args) {
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      raise(Errc::invocation_error,
            std::string(fn) + " takes " + std::to_string(n) + " argument(s), " +
                std::to_string(args.size()) + " given");
    }
  };
  auto u32 = [&](std::size_t i) {
    if (args[i] > 0xFFFFFFFFull) {
      raise(Errc::invocation_error, "argument exceeds 32-bit range");
    }
    return static_cast<std::uint32_t>(args[i]);
  };

  if (fn == "abi_allocate") {
    need(1);
    return abi_allocate(u32(0));
  }
  if (fn == "abi_deallocate") {
    need(2);
    abi_deallocate(u32(0), u32(1));
    return 0;
  }
  if (fn == "abi_encrypt") {
    need(3);
    return static_cast<std::uint32_t>(abi_encrypt(u32(0), u32(1), u32(2)));
  }
  if (fn == "abi_decrypt") {
    need(4);
    return static_cast<std::uint32_t>(
        abi_decrypt(u32(0), u32(1), u32(2), u32(3)));
  }
  if (fn == "abi_echo") {
    need(1);
    return abi_echo(u32(0));
  }
  raise(Errc::unknown_function, "no export named " + std::string(fn));
}

fs::path SandboxModule::granted_path(std::string_view raw) const {
  const fs::path norm = fs::path(std::string(raw)).lexically_normal();
  for (const auto& dir : config_.granted_dirs) {
    const fs::path base = dir.lexically_normal();
    const fs::path rel = norm.lexically_relative(base);
    if (rel.empty()) continue;
    if (rel.begin() != rel.end() && *rel.begin() == "..") continue;
    return norm;
  }
  raise(Errc::storage_failure,
        "path outside granted directories: " + norm.string());
}

Bytes SandboxModule::read_file_windowed(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::storage_failure, "cannot open " + path.string());
  const std::uint32_t win = must_allocate(kWindowSize);
  Bytes out;
  for (;;) {
    in.read(reinterpret_cast<char*>(memory_.data() + win), kWindowSize);
    const auto got = static_cast<std::size_t>(in.gcount());
    out.insert(out.end(), memory_.begin() + win, memory_.begin() + win + got);
    if (got < kWindowSize) break;
  }
  const bool failed = in.bad();
  abi_deallocate(win, kWindowSize);
  if (failed) raise(Errc::storage_failure, "read failed: " + path.string());
  return out;
}

void SandboxModule::write_file_windowed(const fs::path& path, ByteView bytes) {
  const std::uint32_t win = must_allocate(kWindowSize);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    abi_deallocate(win, kWindowSize);
    raise(Errc::storage_failure, "cannot create " + path.string());
  }
  std::size_t off = 0;
  while (off < bytes.size() && out.good()) {
    const std::size_t n = std::min<std::size_t>(kWindowSize, bytes.size() - off);
    std::memcpy(memory_.data() + win, bytes.data() + off, n);
    out.write(reinterpret_cast<const char*>(memory_.data() + win),
              static_cast<std::streamsize>(n));
    off += n;
  }
  out.flush();
  const bool failed = !out.good();
  abi_deallocate(win, kWindowSize);
  if (failed) raise(Errc::storage_failure, "write failed: " + path.string());
}

std::int32_t SandboxModule::abi_encrypt(std::uint32_t file_path_addr,
                                        std::uint32_t identity_addr,
                                        std::uint32_t out_dir_addr) {
  const std::string file_path = read_cstring(file_path_addr);
  const std::string identity = read_cstring(identity_addr);
  const std::string out_dir = read_cstring(out_dir_addr);
  if (identity.empty()) return kEmptyIdentity;
  try {
    const fs::path src = granted_path(file_path);
    const fs::path dst = granted_path(out_dir);
    if (!fs::exists(src) || fs::is_directory(src)) return kMissingInput;
    const Bytes data = read_file_windowed(src);
    if (data.size() < selfenc::kMinInputSize) return kInputTooSmall;

    const EncryptedFile enc = selfenc::self_encrypt(data, Identity(identity));
    std::error_code ec;
    fs::create_directories(dst, ec);
    if (!fs::is_directory(dst)) return kIoFailure;
    for (std::size_t i = 0; i < enc.blobs.size(); ++i) {
      const std::string name = to_hex(enc.map.chunks[i].dst_hash);
      write_file_windowed(dst / name, enc.blobs[i]);
    }
    write_file_windowed(dst / kDataMapFileName, datamap::serialize(enc.map));
    return kOk;
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::input_too_small:
        return kInputTooSmall;
      case Errc::empty_identity:
        return kEmptyIdentity;
      default:
        return kIoFailure;
    }
  }
}

std::int32_t SandboxModule::abi_decrypt(std::uint32_t map_path_addr,
                                        std::uint32_t chunks_dir_addr,
                                        std::uint32_t identity_addr,
                                        std::uint32_t out_path_addr) {
  const std::string map_path = read_cstring(map_path_addr);
  const std::string chunks_dir = read_cstring(chunks_dir_addr);
  const std::string identity = read_cstring(identity_addr);
  const std::string out_path = read_cstring(out_path_addr);
  if (identity.empty()) return kEmptyIdentity;
  try {
    const fs::path map_file = granted_path(map_path);
    const fs::path dir = granted_path(chunks_dir);
    const fs::path dst = granted_path(out_path);
    if (!fs::exists(map_file) || !fs::is_directory(dir)) return kMissingInput;

    const Bytes map_bytes = read_file_windowed(map_file);
    DataMap map;
    try {
      map = datamap::parse(map_bytes);
    } catch (const Error&) {
      return kIntegrityFailure;  // an unreadable map cannot pass verification
    }

    std::vector<Bytes> blobs;
    blobs.reserve(map.chunks.size());
    for (const ChunkRecord& rec : map.chunks) {
      const fs::path blob_path = dir / to_hex(rec.dst_hash);
      if (!fs::exists(blob_path)) return kMissingInput;
      blobs.push_back(read_file_windowed(blob_path));
    }

    const Bytes plain = selfenc::self_decrypt(map, std::span<const Bytes>(blobs),
                                              Identity(identity));
    write_file_windowed(dst, plain);
    return kOk;
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::identity_mismatch:
        return kIdentityMismatch;
      case Errc::integrity_error:
      case Errc::bad_length:
      case Errc::malformed_map:
      case Errc::unsupported_version:
      case Errc::invalid_map:
        return kIntegrityFailure;
      case Errc::empty_identity:
        return kEmptyIdentity;
      default:
        return kIoFailure;
    }
  }
}

std::uint32_t SandboxModule::abi_echo(std::uint32_t str_addr) {
  const std::string text = read_cstring(str_addr);
  const auto len = static_cast<std::uint32_t>(text.size() + 1);
  const std::uint32_t addr = must_allocate(len);
  Bytes buf = to_bytes(text);
  buf.push_back(0);
  write_memory(addr, buf);
  return addr;
}

HostWrapper::~HostWrapper() {
  try {
    shutdown();
  } catch (...) {
    // a destructor must not propagate; leaked log entries stay visible
    // through the module's live-allocation counters
  }
}

void HostWrapper::shutdown() {
  std::vector<AllocationRecord> pending;
  pending.swap(log_);
  for (const AllocationRecord& rec : pending) {
    const std::uint64_t args[2] = {rec.addr, rec.size};
    module_.invoke_raw("abi_deallocate", args);
  }
}

HostWrapper::Value HostWrapper::invoke(std::string_view fn, ReturnKind kind,
                                       std::span<const Arg> args) {
  if (!module_.has_export(fn)) {
    raise(Errc::unknown_function, "no export named " + std::string(fn));
  }
  if (module_.export_kind(fn) != kind) {
    raise(Errc::kind_mismatch,
          "declared return kind does not match export " + std::string(fn));
  }

  std::vector<std::uint64_t> raw;
  raw.reserve(args.size());
  for (const Arg& arg : args) {
    if (const auto* num = std::get_if<std::int64_t>(&arg)) {
      raw.push_back(static_cast<std::uint64_t>(*num));
      continue;
    }
    const std::string& text = std::get<std::string>(arg);
    if (text.find('\0') != std::string::npos) {
      raise(Errc::invocation_error,
            "byte-string arguments are zero-terminated; embedded zero "
            "bytes cannot cross the boundary");
    }
    const auto len = static_cast<std::uint32_t>(text.size() + 1);
    const std::uint64_t alloc_args[1] = {len};
    const auto addr =
        static_cast<std::uint32_t>(module_.invoke_raw("abi_allocate", alloc_args));
    if (addr == 0) raise(Errc::out_of_memory, "sandbox allocation failed");
    log_.push_back({addr, len});
    Bytes buf = to_bytes(text);
    buf.push_back(0);
    module_.write_memory(addr, buf);
    raw.push_back(addr);
  }

  const std::uint64_t result = module_.invoke_raw(fn, raw);
  switch (kind) {
    case ReturnKind::unit:
      return Value{std::monostate{}};
    case ReturnKind::integer:
      return Value{static_cast<std::int64_t>(result)};
    case ReturnKind::byte_string_address: {
      const auto addr = static_cast<std::uint32_t>(result);
      if (addr == 0) {
        raise(Errc::invocation_error, "export returned a null byte string");
      }
      std::string text = module_.read_cstring(addr);
      // the returned buffer now belongs to the wrapper and is released
      // in the shutdown sweep with the rest of the log
      log_.push_back({addr, static_cast<std::uint32_t>(text.size() + 1)});
      return Value{std::move(text)};
    }
  }
  raise(Errc::invocation_error, "unreachable return kind");
}

}  // namespace ibse::abi
