#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <set>
#include <string>

#include "ibse/abi.hpp"
#include "ibse/datamap.hpp"
#include "ibse/errors.hpp"
#include "ibse/selfenc.hpp"
#include "testutil.hpp"

using namespace ibse;
using namespace ibse::abi;
using testutil::random_bytes;
using testutil::TempDir;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::storage_failure;
}

std::uint64_t call(SandboxModule& m, std::string_view fn,
                   std::initializer_list<std::uint64_t> args) {
  return m.invoke_raw(fn, std::span<const std::uint64_t>(args.begin(),
                                                         args.size()));
}

std::int64_t invoke_status(HostWrapper& wrapper, std::string_view fn,
                           std::initializer_list<HostWrapper::Arg> args) {
  return std::get<std::int64_t>(wrapper.invoke(
      fn, ReturnKind::integer,
      std::span<const HostWrapper::Arg>(args.begin(), args.size())));
}

SandboxConfig config_for(const TempDir& tmp) {
  return {.granted_dirs = {tmp.path()}};
}

}  // namespace

TEST_CASE("allocate hands out nonzero, non-overlapping regions") {
  SandboxModule m({});
  const auto a = static_cast<std::uint32_t>(call(m, "abi_allocate", {16}));
  const auto b = static_cast<std::uint32_t>(call(m, "abi_allocate", {100}));
  CHECK(a != 0);
  CHECK(b != 0);
  CHECK((a + 16 <= b || b + 100 <= a));
  CHECK(m.live_allocations() == 2);
  CHECK(m.live_bytes() == 116);

  call(m, "abi_deallocate", {a, 16});
  call(m, "abi_deallocate", {b, 100});
  CHECK(m.live_allocations() == 0);
  CHECK(m.live_bytes() == 0);
}

TEST_CASE("allocating zero bytes is a trap") {
  SandboxModule m({});
  CHECK(code_of([&] { call(m, "abi_allocate", {0}); }) ==
        Errc::invocation_error);
}

TEST_CASE("freed regions are reused") {
  SandboxModule m({});
  const auto a = call(m, "abi_allocate", {64});
  call(m, "abi_deallocate", {a, 64});
  CHECK(call(m, "abi_allocate", {64}) == a);
}

TEST_CASE("double free and wrong-size free are invalid") {
  SandboxModule m({});
  const auto a = call(m, "abi_allocate", {32});
  call(m, "abi_deallocate", {a, 32});
  CHECK(code_of([&] { call(m, "abi_deallocate", {a, 32}); }) ==
        Errc::invalid_free);

  const auto b = call(m, "abi_allocate", {32});
  CHECK(code_of([&] { call(m, "abi_deallocate", {b, 31}); }) ==
        Errc::invalid_free);
  CHECK(code_of([&] { call(m, "abi_deallocate", {b + 1, 32}); }) ==
        Errc::invalid_free);
  call(m, "abi_deallocate", {b, 32});
}

TEST_CASE("memory growth stops at the configured limit") {
  SandboxModule m({.max_memory = std::size_t{256} << 10});
  CHECK(m.memory_size() == std::size_t{64} << 10);

  const auto a = call(m, "abi_allocate", {200 << 10});
  CHECK(a != 0);
  CHECK(m.memory_size() == std::size_t{256} << 10);

  CHECK(call(m, "abi_allocate", {100 << 10}) == 0);  // exhausted: null, no trap
  CHECK(m.live_allocations() == 1);
}

TEST_CASE("memory access is bounds-checked") {
  SandboxModule m({});
  const Bytes payload = random_bytes(64, 1);
  const auto addr = static_cast<std::uint32_t>(call(m, "abi_allocate", {64}));
  m.write_memory(addr, payload);
  CHECK(m.read_memory(addr, 64) == payload);

  const auto limit = static_cast<std::uint32_t>(m.memory_size());
  CHECK(code_of([&] { m.write_memory(limit - 8, payload); }) ==
        Errc::invocation_error);
  CHECK(code_of([&] { m.read_memory(limit - 8, 64); }) ==
        Errc::invocation_error);
  CHECK(code_of([&] { m.read_cstring(0); }) == Errc::invocation_error);
}

TEST_CASE("unknown exports and arity mismatches trap") {
  SandboxModule m({});
  CHECK(!m.has_export("abi_transmute"));
  CHECK(m.has_export("abi_encrypt"));
  CHECK(code_of([&] { call(m, "abi_transmute", {}); }) ==
        Errc::unknown_function);
  CHECK(code_of([&] { m.export_kind("abi_transmute"); }) ==
        Errc::unknown_function);
  CHECK(code_of([&] { call(m, "abi_allocate", {1, 2}); }) ==
        Errc::invocation_error);
}

TEST_CASE("wrapper marshals strings and casts results by kind") {
  SandboxModule m({});
  HostWrapper wrapper(m);

  const auto addr = wrapper.invoke("abi_allocate", ReturnKind::integer,
                                   std::array<HostWrapper::Arg, 1>{
                                       HostWrapper::Arg{std::int64_t{16}}});
  CHECK(std::get<std::int64_t>(addr) != 0);

  const auto echoed =
      wrapper.invoke("abi_echo", ReturnKind::byte_string_address,
                     std::array<HostWrapper::Arg, 1>{
                         HostWrapper::Arg{std::string("hello sandbox")}});
  CHECK(std::get<std::string>(echoed) == "hello sandbox");

  // one marshaled argument plus one returned buffer
  CHECK(wrapper.allocation_log().size() == 2);
}

TEST_CASE("wrapper rejects wrong kinds, unknown names, embedded zeros") {
  SandboxModule m({});
  HostWrapper wrapper(m);
  const std::array<HostWrapper::Arg, 1> int_arg{
      HostWrapper::Arg{std::int64_t{16}}};

  CHECK(code_of([&] {
          wrapper.invoke("abi_allocate", ReturnKind::byte_string_address,
                         int_arg);
        }) == Errc::kind_mismatch);
  CHECK(code_of([&] {
          wrapper.invoke("abi_missing", ReturnKind::unit, {});
        }) == Errc::unknown_function);

  std::string with_zero = "ab";
  with_zero.push_back('\0');
  with_zero += "cd";
  CHECK(code_of([&] {
          wrapper.invoke("abi_echo", ReturnKind::byte_string_address,
                         std::array<HostWrapper::Arg, 1>{
                             HostWrapper::Arg{with_zero}});
        }) == Errc::invocation_error);
}

TEST_CASE("shutdown releases every logged allocation exactly once") {
  SandboxModule m({});
  {
    HostWrapper wrapper(m);
    for (int i = 0; i < 5; ++i) {
      wrapper.invoke("abi_echo", ReturnKind::byte_string_address,
                     std::array<HostWrapper::Arg, 1>{
                         HostWrapper::Arg{std::string("ping-") +
                                          std::to_string(i)}});
    }
    CHECK(wrapper.allocation_log().size() == 10);
    CHECK(m.live_allocations() == 10);

    wrapper.shutdown();
    CHECK(wrapper.allocation_log().empty());
    CHECK(m.live_allocations() == 0);

    wrapper.shutdown();  // idempotent
    wrapper.invoke("abi_echo", ReturnKind::byte_string_address,
                   std::array<HostWrapper::Arg, 1>{
                       HostWrapper::Arg{std::string("after restart")}});
    CHECK(m.live_allocations() == 2);
  }
  // the destructor swept the post-shutdown allocations too
  CHECK(m.live_allocations() == 0);
}

TEST_CASE("encrypt writes a data map and blobs equal to the native path") {
  TempDir tmp("abi-equiv");
  const Bytes data = random_bytes(300'000, 99);
  testutil::write_file(tmp / "input.bin", data);

  SandboxModule m(config_for(tmp));
  HostWrapper wrapper(m);
  const auto status = invoke_status(
      wrapper, "abi_encrypt",
      {(tmp / "input.bin").string(), std::string("grace"),
       (tmp / "out").string()});
  REQUIRE(status == kOk);

  const EncryptedFile native = selfenc::self_encrypt(data, Identity("grace"));
  CHECK(testutil::read_file(tmp.path() / "out" /
                            std::string(kDataMapFileName)) ==
        datamap::serialize(native.map));
  for (std::size_t i = 0; i < native.blobs.size(); ++i) {
    const std::string name = to_hex(native.map.chunks[i].dst_hash);
    CHECK(testutil::read_file(tmp.path() / "out" / name) == native.blobs[i]);
  }

  std::size_t files = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(tmp.path() / "out")) {
    (void)entry;
    ++files;
  }
  CHECK(files == native.blobs.size() + 1);
}

TEST_CASE("decrypt restores the file through the sandbox") {
  TempDir tmp("abi-roundtrip");
  const Bytes data = random_bytes(50'000, 17);
  testutil::write_file(tmp / "input.bin", data);

  SandboxModule m(config_for(tmp));
  HostWrapper wrapper(m);
  REQUIRE(invoke_status(wrapper, "abi_encrypt",
                        {(tmp / "input.bin").string(), std::string("heidi"),
                         (tmp / "out").string()}) == kOk);

  const std::string map_path =
      (tmp.path() / "out" / std::string(kDataMapFileName)).string();
  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {map_path, (tmp / "out").string(), std::string("heidi"),
                       (tmp / "restored.bin").string()}) == kOk);
  CHECK(testutil::read_file(tmp / "restored.bin") == data);
}

TEST_CASE("encrypt status codes cover the failure cases") {
  TempDir tmp("abi-encrypt-errors");
  testutil::write_file(tmp / "tiny.bin", Bytes{1, 2});
  testutil::write_file(tmp / "ok.bin", Bytes{1, 2, 3, 4});

  SandboxModule m(config_for(tmp));
  HostWrapper wrapper(m);
  const std::string out = (tmp / "out").string();

  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {(tmp / "missing.bin").string(), std::string("ivy"),
                       out}) == kMissingInput);
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {(tmp / "tiny.bin").string(), std::string("ivy"), out}) ==
        kInputTooSmall);
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {(tmp / "ok.bin").string(), std::string(""), out}) ==
        kEmptyIdentity);
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {std::string("/etc/hostname"), std::string("ivy"),
                       out}) == kIoFailure);
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {(tmp / "ok.bin").string(), std::string("ivy"),
                       std::string("/no-grant")}) == kIoFailure);
}

TEST_CASE("decrypt status codes cover the failure cases") {
  TempDir tmp("abi-decrypt-errors");
  const Bytes data = random_bytes(9'000, 3);
  testutil::write_file(tmp / "input.bin", data);

  SandboxModule m(config_for(tmp));
  HostWrapper wrapper(m);
  REQUIRE(invoke_status(wrapper, "abi_encrypt",
                        {(tmp / "input.bin").string(), std::string("judy"),
                         (tmp / "out").string()}) == kOk);
  const std::string map_path =
      (tmp.path() / "out" / std::string(kDataMapFileName)).string();
  const std::string out_dir = (tmp / "out").string();
  const std::string dest = (tmp / "restored.bin").string();

  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {(tmp / "nomap.bin").string(), out_dir,
                       std::string("judy"), dest}) == kMissingInput);
  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {map_path, out_dir, std::string(""), dest}) ==
        kEmptyIdentity);
  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {map_path, out_dir, std::string("not-judy"), dest}) ==
        kIdentityMismatch);

  // tamper with one stored blob
  const DataMap map = datamap::parse(testutil::read_file(map_path));
  const auto blob_path =
      tmp.path() / "out" / to_hex(map.chunks[1].dst_hash);
  Bytes blob = testutil::read_file(blob_path);
  blob[3] ^= 0x40;
  testutil::write_file(blob_path, blob);
  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {map_path, out_dir, std::string("judy"), dest}) ==
        kIntegrityFailure);

  // a blob that is gone entirely is a missing input
  std::filesystem::remove(blob_path);
  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {map_path, out_dir, std::string("judy"), dest}) ==
        kMissingInput);

  // an unparseable map cannot pass verification
  testutil::write_file(tmp.path() / "out" / std::string(kDataMapFileName),
                       to_bytes("{broken"));
  CHECK(invoke_status(wrapper, "abi_decrypt",
                      {map_path, out_dir, std::string("judy"), dest}) ==
        kIntegrityFailure);
}

TEST_CASE("paths outside the granted directories are refused") {
  TempDir granted("abi-granted");
  TempDir outside("abi-outside");
  const Bytes data = random_bytes(5'000, 8);
  testutil::write_file(granted / "in.bin", data);
  testutil::write_file(outside / "in.bin", data);

  SandboxModule m(config_for(granted));
  HostWrapper wrapper(m);

  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {(outside / "in.bin").string(), std::string("kim"),
                       (granted / "out").string()}) == kIoFailure);
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {(granted / "in.bin").string(), std::string("kim"),
                       (outside / "out").string()}) == kIoFailure);

  // dot-dot traversal out of the grant is caught lexically
  const std::string sneaky =
      (granted.path() / ".." / outside.path().filename() / "in.bin").string();
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {sneaky, std::string("kim"),
                       (granted / "out").string()}) == kIoFailure);

  // with both directories granted the same call succeeds
  SandboxModule wide({.granted_dirs = {granted.path(), outside.path()}});
  HostWrapper wide_wrapper(wide);
  CHECK(invoke_status(wide_wrapper, "abi_encrypt",
                      {(outside / "in.bin").string(), std::string("kim"),
                       (granted / "out2").string()}) == kOk);
}

TEST_CASE("relative paths are refused: the sandbox has no working directory") {
  TempDir tmp("abi-relative");
  testutil::write_file(tmp / "in.bin", random_bytes(100, 2));
  SandboxModule m(config_for(tmp));
  HostWrapper wrapper(m);
  CHECK(invoke_status(wrapper, "abi_encrypt",
                      {std::string("in.bin"), std::string("leo"),
                       (tmp / "out").string()}) == kIoFailure);
}
