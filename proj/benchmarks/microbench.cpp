#include <benchmark/benchmark.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ibse/abi.hpp"
#include "ibse/chunkstore.hpp"
#include "ibse/datamap.hpp"
#include "ibse/selfenc.hpp"
#include "ibse/sha256.hpp"

namespace {

ibse::Bytes random_bytes(std::size_t n, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  ibse::Bytes data(n);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng());
  return data;
}

const ibse::Identity kId{std::string_view{"bench-identity"}};

void BM_Sha256(benchmark::State& state) {
  const ibse::Bytes data = random_bytes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ibse::sha256(data));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sha256)->Arg(1 << 10)->Arg(1 << 20);

void BM_IdentityDigest(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(ibse::selfenc::identity_digest(kId));
  }
}
BENCHMARK(BM_IdentityDigest);

void BM_EncryptChunk(benchmark::State& state) {
  const ibse::Bytes chunk = random_bytes(static_cast<std::size_t>(state.range(0)));
  const std::vector<ibse::Digest> hashes{
      ibse::sha256(chunk), ibse::sha256(random_bytes(16, 1)),
      ibse::sha256(random_bytes(16, 2))};
  const auto material = ibse::selfenc::derive_chunk_material(0, hashes, kId);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ibse::selfenc::encrypt_chunk(chunk, material));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncryptChunk)->Arg(64 << 10)->Arg(1 << 20);

void BM_SelfEncrypt(benchmark::State& state) {
  const ibse::Bytes data = random_bytes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ibse::selfenc::self_encrypt(data, kId));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelfEncrypt)->Arg(100'000)->Arg(1'000'000)->Arg(10'000'000);

void BM_SelfDecrypt(benchmark::State& state) {
  const ibse::Bytes data = random_bytes(static_cast<std::size_t>(state.range(0)));
  const ibse::EncryptedFile enc = ibse::selfenc::self_encrypt(data, kId);
  const std::span<const ibse::Bytes> blobs(enc.blobs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ibse::selfenc::self_decrypt(enc.map, blobs, kId));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelfDecrypt)->Arg(1'000'000);

void BM_DataMapRoundtrip(benchmark::State& state) {
  const ibse::Bytes data = random_bytes(1'000'000);
  const ibse::EncryptedFile enc = ibse::selfenc::self_encrypt(data, kId);
  for (auto _ : state) {
    const ibse::Bytes text = ibse::datamap::serialize(enc.map);
    benchmark::DoNotOptimize(ibse::datamap::parse(text));
  }
}
BENCHMARK(BM_DataMapRoundtrip);

void BM_StorePut(benchmark::State& state) {
  ibse::MemoryChunkStore store;
  const ibse::Bytes blob = random_bytes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.put(blob));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StorePut)->Arg(1 << 20);

void BM_AbiEncrypt(benchmark::State& state) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ibse-microbench";
  fs::create_directories(dir);
  const fs::path input = dir / "input.bin";
  {
    const ibse::Bytes data = random_bytes(static_cast<std::size_t>(state.range(0)));
    std::ofstream out(input, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  }
  ibse::abi::SandboxModule module({.granted_dirs = {dir}});
  ibse::abi::HostWrapper wrapper(module);
  const ibse::abi::HostWrapper::Arg args[3] = {
      input.string(), std::string("bench-identity"), (dir / "out").string()};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        wrapper.invoke("abi_encrypt", ibse::abi::ReturnKind::integer, args));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
  std::error_code ec;
  fs::remove_all(dir, ec);
}
BENCHMARK(BM_AbiEncrypt)->Arg(1'000'000);

}  // namespace

BENCHMARK_MAIN();
