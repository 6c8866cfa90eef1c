#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibse/selfenc.hpp"

namespace ibse::bench {

enum class PathKind { native, abi };

std::string_view path_kind_name(PathKind kind) noexcept;

struct BenchRecord {
  std::uint64_t size_bytes = 0;
  PathKind path_kind = PathKind::native;
  int runs = 0;
  double mean_s = 0.0;
  double stddev_s = 0.0;
};

struct LinearFit {
  double slope = 0.0;      // seconds per byte
  double intercept = 0.0;  // seconds
  double r_squared = 0.0;
  int points = 0;
};

struct OverheadRow {
  std::uint64_t size_bytes = 0;
  double native_mean_s = 0.0;
  double abi_mean_s = 0.0;
  double overhead_pct = 0.0;
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::optional<LinearFit> native_fit;
  std::optional<LinearFit> abi_fit;
  std::vector<OverheadRow> overheads;
};

/// The default size sweep: 100, 250, 500, 750 KB, 1 MB, then 10, 25,
/// 50, 75, 100 MB (decimal units).
std::vector<std::uint64_t> default_sizes();

/// Writes one pseudo-random file per requested size under dir,
/// reproducible from the seed. Returns the paths in size order.
std::vector<std::filesystem::path> gen_corpus(
    const std::filesystem::path& dir, std::span<const std::uint64_t> sizes,
    std::uint64_t seed);

/// Times the encryption of each corpus file runs_per_size times (one
/// discarded warm-up per file) and reports mean and stddev. The native
/// path times self_encrypt on in-memory data; the abi path times the
/// sandboxed encrypt invocation on the file.
std::vector<BenchRecord> run_bench(std::span<const std::filesystem::path> corpus,
                                   int runs_per_size, PathKind kind,
                                   const Identity& id);

/// Least-squares fit of mean time vs size per path kind (needs at least
/// 3 sizes per kind present) plus per-size overhead percentages where
/// both kinds were measured.
BenchReport fit_and_report(std::span<const BenchRecord> records);

/// CSV with columns size_bytes,path_kind,runs,mean_s,stddev_s,overhead_pct.
std::string to_csv(const BenchReport& report);
void write_csv(const BenchReport& report, const std::filesystem::path& out);

}  // namespace ibse::bench
