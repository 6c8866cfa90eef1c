#include "ibse/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "ibse/abi.hpp"
#include "ibse/errors.hpp"

namespace ibse::bench {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

std::string_view path_kind_name(PathKind kind) noexcept {
  return kind == PathKind::native ? "native" : "abi";
}

std::vector<std::uint64_t> default_sizes() {
  return {100'000,    250'000,    500'000,    750'000,    1'000'000,
          10'000'000, 25'000'000, 50'000'000, 75'000'000, 100'000'000};
}

std::vector<fs::path> gen_corpus(const fs::path& dir,
                                 std::span<const std::uint64_t> sizes,
                                 std::uint64_t seed) {
  if (sizes.empty()) raise(Errc::insufficient_data, "no sizes requested");
  for (const std::uint64_t size : sizes) {
    if (size < selfenc::kMinInputSize) {
      raise(Errc::input_too_small,
            "corpus files must be at least 3 bytes, got " +
                std::to_string(size));
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    raise(Errc::storage_failure, "cannot create corpus dir " + dir.string());
  }

  std::vector<fs::path> paths;
  paths.reserve(sizes.size());
  for (const std::uint64_t size : sizes) {
    const fs::path path = dir / (std::to_string(size) + ".bin");
    paths.push_back(path);
    if (fs::exists(path) && fs::file_size(path) == size) continue;  // reproducible, reusable

    // Each file depends only on (seed, size), not on the sweep order.
    std::mt19937_64 rng(seed ^ (size * 0x9E3779B97F4A7C15ull));
    Bytes data(size);
    std::size_t off = 0;
    while (off + 8 <= data.size()) {
      std::uint64_t word = rng();
      for (int b = 0; b < 8; ++b) {
        data[off + b] = static_cast<std::uint8_t>(word >> (8 * b));
      }
      off += 8;
    }
    if (off < data.size()) {
      std::uint64_t word = rng();
      for (; off < data.size(); ++off) {
        data[off] = static_cast<std::uint8_t>(word);
        word >>= 8;
      }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out.good()) {
      raise(Errc::storage_failure, "cannot write corpus file " + path.string());
    }
  }
  return paths;
}

namespace {

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats summarize(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  var /= static_cast<double>(xs.size());  // population variance
  s.stddev = std::sqrt(var);
  return s;
}

Bytes read_whole_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::storage_failure, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)),
              std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::storage_failure, "read failed: " + path.string());
  return bytes;
}

std::vector<double> time_native(const fs::path& path, int runs,
                                const Identity& id) {
  const Bytes data = read_whole_file(path);
  (void)selfenc::self_encrypt(data, id);  // warm-up, discarded
  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const auto t0 = clock_type::now();
    const EncryptedFile enc = selfenc::self_encrypt(data, id);
    const auto t1 = clock_type::now();
    if (enc.blobs.size() < selfenc::kMinChunks) {
      raise(Errc::insufficient_data, "encryption produced too few chunks");
    }
    seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return seconds;
}

std::vector<double> time_abi(const fs::path& path, int runs,
                             const Identity& id) {
  const fs::path parent = fs::absolute(path).parent_path();
  const fs::path out_dir = parent / (path.filename().string() + ".enc");
  abi::SandboxModule module({.granted_dirs = {parent}});
  const std::string identity(id.bytes().begin(), id.bytes().end());

  auto encrypt_once = [&] {
    abi::HostWrapper wrapper(module);
    const abi::HostWrapper::Arg args[3] = {fs::absolute(path).string(),
                                           identity, out_dir.string()};
    const auto status = std::get<std::int64_t>(
        wrapper.invoke("abi_encrypt", abi::ReturnKind::integer, args));
    if (status != abi::kOk) {
      raise(Errc::invocation_error,
            "abi_encrypt returned status " + std::to_string(status));
    }
  };

  encrypt_once();  // warm-up, discarded
  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const auto t0 = clock_type::now();
    encrypt_once();
    const auto t1 = clock_type::now();
    seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::error_code ec;
  fs::remove_all(out_dir, ec);
  return seconds;
}

LinearFit least_squares(const std::map<std::uint64_t, double>& points) {
  LinearFit fit;
  fit.points = static_cast<int>(points.size());
  const auto n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    sx += static_cast<double>(x);
    sy += y;
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    const double dx = static_cast<double>(x) - mx;
    const double dy = y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (const auto& [x, y] : points) {
    const double pred = fit.slope * static_cast<double>(x) + fit.intercept;
    ss_res += (y - pred) * (y - pred);
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

}  // namespace

std::vector<BenchRecord> run_bench(std::span<const fs::path> corpus,
                                   int runs_per_size, PathKind kind,
                                   const Identity& id) {
  if (runs_per_size < 1) {
    raise(Errc::insufficient_data, "need at least one run per size");
  }
  std::vector<BenchRecord> records;
  records.reserve(corpus.size());
  for (const fs::path& path : corpus) {
    BenchRecord rec;
    rec.size_bytes = fs::file_size(path);
    rec.path_kind = kind;
    rec.runs = runs_per_size;
    const std::vector<double> seconds =
        kind == PathKind::native ? time_native(path, runs_per_size, id)
                                 : time_abi(path, runs_per_size, id);
    const Stats stats = summarize(seconds);
    rec.mean_s = stats.mean;
    rec.stddev_s = stats.stddev;
    records.push_back(rec);
  }
  return records;
}

BenchReport fit_and_report(std::span<const BenchRecord> records) {
  if (records.empty()) raise(Errc::insufficient_data, "no records to report");
  BenchReport report;
  report.records.assign(records.begin(), records.end());

  std::map<std::uint64_t, double> native_means;
  std::map<std::uint64_t, double> abi_means;
  for (const BenchRecord& rec : records) {
    auto& dst = rec.path_kind == PathKind::native ? native_means : abi_means;
    dst[rec.size_bytes] = rec.mean_s;
  }
  // A fit over fewer than 3 sizes is meaningless; reject rather than
  // report a vacuous line.
  if (!native_means.empty() && native_means.size() < 3) {
    raise(Errc::insufficient_data, "need at least 3 sizes for a linear fit");
  }
  if (!abi_means.empty() && abi_means.size() < 3) {
    raise(Errc::insufficient_data, "need at least 3 sizes for a linear fit");
  }
  if (!native_means.empty()) report.native_fit = least_squares(native_means);
  if (!abi_means.empty()) report.abi_fit = least_squares(abi_means);

  for (const auto& [size, abi_mean] : abi_means) {
    auto it = native_means.find(size);
    if (it == native_means.end() || it->second <= 0.0) continue;
    OverheadRow row;
    row.size_bytes = size;
    row.native_mean_s = it->second;
    row.abi_mean_s = abi_mean;
    row.overhead_pct = (abi_mean - it->second) / it->second * 100.0;
    report.overheads.push_back(row);
  }
  return report;
}

std::string to_csv(const BenchReport& report) {
  std::map<std::uint64_t, double> overheads;
  for (const OverheadRow& row : report.overheads) {
    overheads[row.size_bytes] = row.overhead_pct;
  }

  std::string csv = "size_bytes,path_kind,runs,mean_s,stddev_s,overhead_pct\n";
  char buf[192];
  for (const BenchRecord& rec : report.records) {
    const bool with_overhead =
        rec.path_kind == PathKind::abi && overheads.contains(rec.size_bytes);
    if (with_overhead) {
      std::snprintf(buf, sizeof(buf), "%llu,%s,%d,%.9f,%.9f,%.2f\n",
                    static_cast<unsigned long long>(rec.size_bytes),
                    std::string(path_kind_name(rec.path_kind)).c_str(),
                    rec.runs, rec.mean_s, rec.stddev_s,
                    overheads.at(rec.size_bytes));
    } else {
      std::snprintf(buf, sizeof(buf), "%llu,%s,%d,%.9f,%.9f,\n",
                    static_cast<unsigned long long>(rec.size_bytes),
                    std::string(path_kind_name(rec.path_kind)).c_str(),
                    rec.runs, rec.mean_s, rec.stddev_s);
    }
    csv += buf;
  }
  return csv;
}

void write_csv(const BenchReport& report, const fs::path& out) {
  const std::string csv = to_csv(report);
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  file.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!file.good()) {
    raise(Errc::storage_failure, "cannot write report " + out.string());
  }
}

}  // namespace ibse::bench
