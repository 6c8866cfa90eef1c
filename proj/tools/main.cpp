#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "ibse/errors.hpp"

int main(int argc, char** argv) {
  using namespace ibse;

  CLI::App app{"identity-bound self-encrypting file toolkit"};
  app.require_subcommand(1);

  std::optional<std::string> store_flag;
  std::optional<std::string> ledger_flag;
  app.add_option("--store", store_flag,
                 "chunk store directory (default: <home>/store)");
  app.add_option("--ledger", ledger_flag,
                 "ledger file (default: <home>/ledger.json)");

  auto* init = app.add_subcommand("init", "create or reload the wallet");
  std::optional<std::string> identity_override;
  init->add_option("identity", identity_override,
                   "use this identity instead of the wallet key");
  init->fallthrough();

  auto* add = app.add_subcommand(
      "add", "encrypt a file, store its chunks, register the asset");
  std::string add_file;
  std::string add_key_out;
  add->add_option("file", add_file, "file to encrypt")->required();
  add->add_option("key_output_path", add_key_out,
                  "where to write the data map")
      ->required();
  add->fallthrough();

  auto* get = app.add_subcommand(
      "get", "fetch an asset's chunks and decrypt them");
  std::string get_block;
  std::string get_key;
  std::string get_dest;
  get->add_option("block", get_block, "asset UUID")->required();
  get->add_option("key", get_key, "data map file")->required();
  get->add_option("destination", get_dest, "restored file path")->required();
  get->fallthrough();

  auto* ls = app.add_subcommand("ls", "list registered assets");
  ls->fallthrough();

  auto* bench_cmd = app.add_subcommand(
      "bench", "time encryption across file sizes and write a CSV report");
  cli::BenchOptions bench_options;
  bench_cmd->add_option("--sizes", bench_options.sizes,
                        "file sizes in bytes (default: 100 KB to 100 MB sweep)")
      ->delimiter(',');
  bench_cmd->add_option("--runs", bench_options.runs, "timed runs per size")
      ->check(CLI::PositiveNumber);
  std::string bench_out = "report.csv";
  bench_cmd->add_option("--out", bench_out, "CSV output path");
  bench_cmd->add_flag("--abi", bench_options.with_abi,
                      "also time the sandboxed path and report overhead");
  bench_cmd->add_option("--seed", bench_options.seed, "corpus seed");
  bench_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors share one exit code
  }

  try {
    const cli::AppConfig config = cli::AppConfig::resolve(store_flag, ledger_flag);
    if (init->parsed()) {
      cli::cmd_init(config, identity_override);
    } else if (add->parsed()) {
      cli::cmd_add(config, add_file, add_key_out);
    } else if (get->parsed()) {
      cli::cmd_get(config, get_block, get_key, get_dest);
    } else if (ls->parsed()) {
      cli::cmd_ls(config);
    } else if (bench_cmd->parsed()) {
      bench_options.out = bench_out;
      cli::cmd_bench(config, bench_options);
    }
  } catch (const Error& e) {
    std::cerr << "ibse: " << e.what() << "\n";
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ibse: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
