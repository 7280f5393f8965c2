// kaclab <command> --config FILE [--seed U64] [--threads N] [--out DIR] [--check]
//
// Exit codes: 0 success, 1 configuration error, 2 numerical abort,
// 3 acceptance gate failure (only with --check).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "kaclab/config.hpp"
#include "kaclab/errors.hpp"
#include "kaclab/experiments.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kNumericalAbort = 2;
constexpr int kGateFailure = 3;

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out = ".";
  bool check = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config, "TOML or JSON experiment file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Override the configured seed");
  cmd->add_option("--threads", a.threads, "Replica worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_flag("--check", a.check, "Evaluate acceptance gates; exit 3 on failure");
  cmd->add_flag("--print-config", a.print_config, "Print the canonical configuration and exit");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw kaclab::ConfigError("cannot write " + path.string());
  f << content;
  if (!f) throw kaclab::ConfigError("write failed for " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermostated Kac particle system experiments"};
  app.require_subcommand(1);
  Args args;
  for (const char* name : {"simulate", "solve", "contraction", "chaos-scan", "decoupling", "moments"})
    add_common(app.add_subcommand(name), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    kaclab::ExperimentConfig config = kaclab::load_config(args.config);
    if (args.seed) config.seed = *args.seed;
    if (args.print_config) {
      std::cout << kaclab::serialize_config(config);
      return 0;
    }
    std::filesystem::create_directories(args.out);
    kaclab::RunOptions options;
    options.threads = args.threads;
    options.check = args.check;
    const kaclab::CommandResult result = kaclab::run_command(command, config, options);

    for (const auto& f : result.files) {
      write_file(std::filesystem::path(args.out) / f.name, f.content);
      std::cerr << "wrote " << (std::filesystem::path(args.out) / f.name).string() << "\n";
    }
    if (args.check) {
      for (const auto& msg : result.gate_failures) std::cerr << "gate failed: " << msg << "\n";
      if (!result.passed()) return kGateFailure;
      std::cerr << "all gates passed\n";
    }
    return 0;
  } catch (const kaclab::ConfigError& e) {
    std::cerr << "kaclab: " << e.what() << "\n";
    return kConfigError;
  } catch (const kaclab::NumericalAbort& e) {
    std::cerr << "kaclab: numerical abort: " << e.what() << "\n";
    return kNumericalAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "kaclab: invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "kaclab: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "kaclab: " << e.what() << "\n";
    return kNumericalAbort;
  }
}
