#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gwlimits/errors.hpp"
#include "gwlimits/experiment.hpp"

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_run_options(CLI::App* cmd, RunOptions& opts) {
  cmd->add_option("-c,--config", opts.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override master_seed");
  cmd->add_option("--out", opts.out, "Override output_dir");
}

int with_config(const RunOptions& opts, auto&& fn) {
  try {
    auto cfg = gwlimits::load_experiment_config(opts.config);
    if (opts.seed) cfg.master_seed = *opts.seed;
    if (opts.out) cfg.output_dir = *opts.out;
    return fn(cfg);
  } catch (const gwlimits::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gwlimits::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gwlimits::kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical multi-type Galton-Watson simulator and limit-law checks"};
  app.require_subcommand(1);

  std::string process_file;
  auto* validate = app.add_subcommand("validate", "Check a process file and print its Frobenius data");
  validate->add_option("process", process_file, "Process file (JSON)")->required();

  RunOptions opts;
  auto* sample = app.add_subcommand("sample", "Write per-tree records");
  auto* estimate = app.add_subcommand("estimate", "Estimate v, offspring laws and u_k");
  CLI::App* verify[4];
  for (int t = 0; t < 4; ++t) {
    verify[t] = app.add_subcommand("verify-thm" + std::to_string(t + 1),
                                   "Monte Carlo check of limit law " + std::to_string(t + 1));
  }
  auto* all = app.add_subcommand("all-checks", "Validate and run every block in the config");
  for (auto* cmd : {sample, estimate, verify[0], verify[1], verify[2], verify[3], all}) add_run_options(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : gwlimits::kExitIo;
  }

  if (validate->parsed()) return gwlimits::cmd_validate(process_file, std::cout, std::cerr);
  if (sample->parsed())
    return with_config(opts, [](const auto& cfg) { return gwlimits::cmd_sample(cfg, std::cout, std::cerr); });
  if (estimate->parsed())
    return with_config(opts, [](const auto& cfg) { return gwlimits::cmd_estimate(cfg, std::cout, std::cerr); });
  for (int t = 0; t < 4; ++t) {
    if (verify[t]->parsed())
      return with_config(opts, [t](const auto& cfg) { return gwlimits::cmd_verify(cfg, t + 1, std::cout, std::cerr); });
  }
  return with_config(opts, [](const auto& cfg) { return gwlimits::cmd_all_checks(cfg, std::cout, std::cerr); });
}
