#include "ccmm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
  CLI::App app{"Cost-function market maker simulator"};
  app.require_subcommand(1);
  ccmm::cli::Flags flags;
  std::string scenario, out_path;
  std::uint64_t seed = 0;
  double tol = 0.0;
  const std::map<std::string, ccmm::cli::Format> formats = {{"jsonl", ccmm::cli::Format::jsonl},
                                                           {"csv", ccmm::cli::Format::csv}};

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario, "Scenario file")->required();
    cmd->add_option("--seed", seed, "Override the scenario seed");
    cmd->add_option("--tol", tol, "Override the check tolerance");
    cmd->add_flag("--allow-inconsistent", flags.allow_inconsistent, "Proceed past an inconsistent switch");
    cmd->add_option("--out", out_path, "Write records to this file");
    cmd->add_option("--format", flags.format, "Record format")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  };
  CLI::App* run = app.add_subcommand("run", "Execute a scenario and its checks");
  CLI::App* check = app.add_subcommand("check", "Run feasibility, consistency and loss checks without trading");
  add_common(run);
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ccmm::cli::kExitParseError;
  }
  for (CLI::App* cmd : {run, check}) {
    if (cmd->count("--seed")) flags.seed = seed;
    if (cmd->count("--tol")) flags.tol = tol;
  }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot write " << out_path << '\n';
      return ccmm::cli::kExitParseError;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  if (run->parsed()) return ccmm::cli::cmd_run(scenario, out, std::cerr, flags);
  return ccmm::cli::cmd_check(scenario, out, std::cerr, flags);
}
