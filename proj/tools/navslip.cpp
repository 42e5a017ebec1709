// navslip: runs and verification studies for the damped Navier-Stokes
// Galerkin solver. See README.md for the config format.

#include "navslip/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace navslip;

  CLI::App app{"Spectral Galerkin solver for damped Navier-Stokes with Navier slip walls"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  bool serial = false;
  bool quiet = false;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "integrate one trajectory and write its energy ledger"},
      {"verify-basis", "certify divergence, wall conditions and orthonormality of the basis"},
      {"energy-report", "integrate and check the a-priori energy inequality"},
      {"mms", "integrate a manufactured solution and report the forcing residual"},
      {"converge-time", "temporal order study on a manufactured solution"},
      {"converge-space", "self-convergence study over study.modes"},
      {"twin", "perturbed twin runs and squared-gap scaling"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output, "output directory (overrides output.directory)");
    sub->add_flag("--serial", serial, "run study members one after another for bit-exact reproduction");
    sub->add_flag("-q,--quiet", quiet, "no progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  RunDescription desc;
  try {
    desc = parse_config(std::filesystem::path(config_path));
  } catch (const ConfigError& e) {
    std::cerr << e.to_json().dump(2) << "\n";
    return kExitConfigError;
  }

  RunOptions opts;
  opts.serial = serial;
  if (!output.empty()) opts.output_directory = output;
  std::ostream null_stream(nullptr);
  const RunResult r = run_command(subcommand, desc, opts, quiet ? null_stream : std::clog);
  if (r.status != kExitPass) {
    if (r.report.contains("error")) std::cerr << r.report.dump(2) << "\n";
    else std::cerr << "{\"error\": {\"kind\": \"check-failed\", \"report\": \"" << (r.directory / "report.json").string() << "\"}}\n";
  }
  return r.status;
}
