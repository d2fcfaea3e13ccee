#include "hamscat/commands.hpp"
#include "hamscat/config.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>
#include <vector>

namespace {

const char* kFooter = R"(Commands:
  scatter    section map on every quadrature node          -> scatter.csv
  xi         regularised volume by quadrature and by Monte Carlo -> xi.json
  timedelay  total time delay, sojourn route and dxi/dE    -> timedelay.json
  calabi     Calabi invariant by the configured routes     -> calabi.json
  verify     everything above plus the identity checks     -> report.json, report.txt

scatter.csv columns (n-vectors expand to _1.._n, 17 significant digits):
  node, weight, phat_*, qperp_*, impact, out_phat_*, out_qperp_*,
  tau, tau_residual, delta, phi, energy_residual, energy_drift
  (phi is the signed deflection angle; nan unless the potential is a single centred bump)
In winding mode scatter.csv has the columns sigma, phi.

Exit codes: 0 pass, 1 verification failure, 2 configuration error, 3 numerical failure.
HAMSCAT_THREADS caps the number of worker threads.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical scattering lab: time delay, regularised volume and Calabi invariant"};
  app.footer(kFooter);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  for (const char* name : {"scatter", "xi", "timedelay", "calabi", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--set", overrides, "override a configuration value, e.g. --set energy=8")
        ->take_all()
        ->allow_extra_args(false);
    sub->add_option("--out", out_dir, "output directory (default: output.directory from the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hamscat::kExitConfiguration;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const hamscat::RunConfig cfg = hamscat::load_config(config_path, overrides);
    const std::string dir = out_dir.empty() ? cfg.output_directory : out_dir;
    return hamscat::run_command(command, cfg, dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << hamscat::error_record(e) << "\n";
    return hamscat::exit_code_for(e);
  }
}
