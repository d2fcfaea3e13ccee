#pragma once

#include "hamscat/config.hpp"
#include "hamscat/functionals.hpp"

#include "json.hpp"

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hamscat {

enum ExitCode : int {
  kExitPass = 0,
  kExitVerificationFailed = 1,
  kExitConfiguration = 2,
  kExitNumerical = 3,
};

/// Column order of scatter.csv (non-winding runs); n-vectors expand to _1.._n.
std::vector<std::string> scatter_columns(int n);
/// Column order of scatter.csv in winding mode.
std::vector<std::string> winding_columns();

struct ScatterTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// One row per node of the full section rule, or the (sigma, phi) profile in winding mode.
ScatterTable cmd_scatter(const RunConfig& cfg);

/// JSON payloads. Each carries "config_hash"; "provenance" is added by write_outputs.
nlohmann::json cmd_xi(const RunConfig& cfg);
nlohmann::json cmd_timedelay(const RunConfig& cfg);
nlohmann::json cmd_calabi(const RunConfig& cfg);

struct Check {
  std::string name;
  double value = 0.0;      // the quantity compared against the tolerance
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::string config_hash;
  bool winding_mode = false;
  Estimate xi_quadrature;
  Estimate xi_montecarlo;
  Estimate time_delay;
  XiDerivative dxi;
  std::vector<CalabiEstimate> calabi;
  std::string best_route;
  double residual_e1 = 0.0;
  double residual_e1_error = 0.0;
  double residual_e4a = 0.0;
  double residual_e4a_error = 0.0;
  double max_energy_drift = 0.0;
  double winding_number = 0.0;
  std::vector<Check> checks;
  bool pass = false;
};

VerificationReport cmd_verify(const RunConfig& cfg);

nlohmann::json report_to_json(const VerificationReport& report);
std::string report_to_text(const VerificationReport& report);

/// Formats a double with 17 significant digits (nan/inf spelled out).
std::string format_double(double x);

void write_csv(const ScatterTable& table, const std::filesystem::path& file);

/// Runs `command` (scatter, xi, timedelay, calabi, verify), writes its files
/// into `out_dir` and returns the exit code. Library errors propagate.
int run_command(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out_dir,
                std::ostream& log);

/// Exit code for an exception escaping run_command.
int exit_code_for(const std::exception& e);

/// Single-line JSON error record {"error": code, "message": ...}.
std::string error_record(const std::exception& e);

}  // namespace hamscat
