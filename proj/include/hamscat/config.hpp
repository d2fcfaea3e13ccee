#pragma once

#include "hamscat/functionals.hpp"
#include "hamscat/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hamscat {

struct Tolerances {
  double e1 = 1e-3;            // |CAL - xi| / xi
  double e4a = 1e-3;           // n=3: |T_E + dxi/dE| / |dxi/dE|
  double e4a_n2 = 1e-4;        // n=2: |T_E| / (sqrt(2E) * support area)
  double montecarlo_sigmas = 3.0;
  double winding_endpoint = 1e-3;
  double energy_drift = 1e-8;   // |H(exit) - H(entry)| / E on accepted trajectories
};

struct RunConfig {
  int dimension = 2;
  double energy = 4.0;
  double section_R = 0.0;
  std::vector<Bump> bumps;

  double step = 0.0;           // 0 selects the default 1e-3 r0 / sqrt(2E), times step_scale
  double step_scale = 1.0;
  double energy_tol = 1e-5;

  FunctionalConfig functionals;
  double dxi_relative_step = 1e-3;
  double sojourn_radius_factor = 2.0;  // ball radius for the sojourn route, in entry radii

  std::uint64_t mc_samples = 1000000;
  std::uint64_t mc_seed = 20240601;

  AssumptionConfig assumptions;
  int winding_samples = 421;
  std::vector<std::string> calabi_routes{"delta", "rho", "radial", "isotopy"};
  Tolerances tolerances;

  std::string output_directory = "hamscat-out";

  PotentialSpec potential() const { return PotentialSpec(dimension, bumps); }
};

/// Parses a JSON document. Missing keys take their defaults; unknown keys are
/// configuration errors.
RunConfig parse_config(const nlohmann::json& doc);

/// Applies a "dotted.path=value" override to a JSON document. Array elements
/// are addressed by index ("potential.bumps.0.amplitude=2"). The value is read
/// as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Loads `path`, applies the overrides in order and parses the result.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

/// Fully resolved configuration (defaults included, output section excluded).
nlohmann::json config_to_json(const RunConfig& cfg);

/// Hex SHA-256 of the canonical serialisation of config_to_json(cfg).
std::string config_hash(const RunConfig& cfg);

}  // namespace hamscat
