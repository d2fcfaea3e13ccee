#pragma once

#include "hamscat/model.hpp"
#include "hamscat/scattering.hpp"
#include "hamscat/section.hpp"

#include <cstdint>
#include <string>

namespace hamscat {

/// A scalar result with its error estimate and trajectory diagnostics.
struct Estimate {
  std::string method;
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;       // quadrature nodes or samples
  double max_energy_drift = 0.0;     // max |H(exit) - H(entry)| / E over trajectories used
  double max_energy_residual = 0.0;  // max |H - E| / E along those trajectories
  double max_tau_residual = 0.0;     // time-delay routes only
};

using XiEstimate = Estimate;
using CalabiEstimate = Estimate;

/// kappa_n, the volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// xi(E) = kappa_n (2E)^{n/2} int (1 - (1 - v/E)_+^{n/2}) d^n q.
/// One-dimensional Gauss-Legendre in r for a centred bump, composite
/// Gauss-Legendre over the bounding box of the supports otherwise.
XiEstimate xi_radial_quadrature(const PotentialSpec& spec, double energy);

/// Monte Carlo estimate of vol{H0 <= E} - vol{H <= E}. Deterministic in
/// (samples, seed) regardless of the worker count.
XiEstimate xi_montecarlo(const PotentialSpec& spec, double energy, std::uint64_t samples, std::uint64_t seed);

struct XiDerivative {
  double central_difference = 0.0;  // (xi(E+dE) - xi(E-dE)) / 2dE on the quadrature
  double error = 0.0;
  double analytic = 0.0;            // n kappa_n (2E)^{(n-2)/2} int (1 - (1 - v/E)_+^{(n-2)/2})
  double delta_e = 0.0;
};
XiDerivative dxi_dE(const PotentialSpec& spec, double energy, double relative_step = 1e-3);

/// 6 pi sqrt(2E) int (1 - (1 - v/E)^{1/2}) d^3 q, the closed form quoted for n = 3.
double time_delay_display_n3(const PotentialSpec& spec, double energy);

struct FunctionalConfig {
  QuadratureConfig quadrature;
  bool use_symmetry = true;   // single momentum fibre for centred bumps
  double fd_step = 1e-4;      // chart Jacobian stencil
  int isotopy_nodes = 8;      // Gauss-Legendre nodes in the homotopy parameter
  int radial_nodes = 64;      // Gauss-Legendre nodes in s for the radial route
};

/// T_E = integral of tau over the section.
Estimate total_time_delay(const ScatteringProblem& problem, const FunctionalConfig& cfg);

/// Section integral of the sojourn-time difference for the ball |q| <= radius.
Estimate sojourn_integral(const ScatteringProblem& problem, const FunctionalConfig& cfg, double radius);

CalabiEstimate calabi_delta(const ScatteringProblem& problem, const FunctionalConfig& cfg);
CalabiEstimate calabi_rho(const ScatteringProblem& problem, const FunctionalConfig& cfg);
CalabiEstimate calabi_radial(const PotentialSpec& spec, double energy, int nodes = 64);
CalabiEstimate calabi_isotopy(const ScatteringProblem& problem, const FunctionalConfig& cfg);

}  // namespace hamscat
