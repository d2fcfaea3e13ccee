#pragma once

#include "hamscat/dynamics.hpp"
#include "hamscat/model.hpp"
#include "hamscat/section.hpp"

#include <optional>
#include <span>
#include <vector>

namespace hamscat {

/// Everything needed to scatter one section point at fixed energy.
struct ScatteringProblem {
  PotentialSpec spec;
  EnergyData energy;
  IntegratorConfig integrator;
  Section section;

  /// Radius of the ball on whose boundary free trajectories are handed to the integrator.
  double entry_radius() const;
};

ScatteringProblem make_problem(const PotentialSpec& spec, const EnergyData& energy, const IntegratorConfig& integrator);

/// Same problem with the integrator step multiplied by `factor`.
ScatteringProblem with_step_scaled(const ScatteringProblem& problem, double factor);

/// W_-(x): pull x back along the free flow to the entry ball, then run the
/// full flow forward over the same time.
PhasePoint wave_minus(const ScatteringProblem& problem, const PhasePoint& x);
PhasePoint wave_minus(const ScatteringProblem& problem, const SectionPoint& z);

/// Backward transit of the full trajectory that follows the free line through z
/// as t -> +inf (the W_+ side), started on the exit sphere of the entry ball.
struct OutgoingTransit {
  FreeExit exit;
  bool missed = false;
};
OutgoingTransit outgoing_transit(const ScatteringProblem& problem, const SectionPoint& z);

struct ScatterRecord {
  SectionPoint z_in;
  SectionPoint z_out;
  PhasePoint x_minus;          // incoming asymptote point (on the section)
  PhasePoint x_plus;           // outgoing asymptote point S_E(x_minus)
  double tau = 0.0;            // time delay from the section projection of x_plus
  double tau_closed_form = 0.0;  // (<q-,p-> - <q+,p+>) / 2E
  double tau_residual = 0.0;
  double delta = 0.0;          // -int <q, grad v> dt along the full trajectory
  double potential_action = 0.0;  // int v dt along the full trajectory
  double energy_residual = 0.0;   // max |H - E| / E along the transit
  double energy_drift = 0.0;      // |H(exit) - H(entry)| / E
  double transit_time = 0.0;      // full-flow time integrated
  bool missed = false;            // free line misses every bump support
};

ScatterRecord scattering_map(const ScatteringProblem& problem, const SectionPoint& z);

struct ChartJacobian {
  Mat J;                 // (2n-2) x (2n-2), columns = input chart coordinates
  double rho = 0.0;      // -sum_ij q_i q~_j dp'_j/dq_i
  SectionPoint z_out;
  double energy_drift = 0.0;
  double energy_residual = 0.0;
};

/// Central-difference Jacobian of the section map from the chart centred at z
/// to the chart centred at its image. Optional rotations override the
/// Householder choice on either side.
ChartJacobian chart_jacobian(const ScatteringProblem& problem, const SectionPoint& z, double fd_step = 1e-4,
                             const std::optional<Mat>& input_rotation = std::nullopt,
                             const std::optional<Mat>& output_rotation = std::nullopt);

/// Scattering angle from one trajectory of the radial problem. The incoming
/// direction is e_1 and the offset is sigma e_2 (sigma signed). The sign is
/// positive when p+ leans towards q-.
double deflection_trajectory(const ScatteringProblem& problem, double sigma);

/// Rotation angle of p+ relative to p- measured clockwise (n = 2), in (-pi, pi].
double clockwise_rotation(const ScatteringProblem& problem, double sigma);

struct DeflectionProfile {
  std::vector<double> s;
  std::vector<double> phi;
  std::vector<double> dphi_ds;
};

/// Shifts each entry by a multiple of 2 pi so that neighbours differ by less than pi.
void unwrap_angles(std::vector<double>& phi);

DeflectionProfile deflection_profile_trajectory(const ScatteringProblem& problem, std::span<const double> s_grid);

/// Outermost root of 1 - v1(r)/E - s^2/r^2 for a radial potential.
double turning_point(const PotentialSpec& spec, double energy, double s);

/// phi(s) = pi - 2 int_{r_min}^inf s/r^2 (1 - v1/E - s^2/r^2)^{-1/2} dr.
double deflection_quadrature(const PotentialSpec& spec, double energy, double s, int nodes = 96);

DeflectionProfile deflection_profile_quadrature(const PotentialSpec& spec, double energy, std::span<const double> s_grid);

/// Winding profile for the n = 2 twist regime: phi(sigma) = unwrapped clockwise
/// rotation of the outgoing momentum on a sigma grid.
struct WindingProfile {
  std::vector<double> sigma;
  std::vector<double> phi;
  double winding_number = 0.0;  // (phi_last - phi_first) / 2 pi
};
WindingProfile winding_profile(const ScatteringProblem& problem, std::span<const double> sigma_grid);

/// Sojourn-time difference u_k(W_-(z)) - u0_k(z) for balls |q| <= radius_k.
struct SojournResult {
  std::vector<double> values;
  double threshold = 0.0;  // radii at or above this enclose the whole integrated segment
};
SojournResult sojourn_difference(const ScatteringProblem& problem, const SectionPoint& z, std::span<const double> radii);

}  // namespace hamscat
