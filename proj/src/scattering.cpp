#include "hamscat/scattering.hpp"

#include "hamscat/errors.hpp"
#include "hamscat/parallel.hpp"
#include "hamscat/quadrature.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace hamscat {

namespace {

constexpr double kEntryMargin = 1.05;

// Earlier of the two times at which the free line x meets |q| = radius.
// The caller guarantees the line crosses the sphere.
double entry_time(const PhasePoint& x, double radius) {
  const double a = x.p.squaredNorm();
  const double b = x.q.dot(x.p);
  const double c = x.q.squaredNorm() - radius * radius;
  const double disc = std::max(0.0, b * b - a * c);
  return (-b - std::sqrt(disc)) / a;
}

double exit_time(const PhasePoint& x, double radius) {
  const double a = x.p.squaredNorm();
  const double b = x.q.dot(x.p);
  const double c = x.q.squaredNorm() - radius * radius;
  const double disc = std::max(0.0, b * b - a * c);
  return (-b + std::sqrt(disc)) / a;
}

void require_radial(const PotentialSpec& spec, const char* what) {
  if (!spec.is_radial()) throw ConfigurationError(std::string(what) + " requires a single centred bump");
}

}  // namespace

double ScatteringProblem::entry_radius() const { return kEntryMargin * spec.support_radius(); }

ScatteringProblem make_problem(const PotentialSpec& spec, const EnergyData& energy, const IntegratorConfig& integrator) {
  if (!(energy.energy > 0.0)) throw ConfigurationError("problem: energy must be positive");
  return ScatteringProblem{spec, energy, integrator, Section(spec.dim(), energy.energy, energy.section_R)};
}

ScatteringProblem with_step_scaled(const ScatteringProblem& problem, double factor) {
  ScatteringProblem out = problem;
  out.integrator.step *= factor;
  out.integrator.max_steps =
      static_cast<std::size_t>(std::ceil(static_cast<double>(problem.integrator.max_steps) / factor)) + 16;
  return out;
}

PhasePoint wave_minus(const ScatteringProblem& problem, const PhasePoint& x) {
  if (problem.spec.line_misses_support(x.q, x.p)) return x;
  const double t_in = entry_time(x, problem.entry_radius());
  // Still on the incoming free ray: nothing has happened yet.
  if (t_in >= 0.0) return x;
  return full_flow(problem.spec, free_flow(x, t_in), -t_in, problem.integrator);
}

PhasePoint wave_minus(const ScatteringProblem& problem, const SectionPoint& z) {
  return wave_minus(problem, problem.section.phase_point(z));
}

OutgoingTransit outgoing_transit(const ScatteringProblem& problem, const SectionPoint& z) {
  OutgoingTransit out;
  const PhasePoint x = problem.section.phase_point(z);
  if (problem.spec.line_misses_support(x.q, x.p)) {
    out.missed = true;
    out.exit.point = x;
    return out;
  }
  const PhasePoint x_out = free_flow(x, exit_time(x, problem.entry_radius()));
  out.exit = propagate_until_free(problem.spec, x_out, -1, problem.integrator);
  return out;
}

ScatterRecord scattering_map(const ScatteringProblem& problem, const SectionPoint& z) {
  const Section& sec = problem.section;
  ScatterRecord rec;
  rec.z_in = z;
  rec.x_minus = sec.phase_point(z);
  if (problem.spec.line_misses_support(rec.x_minus.q, rec.x_minus.p)) {
    rec.z_out = z;
    rec.x_plus = rec.x_minus;
    rec.missed = true;
    return rec;
  }
  const double two_e = 2.0 * sec.energy();
  const double t_in = entry_time(rec.x_minus, problem.entry_radius());
  const PhasePoint x_in = free_flow(rec.x_minus, t_in);
  const FreeExit exit = propagate_until_free(problem.spec, x_in, +1, problem.integrator);

  // S_E = (free flow back by t_in + elapsed) o (full flow by elapsed) o (free flow by t_in).
  rec.x_plus = free_flow(exit.point, -(t_in + exit.elapsed));
  const double tol = std::max(1e-8, problem.integrator.energy_tol);
  auto [z_out, t_out] = sec.project(rec.x_plus, tol);
  rec.z_out = std::move(z_out);
  rec.tau = -t_out;
  rec.tau_closed_form = (rec.x_minus.q.dot(rec.x_minus.p) - rec.x_plus.q.dot(rec.x_plus.p)) / two_e;
  rec.tau_residual = std::abs(rec.tau - rec.tau_closed_form);
  rec.delta = -exit.tally.virial_action;
  rec.potential_action = exit.tally.potential_action;
  rec.energy_residual = exit.tally.energy_residual / sec.energy();
  rec.energy_drift = exit.tally.energy_drift / sec.energy();
  rec.transit_time = exit.elapsed;
  return rec;
}

ChartJacobian chart_jacobian(const ScatteringProblem& problem, const SectionPoint& z, double fd_step,
                             const std::optional<Mat>& input_rotation, const std::optional<Mat>& output_rotation) {
  if (!(fd_step > 0.0)) throw ConfigurationError("chart_jacobian: step must be positive");
  const Section& sec = problem.section;
  const int n = sec.dim();
  const int m = 2 * (n - 1);
  const RotatedChart in = input_rotation ? make_chart(sec, z, *input_rotation) : make_chart(sec, z);
  const Vec c0 = in.coords(z);
  const ScatterRecord centre = scattering_map(problem, z);
  const RotatedChart out =
      output_rotation ? make_chart(sec, centre.z_out, *output_rotation) : make_chart(sec, centre.z_out);

  ChartJacobian result;
  result.z_out = centre.z_out;
  result.energy_drift = centre.energy_drift;
  result.energy_residual = centre.energy_residual;

  auto image = [&](const Vec& c) {
    const ScatterRecord r = scattering_map(problem, in.point(c));
    if (!out.in_domain(r.z_out)) throw ChartOverflowError("chart overflow: image left the output chart domain");
    result.energy_drift = std::max(result.energy_drift, r.energy_drift);
    result.energy_residual = std::max(result.energy_residual, r.energy_residual);
    return out.coords(r.z_out);
  };

  double h = fd_step;
  for (int attempt = 0;; ++attempt) {
    try {
      result.J = Mat(m, m);
      for (int k = 0; k < m; ++k) {
        Vec plus = c0, minus = c0;
        plus[k] += h;
        minus[k] -= h;
        const Eigen::VectorXd col = (Eigen::VectorXd(image(plus)) - Eigen::VectorXd(image(minus))) / (2.0 * h);
        result.J.col(k) = col;
      }
      break;
    } catch (const ChartOverflowError&) {
      // Shrink the stencil once; a second overflow means the chart really is inadequate.
      if (attempt > 0) throw;
      h /= 8.0;
    }
  }

  const Vec q_in = c0.head(n - 1);
  const Vec q_out = out.coords(centre.z_out).head(n - 1);
  double rho = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    for (int j = 0; j < n - 1; ++j) rho -= q_in[i] * q_out[j] * result.J(n - 1 + j, i);
  }
  result.rho = rho;
  return result;
}

namespace {

struct AxisScatter {
  Vec p_out_hat;
  bool missed;
};

AxisScatter scatter_along_axis(const ScatteringProblem& problem, double sigma) {
  const int n = problem.section.dim();
  const SectionPoint z = problem.section.make_point(Vec::Unit(n, 0), sigma * Vec::Unit(n, 1));
  const ScatterRecord rec = scattering_map(problem, z);
  return {rec.z_out.phat, rec.missed};
}

std::vector<double> grid_derivative(const std::vector<double>& s, const std::vector<double>& f) {
  const std::size_t m = s.size();
  std::vector<double> d(m, 0.0);
  if (m < 2) return d;
  d[0] = (f[1] - f[0]) / (s[1] - s[0]);
  d[m - 1] = (f[m - 1] - f[m - 2]) / (s[m - 1] - s[m - 2]);
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (f[i + 1] - f[i - 1]) / (s[i + 1] - s[i - 1]);
  return d;
}

}  // namespace

double deflection_trajectory(const ScatteringProblem& problem, double sigma) {
  require_radial(problem.spec, "deflection_trajectory");
  const auto res = scatter_along_axis(problem, sigma);
  if (res.missed) return 0.0;
  const double side = sigma >= 0.0 ? 1.0 : -1.0;
  return std::atan2(side * res.p_out_hat[1], res.p_out_hat[0]);
}

double clockwise_rotation(const ScatteringProblem& problem, double sigma) {
  require_radial(problem.spec, "clockwise_rotation");
  const auto res = scatter_along_axis(problem, sigma);
  if (res.missed) return 0.0;
  return -std::atan2(res.p_out_hat[1], res.p_out_hat[0]);
}

void unwrap_angles(std::vector<double>& phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 1; i < phi.size(); ++i) {
    const double jump = phi[i] - phi[i - 1];
    phi[i] -= two_pi * std::round(jump / two_pi);
  }
}

DeflectionProfile deflection_profile_trajectory(const ScatteringProblem& problem, std::span<const double> s_grid) {
  DeflectionProfile prof;
  prof.s.assign(s_grid.begin(), s_grid.end());
  prof.phi = parallel_map<double>(prof.s.size(), [&](std::size_t i) { return deflection_trajectory(problem, prof.s[i]); });
  unwrap_angles(prof.phi);
  prof.dphi_ds = grid_derivative(prof.s, prof.phi);
  return prof;
}

double turning_point(const PotentialSpec& spec, double energy, double s) {
  require_radial(spec, "turning_point");
  if (!(s > 0.0)) throw ConfigurationError("turning_point: impact parameter must be positive");
  auto f = [&](double r) { return 1.0 - spec.radial_value(r) / energy - (s * s) / (r * r); };
  const double r0 = spec.empty() ? s : spec.bumps().front().radius;
  if (s >= r0) return s;

  // Scan inwards from the edge of the support; the first sign change brackets
  // the outermost root.
  constexpr int kScan = 4000;
  const double dr = r0 / kScan;
  double hi = r0, f_hi = f(hi);
  double lo = hi;
  bool found = false;
  for (int i = 1; i < kScan; ++i) {
    lo = r0 - i * dr;
    if (f(lo) <= 0.0) {
      found = true;
      break;
    }
    hi = lo;
  }
  // Below the scan pitch, keep halving (f -> -inf as r -> 0).
  for (int i = 0; !found && i < 200; ++i) {
    hi = lo;
    lo *= 0.5;
    if (f(lo) <= 0.0) found = true;
  }
  if (!found) throw TurningPointError("turning point not found for s = " + std::to_string(s));
  f_hi = f(hi);
  const double f_lo = f(lo);
  if (f_lo == 0.0) return lo;
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  if (max_iter >= 200) throw TurningPointError("turning point: root refinement did not converge");
  // Take the end where f >= 0 so the integrand stays real.
  return bracket.second;
}

double deflection_quadrature(const PotentialSpec& spec, double energy, double s, int nodes) {
  if (spec.empty()) return 0.0;
  require_radial(spec, "deflection_quadrature");
  const double amplitude = spec.bumps().front().amplitude;
  if (!(energy > std::max(0.0, amplitude))) {
    throw ConfigurationError("deflection_quadrature requires E above the potential maximum");
  }
  const double r0 = spec.bumps().front().radius;
  if (!(s > 0.0) || s >= r0) return 0.0;

  auto f = [&](double r) { return 1.0 - spec.radial_value(r) / energy - (s * s) / (r * r); };
  const double r_min = turning_point(spec, energy, s);
  const double r_split = std::min(r0, 4.0 * r_min);

  // [r_min, r_split]: r = r_min / cos(u) turns the inverse square root into a regular integrand.
  const double u_max = std::acos(std::min(1.0, r_min / r_split));
  const GaussRule near = gauss_legendre(nodes, 0.0, u_max);
  double inner = 0.0;
  for (std::size_t i = 0; i < near.nodes.size(); ++i) {
    const double u = near.nodes[i];
    const double fr = f(r_min / std::cos(u));
    if (fr > 0.0) inner += near.weights[i] * (s / r_min) * std::sin(u) / std::sqrt(fr);
  }
  // [r_split, r0]: smooth, Gauss-Legendre in log r.
  if (r_split < r0) {
    const GaussRule far = gauss_legendre(nodes, std::log(r_split), std::log(r0));
    for (std::size_t i = 0; i < far.nodes.size(); ++i) {
      const double r = std::exp(far.nodes[i]);
      inner += far.weights[i] * (s / r) / std::sqrt(f(r));
    }
  }
  // Beyond the support the motion is free: int_{r0}^inf s/r^2 (1 - s^2/r^2)^{-1/2} dr.
  const double tail = std::asin(s / r0);
  return std::numbers::pi - 2.0 * (inner + tail);
}

DeflectionProfile deflection_profile_quadrature(const PotentialSpec& spec, double energy, std::span<const double> s_grid) {
  DeflectionProfile prof;
  prof.s.assign(s_grid.begin(), s_grid.end());
  prof.phi = parallel_map<double>(prof.s.size(), [&](std::size_t i) { return deflection_quadrature(spec, energy, prof.s[i]); });
  prof.dphi_ds = parallel_map<double>(prof.s.size(), [&](std::size_t i) {
    const double s = prof.s[i];
    const double ds = 1e-5 * std::max(s, 1e-3);
    return (deflection_quadrature(spec, energy, s + ds) - deflection_quadrature(spec, energy, std::max(0.0, s - ds))) /
           (s + ds - std::max(0.0, s - ds));
  });
  return prof;
}

WindingProfile winding_profile(const ScatteringProblem& problem, std::span<const double> sigma_grid) {
  if (problem.section.dim() != 2) throw ConfigurationError("winding profile requires n = 2");
  WindingProfile prof;
  prof.sigma.assign(sigma_grid.begin(), sigma_grid.end());
  prof.phi = parallel_map<double>(prof.sigma.size(), [&](std::size_t i) { return clockwise_rotation(problem, prof.sigma[i]); });
  unwrap_angles(prof.phi);
  if (!prof.phi.empty()) prof.winding_number = (prof.phi.back() - prof.phi.front()) / (2.0 * std::numbers::pi);
  return prof;
}

SojournResult sojourn_difference(const ScatteringProblem& problem, const SectionPoint& z, std::span<const double> radii) {
  SojournResult res;
  res.values.assign(radii.size(), 0.0);
  const PhasePoint x = problem.section.phase_point(z);
  if (problem.spec.line_misses_support(x.q, x.p)) return res;

  constexpr double inf = std::numeric_limits<double>::infinity();
  const double t_in = entry_time(x, problem.entry_radius());
  const PhasePoint x_in = free_flow(x, t_in);
  std::vector<double> segment(radii.size(), 0.0);
  const FreeExit exit = propagate_until_free(problem.spec, x_in, +1, problem.integrator, radii, segment);
  res.threshold = exit.tally.max_radius;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double full = ray_time_in_ball(x_in.q, x_in.p, radii[k], -inf, 0.0) + segment[k] +
                        ray_time_in_ball(exit.point.q, exit.point.p, radii[k], 0.0, inf);
    const double free = ray_time_in_ball(x.q, x.p, radii[k], -inf, inf);
    res.values[k] = full - free;
  }
  return res;
}

}  // namespace hamscat
