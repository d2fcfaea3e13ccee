#pragma once

#include "hamscat/model.hpp"

#include <cstddef>
#include <span>

namespace hamscat {

struct IntegratorConfig {
  double step = 1e-3;          // Verlet time step h
  double energy_tol = 1e-5;    // allowed max |H(x(t)) - H(x(0))| relative to |H(x(0))|
  std::size_t max_steps = 0;   // cap on steps taken inside the interaction region (0 = no cap)
};

/// Default step h = scale * 1e-3 * r0 / sqrt(2E) and a step cap derived from the
/// certified exit horizon.
IntegratorConfig make_integrator_config(const PotentialSpec& spec, const EnergyData& energy,
                                        double step_scale = 1.0, double energy_tol = 1e-5);

/// Exact free flow (q + t p, p).
PhasePoint free_flow(const PhasePoint& x, double t);

/// Full flow by velocity Verlet. The interval is split into N = ceil(|t|/h)
/// equal steps so the result lands exactly at time t and the map stays
/// time-reversible.
PhasePoint full_flow(const PotentialSpec& spec, const PhasePoint& x, double t, const IntegratorConfig& cfg);

/// Time integrals accumulated along one Verlet transit (trapezoid rule on the
/// step end points, i.e. at the force evaluations).
struct TransitTally {
  double virial_action = 0.0;     // int <q, grad v(q)> dt
  double potential_action = 0.0;  // int v(q) dt
  double max_radius = 0.0;        // max |q| over the step end points
  double energy_residual = 0.0;   // max |H - H(x0)| over the step end points
  double energy_drift = 0.0;      // |H(end) - H(x0)|
  std::size_t steps = 0;
};

struct FreeExit {
  PhasePoint point;
  double elapsed = 0.0;  // |time| integrated
  TransitTally tally;
};

/// Integrates the full flow in time direction `direction` (+1 or -1) until
/// |q| > support_radius and direction * <q,p> > 0. When `ball_radii` is
/// non-empty, `ball_times[k]` receives the time the Verlet path (piecewise
/// linear in q) spends inside |q| <= ball_radii[k].
FreeExit propagate_until_free(const PotentialSpec& spec, const PhasePoint& x, int direction,
                              const IntegratorConfig& cfg, std::span<const double> ball_radii = {},
                              std::span<double> ball_times = {});

/// Time spent inside |q| <= radius by the straight path q + t p, t in [t0, t1]
/// (infinite bounds allowed).
double ray_time_in_ball(const Vec& q, const Vec& p, double radius, double t0, double t1);

}  // namespace hamscat
