#include "hamscat/dynamics.hpp"

#include "hamscat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hamscat {

namespace {

// Hard ceiling on total steps relative to the interaction-region cap; only a
// degenerate state (p = 0 outside the support) can reach it.
constexpr std::size_t kTotalStepFactor = 1000;

struct VerletState {
  Vec q, p, grad;
  double v = 0.0;
};

class Stepper {
 public:
  Stepper(const PotentialSpec& spec, const PhasePoint& x, const IntegratorConfig& cfg)
      : spec_(spec), cfg_(cfg), support2_(spec.support_radius() * spec.support_radius()) {
    if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) throw ConfigurationError("integrator step must be positive");
    if (!(cfg.energy_tol > 0.0)) throw ConfigurationError("energy tolerance must be positive");
    if (x.q.size() != spec.dim() || x.p.size() != spec.dim()) {
      throw ConfigurationError("phase point dimension does not match the potential");
    }
    if (!x.finite()) throw ConfigurationError("phase point has non-finite components");
    s_.q = x.q;
    s_.p = x.p;
    s_.v = spec.value_and_gradient(s_.q, s_.grad);
    h0_ = 0.5 * s_.p.squaredNorm() + s_.v;
    energy_scale_ = std::max(std::abs(h0_), std::numeric_limits<double>::min());
    tally_.max_radius = s_.q.norm();
  }

  // One velocity-Verlet step of signed size h. Returns the drift velocity p_{1/2}.
  const Vec& step(double h) {
    half_ = s_.p - (0.5 * h) * s_.grad;
    const Vec q_new = s_.q + h * half_;
    const double v_old = s_.v;
    const double virial_old = s_.q.dot(s_.grad);
    prev_q_ = s_.q;
    s_.q = q_new;
    s_.v = spec_.value_and_gradient(s_.q, s_.grad);
    s_.p = half_ - (0.5 * h) * s_.grad;

    const double ah = std::abs(h);
    tally_.virial_action += 0.5 * ah * (virial_old + s_.q.dot(s_.grad));
    tally_.potential_action += 0.5 * ah * (v_old + s_.v);
    tally_.max_radius = std::max(tally_.max_radius, s_.q.norm());
    ++tally_.steps;
    if (prev_q_.squaredNorm() <= support2_ || s_.q.squaredNorm() <= support2_) ++interaction_steps_;

    const double drift = std::abs(0.5 * s_.p.squaredNorm() + s_.v - h0_);
    tally_.energy_drift = drift;
    tally_.energy_residual = std::max(tally_.energy_residual, drift);
    if (drift > cfg_.energy_tol * energy_scale_) {
      throw IntegratorAccuracyError("integrator accuracy: energy drift " + std::to_string(drift / energy_scale_) +
                                    " exceeds tolerance " + std::to_string(cfg_.energy_tol) + " (reduce h)");
    }
    if (cfg_.max_steps > 0 && (interaction_steps_ > cfg_.max_steps || tally_.steps > kTotalStepFactor * cfg_.max_steps)) {
      throw HorizonExceededError("horizon exceeded: " + std::to_string(interaction_steps_) +
                                 " steps inside the interaction region (trapped trajectory?)");
    }
    return half_;
  }

  const VerletState& state() const { return s_; }
  const Vec& previous_q() const { return prev_q_; }
  const TransitTally& tally() const { return tally_; }
  PhasePoint point() const { return PhasePoint{s_.q, s_.p}; }

 private:
  const PotentialSpec& spec_;
  const IntegratorConfig& cfg_;
  double support2_;
  VerletState s_;
  Vec half_, prev_q_;
  double h0_ = 0.0;
  double energy_scale_ = 1.0;
  std::size_t interaction_steps_ = 0;
  TransitTally tally_;
};

// Fraction of the segment q + s d, s in [0, 1], inside |q| <= radius.
double segment_fraction_in_ball(const Vec& q, const Vec& d, double radius) {
  const double a = d.squaredNorm();
  const double c = q.squaredNorm() - radius * radius;
  if (a == 0.0) return c <= 0.0 ? 1.0 : 0.0;
  const double b = q.dot(d);
  const double disc = b * b - a * c;
  if (disc <= 0.0) return 0.0;
  const double root = std::sqrt(disc);
  const double s0 = std::max(0.0, (-b - root) / a);
  const double s1 = std::min(1.0, (-b + root) / a);
  return std::max(0.0, s1 - s0);
}

}  // namespace

IntegratorConfig make_integrator_config(const PotentialSpec& spec, const EnergyData& energy,
                                        double step_scale, double energy_tol) {
  if (!(step_scale > 0.0)) throw ConfigurationError("step scale must be positive");
  IntegratorConfig cfg;
  cfg.step = step_scale * 1e-3 * spec.length_scale() / std::sqrt(2.0 * energy.energy);
  cfg.energy_tol = energy_tol;
  cfg.max_steps = static_cast<std::size_t>(std::ceil(1.1 * energy.exit_horizon / cfg.step)) + 16;
  return cfg;
}

PhasePoint free_flow(const PhasePoint& x, double t) { return PhasePoint{x.q + t * x.p, x.p}; }

PhasePoint full_flow(const PotentialSpec& spec, const PhasePoint& x, double t, const IntegratorConfig& cfg) {
  if (!std::isfinite(t)) throw ConfigurationError("full_flow: time must be finite");
  Stepper stepper(spec, x, cfg);
  if (t == 0.0) return x;
  const auto count = static_cast<std::size_t>(std::ceil(std::abs(t) / cfg.step));
  const double h = t / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) stepper.step(h);
  return stepper.point();
}

double ray_time_in_ball(const Vec& q, const Vec& p, double radius, double t0, double t1) {
  const double a = p.squaredNorm();
  const double c = q.squaredNorm() - radius * radius;
  if (a == 0.0) return c <= 0.0 ? t1 - t0 : 0.0;
  const double b = q.dot(p);
  const double disc = b * b - a * c;
  if (disc <= 0.0) return 0.0;
  const double root = std::sqrt(disc);
  // Stable pair of roots of a t^2 + 2 b t + c.
  const double qq = -(b + std::copysign(root, b));
  double r0 = qq / a, r1 = c / qq;
  if (qq == 0.0) r0 = r1 = 0.0;
  if (r0 > r1) std::swap(r0, r1);
  const double lo = std::max(t0, r0), hi = std::min(t1, r1);
  return std::max(0.0, hi - lo);
}

FreeExit propagate_until_free(const PotentialSpec& spec, const PhasePoint& x, int direction,
                              const IntegratorConfig& cfg, std::span<const double> ball_radii,
                              std::span<double> ball_times) {
  if (direction != 1 && direction != -1) throw ConfigurationError("direction must be +1 or -1");
  if (ball_times.size() < ball_radii.size()) throw ConfigurationError("ball_times too short");
  std::fill(ball_times.begin(), ball_times.end(), 0.0);

  const double support2 = spec.support_radius() * spec.support_radius();
  auto is_free = [&](const Vec& q, const Vec& p) {
    return q.squaredNorm() > support2 && direction * q.dot(p) > 0.0;
  };

  Stepper stepper(spec, x, cfg);
  const double h = direction * cfg.step;
  if (!is_free(x.q, x.p) && x.p.squaredNorm() == 0.0 && spec.outside_support(x.q)) {
    throw NumericalError("propagate_until_free: state at rest outside the support never exits");
  }
  while (!is_free(stepper.state().q, stepper.state().p)) {
    const Vec& drift = stepper.step(h);
    if (!ball_radii.empty()) {
      const Vec d = h * drift;
      for (std::size_t k = 0; k < ball_radii.size(); ++k) {
        ball_times[k] += cfg.step * segment_fraction_in_ball(stepper.previous_q(), d, ball_radii[k]);
      }
    }
  }
  FreeExit out;
  out.point = stepper.point();
  out.tally = stepper.tally();
  out.elapsed = static_cast<double>(out.tally.steps) * cfg.step;
  return out;
}

}  // namespace hamscat
