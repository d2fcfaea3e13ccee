#include "hamscat/model.hpp"

#include "hamscat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hamscat {

namespace {

constexpr double kEntryMargin = 1.05;
// Winding mode has no virial certificate; the transit horizon falls back to
// this multiple of the free crossing time of the entry ball.
constexpr double kWindingHorizonFactor = 40.0;

void check_dim(const PotentialSpec& spec, const Vec& q) {
  if (q.size() != spec.dim()) {
    throw ConfigurationError("dimension mismatch: potential has n=" + std::to_string(spec.dim()) +
                             ", point has " + std::to_string(q.size()));
  }
}

}  // namespace

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

PhasePoint make_phase_point(const Vec& q, const Vec& p) {
  if (q.size() != p.size()) throw ConfigurationError("phase point: q and p differ in dimension");
  if (q.size() < 2 || q.size() > kMaxDim) {
    throw ConfigurationError("phase point: dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  }
  PhasePoint x{q, p};
  if (!x.finite()) throw ConfigurationError("phase point: non-finite component");
  return x;
}

PotentialSpec::PotentialSpec(int n, std::vector<Bump> bumps) : n_(n), bumps_(std::move(bumps)) {
  if (n < 2 || n > kMaxDim) throw ConfigurationError("potential: dimension must lie in [2, 8]");
  for (const auto& b : bumps_) {
    if (b.center.size() != n) throw ConfigurationError("potential: bump centre has wrong dimension");
    if (!b.center.allFinite() || !std::isfinite(b.amplitude)) {
      throw ConfigurationError("potential: non-finite bump parameter");
    }
    if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
      throw ConfigurationError("potential: bump radius must be positive");
    }
    support_radius_ = std::max(support_radius_, b.center.norm() + b.radius);
  }
}

PotentialSpec PotentialSpec::zero(int n) { return PotentialSpec(n, {}); }

PotentialSpec PotentialSpec::centered_bump(int n, double amplitude, double radius) {
  Bump b{Vec::Zero(n), amplitude, radius};
  return PotentialSpec(n, {b});
}

bool PotentialSpec::is_radial() const {
  if (bumps_.empty()) return true;
  return bumps_.size() == 1 && bumps_.front().center.norm() == 0.0;
}

double PotentialSpec::length_scale() const {
  if (bumps_.empty()) return 1.0;
  double r = std::numeric_limits<double>::infinity();
  for (const auto& b : bumps_) r = std::min(r, b.radius);
  return r;
}

PotentialSpec PotentialSpec::scaled(double factor) const {
  auto bumps = bumps_;
  for (auto& b : bumps) b.amplitude *= factor;
  return PotentialSpec(n_, std::move(bumps));
}

double PotentialSpec::value(const Vec& q) const {
  double v = 0.0;
  for (const auto& b : bumps_) {
    const double x = (q - b.center).squaredNorm() / (b.radius * b.radius);
    if (x < 1.0) v += b.amplitude * std::exp(1.0 - 1.0 / (1.0 - x));
  }
  return v;
}

Vec PotentialSpec::gradient(const Vec& q) const {
  Vec g;
  value_and_gradient(q, g);
  return g;
}

double PotentialSpec::value_and_gradient(const Vec& q, Vec& grad) const {
  grad.setZero(n_);
  double v = 0.0;
  for (const auto& b : bumps_) {
    const double inv_r2 = 1.0 / (b.radius * b.radius);
    const Vec d = q - b.center;
    const double x = d.squaredNorm() * inv_r2;
    if (x < 1.0) {
      const double u = 1.0 - x;
      const double term = b.amplitude * std::exp(1.0 - 1.0 / u);
      v += term;
      grad.noalias() -= (2.0 * term * inv_r2 / (u * u)) * d;
    }
  }
  return v;
}

double PotentialSpec::radial_value(double r) const {
  if (bumps_.empty()) return 0.0;
  const auto& b = bumps_.front();
  const double x = r * r / (b.radius * b.radius);
  return x < 1.0 ? b.amplitude * std::exp(1.0 - 1.0 / (1.0 - x)) : 0.0;
}

bool PotentialSpec::line_misses_support(const Vec& q, const Vec& p) const {
  const double pp = p.squaredNorm();
  for (const auto& b : bumps_) {
    const Vec d = q - b.center;
    const double dist2 = pp > 0.0 ? d.squaredNorm() - d.dot(p) * d.dot(p) / pp : d.squaredNorm();
    if (dist2 < b.radius * b.radius) return false;
  }
  return true;
}

bool PotentialSpec::outside_support(const Vec& q) const {
  for (const auto& b : bumps_) {
    if ((q - b.center).squaredNorm() < b.radius * b.radius) return false;
  }
  return true;
}

double eval_potential(const PotentialSpec& spec, const Vec& q) {
  check_dim(spec, q);
  return spec.value(q);
}

Vec eval_gradient(const PotentialSpec& spec, const Vec& q) {
  check_dim(spec, q);
  return spec.gradient(q);
}

double free_hamiltonian(const PhasePoint& x) { return 0.5 * x.p.squaredNorm(); }

double hamiltonian(const PotentialSpec& spec, const PhasePoint& x) {
  check_dim(spec, x.q);
  return free_hamiltonian(x) + spec.value(x.q);
}

namespace {

struct GridMax {
  double virial = -std::numeric_limits<double>::infinity();
  double potential = -std::numeric_limits<double>::infinity();
  Vec virial_arg;
  Vec potential_arg;
};

// Visits the tensor grid with `points` nodes per axis on [lo, hi] and keeps the maxima.
void scan_box(const PotentialSpec& spec, const Vec& lo, const Vec& hi, int points, GridMax& best) {
  const int n = spec.dim();
  std::vector<int> idx(n, 0);
  Vec q(n), g(n);
  const double denom = points > 1 ? points - 1 : 1;
  for (;;) {
    for (int k = 0; k < n; ++k) q[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / denom;
    const double v = spec.value_and_gradient(q, g);
    const double vir = v + 0.5 * q.dot(g);
    if (vir > best.virial) {
      best.virial = vir;
      best.virial_arg = q;
    }
    if (v > best.potential) {
      best.potential = v;
      best.potential_arg = q;
    }
    int k = 0;
    while (k < n && ++idx[k] == points) idx[k++] = 0;
    if (k == n) break;
  }
}

}  // namespace

VirialEstimate estimate_virial_sup(const PotentialSpec& spec, int grid_points) {
  if (grid_points < 3) throw ConfigurationError("virial grid needs at least 3 points per axis");
  if (spec.empty()) return {0.0, 0.0};
  GridMax best;
  double pitch = 0.0;
  for (const auto& b : spec.bumps()) {
    const Vec lo = b.center.array() - b.radius;
    const Vec hi = b.center.array() + b.radius;
    scan_box(spec, lo, hi, grid_points, best);
    pitch = std::max(pitch, 2.0 * b.radius / (grid_points - 1));
  }
  // Zoom in around each argmax; a few passes at 1/8 of the current pitch.
  for (int pass = 0; pass < 4; ++pass) {
    GridMax local = best;
    for (const Vec* centre : {&best.virial_arg, &best.potential_arg}) {
      const Vec lo = centre->array() - pitch;
      const Vec hi = centre->array() + pitch;
      scan_box(spec, lo, hi, 17, local);
    }
    best = local;
    pitch /= 8.0;
  }
  // Outside every support v and grad v vanish, so the virial is zero there.
  return {std::max(best.virial, 0.0), std::max(best.potential, 0.0)};
}

EnergyData validate_assumptions(const PotentialSpec& spec, double energy, double section_R,
                                const AssumptionConfig& cfg) {
  if (!std::isfinite(energy) || !(energy > 0.0)) {
    throw ConfigurationError("energy must be positive and finite");
  }
  if (!std::isfinite(section_R)) throw ConfigurationError("section parameter R must be finite");
  if (!(cfg.safety_margin >= 0.0)) throw ConfigurationError("virial safety margin must be >= 0");

  const auto raw = estimate_virial_sup(spec, cfg.grid_points);

  EnergyData d;
  d.energy = energy;
  d.section_R = section_R;
  d.virial_sup = raw.virial_sup + cfg.safety_margin * std::abs(raw.virial_sup);
  d.max_potential = raw.max_potential;
  d.exit_rate = 2.0 * energy - 2.0 * d.virial_sup;
  d.entry_action = std::sqrt(2.0 * energy) * spec.support_radius() * kEntryMargin + std::abs(section_R);
  d.below_barrier = energy <= raw.max_potential * (1.0 + cfg.barrier_margin);

  if (cfg.winding_mode) {
    if (spec.dim() != 2 || !spec.is_radial() || spec.empty() || spec.bumps().front().amplitude <= 0.0) {
      throw ConfigurationError("winding mode requires n=2 and a single centred bump with A > 0",
                               "winding_mode_inadmissible");
    }
    d.certified = d.exit_rate > 0.0 && !d.below_barrier;
    const double rate = d.certified ? d.exit_rate : 2.0 * energy / kWindingHorizonFactor;
    d.exit_horizon = 2.0 * d.entry_action / rate;
    return d;
  }

  if (d.below_barrier) {
    throw EnergyBelowBarrierError("energy below barrier: E=" + std::to_string(energy) +
                                  " <= max v=" + std::to_string(raw.max_potential));
  }
  if (energy <= d.virial_sup) {
    throw CompletenessError("completeness not certified: E=" + std::to_string(energy) +
                            " <= sup virial=" + std::to_string(d.virial_sup));
  }
  d.exit_horizon = 2.0 * d.entry_action / d.exit_rate;
  return d;
}

}  // namespace hamscat
