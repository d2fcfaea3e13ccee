#pragma once

#include <Eigen/Dense>

#include <vector>

namespace hamscat {

inline constexpr int kMaxDim = 8;

/// Fixed-capacity vector of R^n (no heap allocation in the integrator loop).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::MatrixXd;

/// A point x = (q, p) of R^{2n}.
struct PhasePoint {
  Vec q;
  Vec p;

  int dim() const { return static_cast<int>(q.size()); }
  bool finite() const { return q.allFinite() && p.allFinite(); }
};

/// Builds a phase point and checks the (q, p) invariants.
PhasePoint make_phase_point(const Vec& q, const Vec& p);

Vec make_vec(std::initializer_list<double> values);

/// A C^infinity bump  A * exp(1 - 1/(1 - |q-c|^2/r^2))  on |q-c| < r, zero outside.
struct Bump {
  Vec center;
  double amplitude = 1.0;
  double radius = 1.0;
};

/// Compactly supported potential v = sum of bumps on R^n (free part v0 is zero).
class PotentialSpec {
 public:
  PotentialSpec(int n, std::vector<Bump> bumps);

  static PotentialSpec zero(int n);
  static PotentialSpec centered_bump(int n, double amplitude, double radius);

  int dim() const { return n_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  bool empty() const { return bumps_.empty(); }

  /// Radius of the smallest origin-centred ball containing every bump support.
  double support_radius() const { return support_radius_; }

  /// Single bump centred at the origin (or no bump at all).
  bool is_radial() const;

  /// Smallest bump radius; the natural length scale of the potential.
  double length_scale() const;

  /// Copy with every amplitude multiplied by `factor`.
  PotentialSpec scaled(double factor) const;

  double value(const Vec& q) const;
  Vec gradient(const Vec& q) const;
  /// v(q) and grad v(q) with a single exponential per bump.
  double value_and_gradient(const Vec& q, Vec& grad) const;

  /// Radial profile v1(r) for a radial spec.
  double radial_value(double r) const;

  /// True when the straight line {q + t p} misses the support of every bump.
  bool line_misses_support(const Vec& q, const Vec& p) const;

  /// True when q lies outside the closed support of every bump.
  bool outside_support(const Vec& q) const;

 private:
  int n_;
  std::vector<Bump> bumps_;
  double support_radius_ = 0.0;
};

double eval_potential(const PotentialSpec& spec, const Vec& q);
Vec eval_gradient(const PotentialSpec& spec, const Vec& q);

/// H = |p|^2/2 + v(q).
double hamiltonian(const PotentialSpec& spec, const PhasePoint& x);
/// H0 = |p|^2/2.
double free_hamiltonian(const PhasePoint& x);

struct AssumptionConfig {
  int grid_points = 200;           // grid points per axis over each bump box
  double safety_margin = 0.01;     // relative margin added to the virial supremum
  double barrier_margin = 1e-6;    // relative margin for E > max v
  bool winding_mode = false;       // relaxes barrier/virial checks for the cylinder-twist regime
};

/// Validated energy data for one run.
struct EnergyData {
  double energy = 0.0;
  double section_R = 0.0;
  double virial_sup = 0.0;     // includes the safety margin
  double max_potential = 0.0;  // grid estimate of max v
  double exit_rate = 0.0;      // lower bound on d<q,p>/dt along full trajectories
  double entry_action = 0.0;   // |<q,p>| at which trajectories enter/leave the interaction region
  double exit_horizon = 0.0;   // guaranteed transit time through the interaction region
  bool below_barrier = false;
  bool certified = true;       // false only in winding mode
};

/// Raw grid maximisation of v + <q, grad v>/2 and of v over the bump supports,
/// followed by a local refinement around the best node.
struct VirialEstimate {
  double virial_sup = 0.0;
  double max_potential = 0.0;
};
VirialEstimate estimate_virial_sup(const PotentialSpec& spec, int grid_points);

/// Checks the standing assumptions for (spec, E, R).
/// Throws EnergyBelowBarrierError when E <= max v (unless winding mode) and
/// CompletenessError when E <= sup virial (unless winding mode).
EnergyData validate_assumptions(const PotentialSpec& spec, double energy, double section_R,
                                const AssumptionConfig& cfg = {});

}  // namespace hamscat
