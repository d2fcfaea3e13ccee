#pragma once

#include "hamscat/model.hpp"

#include <span>
#include <utility>
#include <vector>

namespace hamscat {

/// A point of the section {|p|^2/2 = E, <q,p> = R}: unit momentum direction
/// and transverse offset (orthogonal to phat).
struct SectionPoint {
  Vec phat;
  Vec qperp;

  double impact() const { return qperp.norm(); }
};

class Section {
 public:
  Section(int n, double energy, double R);

  int dim() const { return n_; }
  double energy() const { return energy_; }
  double R() const { return R_; }
  double speed() const { return speed_; }

  /// Normalises phat and removes the phat component of qperp.
  SectionPoint make_point(const Vec& phat, const Vec& qperp) const;

  /// x = (qperp + (R/2E) p, p) with p = sqrt(2E) phat.
  PhasePoint phase_point(const SectionPoint& z) const;

  /// (z, t) with x = free_flow(z, t) and t = (<q,p> - R) / 2E. `energy_tol`
  /// bounds the relative mismatch of |p|^2/2 against E.
  std::pair<SectionPoint, double> project(const PhasePoint& x, double energy_tol = 1e-8) const;

 private:
  int n_;
  double energy_;
  double R_;
  double speed_;
};

/// Rotated coordinates (Q_1..Q_{n-1}, P_1..P_{n-1}) around a base point, where
/// (Q, P) = (O q, O p) and O phat_base = e_n. P_n and Q_n are recovered from the
/// section constraints. The coordinates are symplectic at the base point itself,
/// which is where derivatives are taken.
class RotatedChart {
 public:
  RotatedChart(const Section& section, SectionPoint base, Mat rotation);

  const SectionPoint& base() const { return base_; }
  const Mat& rotation() const { return O_; }
  int size() const { return 2 * (section_.dim() - 1); }

  Vec coords(const SectionPoint& z) const;
  SectionPoint point(const Vec& coords) const;
  /// |p - p_base| < sqrt(2E).
  bool in_domain(const SectionPoint& z) const;
  bool in_domain_coords(const Vec& coords) const;

 private:
  Section section_;
  SectionPoint base_;
  Mat O_;
};

/// Householder reflection taking phat to e_n; identity when phat = e_n.
Mat householder_to_axis(const Vec& phat);

RotatedChart make_chart(const Section& section, const SectionPoint& z);
/// Chart with a caller-supplied orthogonal O (must satisfy O phat = e_n).
RotatedChart make_chart(const Section& section, const SectionPoint& z, const Mat& rotation);

/// Density (2E)^{(n-1)/2} of the reduced volume on the section against
/// (sphere surface measure) x (transverse Lebesgue measure).
double section_measure_weight(double energy, int n);

/// Surface area of the unit sphere S^{n-1}.
double unit_sphere_area(int n);

struct QuadratureConfig {
  int sphere_resolution = 32;   // n=2: angles on S^1; n=3: azimuth nodes (polar uses half)
  int impact_nodes = 96;        // Gauss-Legendre nodes in the impact parameter
  int transverse_angles = 16;   // n=3: trapezoid nodes for the transverse polar angle
  double s_max_margin = 1.05;   // s_max = margin * support radius
};

struct SectionNode {
  SectionPoint z;
  double weight = 0.0;
};

/// Product rule for integrals over the section against the reduced volume.
/// With `fiber_only`, a single direction phat = e_n is used and weighted by
/// |S^{n-1}| (valid for rotation-invariant integrands).
///
/// When `bumps` is given, integrands are assumed to vanish on lines that miss
/// every bump. The impact range is then split at the shadow edges of the
/// bumps and only covered panels receive nodes (n = 2, and the centred case for n = 3).
std::vector<SectionNode> section_quadrature(const Section& section, double s_max, const QuadratureConfig& cfg,
                                            bool fiber_only = false, std::span<const Bump> bumps = {});

}  // namespace hamscat
