#include "hamscat/section.hpp"

#include "hamscat/errors.hpp"
#include "hamscat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hamscat {

Section::Section(int n, double energy, double R) : n_(n), energy_(energy), R_(R) {
  if (n < 2 || n > kMaxDim) throw ConfigurationError("section: dimension must lie in [2, 8]");
  if (!(energy > 0.0) || !std::isfinite(energy)) throw ConfigurationError("section: energy must be positive");
  if (!std::isfinite(R)) throw ConfigurationError("section: R must be finite");
  speed_ = std::sqrt(2.0 * energy);
}

SectionPoint Section::make_point(const Vec& phat, const Vec& qperp) const {
  if (phat.size() != n_ || qperp.size() != n_) throw ConfigurationError("section point: wrong dimension");
  const double norm = phat.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ConfigurationError("section point: direction must be non-zero");
  SectionPoint z;
  z.phat = phat / norm;
  z.qperp = qperp - z.phat.dot(qperp) * z.phat;
  return z;
}

PhasePoint Section::phase_point(const SectionPoint& z) const {
  const Vec p = speed_ * z.phat;
  return PhasePoint{z.qperp + (R_ / (2.0 * energy_)) * p, p};
}

std::pair<SectionPoint, double> Section::project(const PhasePoint& x, double energy_tol) const {
  if (x.dim() != n_) throw ConfigurationError("project: dimension mismatch");
  const double h0 = 0.5 * x.p.squaredNorm();
  if (!(std::abs(h0 - energy_) <= energy_tol * energy_)) {
    throw ConfigurationError("project: |p|^2/2 = " + std::to_string(h0) + " is off the energy shell E = " +
                             std::to_string(energy_));
  }
  const double two_e = 2.0 * energy_;
  const double t = (x.q.dot(x.p) - R_) / two_e;
  const Vec phat = x.p.normalized();
  // Base point of the free line at <q,p> = R, then drop the along-track part.
  const Vec q0 = x.q - t * x.p;
  const Vec qperp = q0 - phat.dot(q0) * phat;
  return {SectionPoint{phat, qperp}, t};
}

Mat householder_to_axis(const Vec& phat) {
  const int n = static_cast<int>(phat.size());
  Mat O = Mat::Identity(n, n);
  const Vec u_dir = phat.normalized();
  // Reflect about the bisector that avoids cancellation, then flip the last
  // axis if needed so the image is +e_n.
  const double sign = u_dir[n - 1] >= 0.0 ? 1.0 : -1.0;
  Vec u = u_dir;
  u[n - 1] += sign;
  const Eigen::VectorXd uu = u;
  O -= (2.0 / uu.squaredNorm()) * uu * uu.transpose();
  if (sign > 0.0) O.row(n - 1) *= -1.0;
  return O;
}

RotatedChart::RotatedChart(const Section& section, SectionPoint base, Mat rotation)
    : section_(section), base_(std::move(base)), O_(std::move(rotation)) {
  const int n = section.dim();
  if (O_.rows() != n || O_.cols() != n) throw ConfigurationError("chart: rotation has wrong shape");
  const Eigen::VectorXd image = O_ * Eigen::VectorXd(base_.phat);
  if ((image - Eigen::VectorXd::Unit(n, n - 1)).norm() > 1e-10) {
    throw ConfigurationError("chart: rotation does not map phat to e_n");
  }
  if ((O_.transpose() * O_ - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10) {
    throw ConfigurationError("chart: rotation is not orthogonal");
  }
}

Vec RotatedChart::coords(const SectionPoint& z) const {
  const int n = section_.dim();
  const PhasePoint x = section_.phase_point(z);
  const Eigen::VectorXd Q = O_ * Eigen::VectorXd(x.q);
  const Eigen::VectorXd P = O_ * Eigen::VectorXd(x.p);
  Vec c(2 * (n - 1));
  for (int i = 0; i < n - 1; ++i) {
    c[i] = Q[i];
    c[n - 1 + i] = P[i];
  }
  return c;
}

bool RotatedChart::in_domain_coords(const Vec& c) const {
  const int n = section_.dim();
  const double two_e = 2.0 * section_.energy();
  const double pperp2 = c.tail(n - 1).squaredNorm();
  // |p - p_base| < sqrt(2E)  <=>  P_n > sqrt(2E)/2.
  return pperp2 < two_e && std::sqrt(two_e - pperp2) > 0.5 * section_.speed();
}

bool RotatedChart::in_domain(const SectionPoint& z) const {
  return (section_.speed() * (z.phat - base_.phat)).norm() < section_.speed();
}

SectionPoint RotatedChart::point(const Vec& c) const {
  const int n = section_.dim();
  if (c.size() != 2 * (n - 1)) throw ConfigurationError("chart: coordinate vector has wrong size");
  const double two_e = 2.0 * section_.energy();
  const Vec qperp_c = c.head(n - 1);
  const Vec pperp_c = c.tail(n - 1);
  const double pn2 = two_e - pperp_c.squaredNorm();
  if (!(pn2 > 0.0)) throw ChartOverflowError("chart overflow: transverse momentum exceeds sqrt(2E)");
  const double pn = std::sqrt(pn2);
  Eigen::VectorXd Q(n), P(n);
  for (int i = 0; i < n - 1; ++i) {
    Q[i] = qperp_c[i];
    P[i] = pperp_c[i];
  }
  P[n - 1] = pn;
  Q[n - 1] = (section_.R() - qperp_c.dot(pperp_c)) / pn;
  const Vec q = O_.transpose() * Q;
  const Vec p = O_.transpose() * P;
  const Vec phat = p / std::sqrt(two_e);
  return section_.make_point(phat, q - (section_.R() / two_e) * p);
}

RotatedChart make_chart(const Section& section, const SectionPoint& z) {
  return RotatedChart(section, z, householder_to_axis(z.phat));
}

RotatedChart make_chart(const Section& section, const SectionPoint& z, const Mat& rotation) {
  return RotatedChart(section, z, rotation);
}

double section_measure_weight(double energy, int n) {
  if (!(energy > 0.0)) throw ConfigurationError("section weight: energy must be positive");
  return std::pow(2.0 * energy, 0.5 * (n - 1));
}

double unit_sphere_area(int n) {
  // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

struct Direction {
  Vec phat;
  double weight;
};

std::vector<Direction> sphere_rule(int n, int resolution, bool fiber_only) {
  std::vector<Direction> dirs;
  if (fiber_only) {
    dirs.push_back({Vec::Unit(n, n - 1), unit_sphere_area(n)});
    return dirs;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  if (n == 2) {
    for (int k = 0; k < resolution; ++k) {
      const double theta = two_pi * k / resolution;
      dirs.push_back({make_vec({std::cos(theta), std::sin(theta)}), two_pi / resolution});
    }
    return dirs;
  }
  // n = 3: Gauss-Legendre in cos(polar) times trapezoid in azimuth.
  const GaussRule& polar = gauss_legendre(std::max(2, resolution / 2));
  for (std::size_t i = 0; i < polar.nodes.size(); ++i) {
    const double c = polar.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int k = 0; k < resolution; ++k) {
      const double az = two_pi * k / resolution;
      dirs.push_back({make_vec({s * std::cos(az), s * std::sin(az), c}), polar.weights[i] * two_pi / resolution});
    }
  }
  return dirs;
}

}  // namespace

namespace {

// Composite Gauss-Legendre on [lo, hi] split at the shadow edges of the bumps.
// Panels outside every shadow are dropped. `offset(b)` is the signed transverse
// position of the bump centre along the impact axis.
template <class Offset>
GaussRule shadow_rule(double lo, double hi, int nodes, std::span<const Bump> bumps, Offset offset) {
  if (bumps.empty()) return gauss_legendre(nodes, lo, hi);
  std::vector<double> cuts{lo, hi};
  for (const auto& b : bumps) {
    for (double edge : {offset(b) - b.radius, offset(b) + b.radius}) {
      if (edge > lo && edge < hi) cuts.push_back(edge);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  GaussRule out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], c = cuts[i + 1];
    if (!(c > a)) continue;
    const double mid = 0.5 * (a + c);
    bool covered = false;
    for (const auto& b : bumps) covered = covered || std::abs(mid - offset(b)) < b.radius;
    if (!covered) continue;
    const int m = std::max(nodes / 4, static_cast<int>(std::ceil(nodes * (c - a) / (hi - lo))));
    const GaussRule panel = gauss_legendre(m, a, c);
    out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return out;
}

}  // namespace

std::vector<SectionNode> section_quadrature(const Section& section, double s_max, const QuadratureConfig& cfg,
                                            bool fiber_only, std::span<const Bump> bumps) {
  const int n = section.dim();
  if (n != 2 && n != 3) throw ConfigurationError("section quadrature supports n = 2 and n = 3 only");
  if (cfg.sphere_resolution < 4) throw ConfigurationError("sphere_resolution must be at least 4");
  if (cfg.impact_nodes < 4) throw ConfigurationError("impact_nodes must be at least 4");
  if (n == 3 && cfg.transverse_angles < 4) throw ConfigurationError("transverse_angles must be at least 4");
  if (!(s_max > 0.0) || !std::isfinite(s_max)) throw ConfigurationError("s_max must be positive");

  const double measure = section_measure_weight(section.energy(), n);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<SectionNode> nodes;
  for (const auto& dir : sphere_rule(n, cfg.sphere_resolution, fiber_only)) {
    if (n == 2) {
      const Vec jp = make_vec({-dir.phat[1], dir.phat[0]});
      const GaussRule sigma =
          shadow_rule(-s_max, s_max, cfg.impact_nodes, bumps, [&](const Bump& b) { return b.center.dot(jp); });
      for (std::size_t i = 0; i < sigma.nodes.size(); ++i) {
        nodes.push_back({section.make_point(dir.phat, sigma.nodes[i] * jp), measure * dir.weight * sigma.weights[i]});
      }
      continue;
    }
    // Transverse plane spanned by the first two rows of the chart rotation.
    const Mat O = householder_to_axis(dir.phat);
    const Vec e1 = O.row(0).transpose();
    const Vec e2 = O.row(1).transpose();
    // A centred bump casts a disc of radius r0 about the origin; otherwise use the full range.
    const bool centred = bumps.size() == 1 && bumps.front().center.norm() == 0.0;
    const double s_hi = centred ? std::min(s_max, bumps.front().radius) : s_max;
    const GaussRule radial = gauss_legendre(cfg.impact_nodes, 0.0, s_hi);
    for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
      const double s = radial.nodes[i];
      for (int k = 0; k < cfg.transverse_angles; ++k) {
        const double psi = two_pi * k / cfg.transverse_angles;
        const Vec qperp = s * (std::cos(psi) * e1 + std::sin(psi) * e2);
        const double w = measure * dir.weight * radial.weights[i] * s * two_pi / cfg.transverse_angles;
        nodes.push_back({section.make_point(dir.phat, qperp), w});
      }
    }
  }
  return nodes;
}

}  // namespace hamscat
