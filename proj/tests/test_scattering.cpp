#include "doctest.h"

#include "hamscat/errors.hpp"
#include "hamscat/scattering.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace hamscat;

namespace {

ScatteringProblem bump_problem(int n, double E = 4.0) {
  const PotentialSpec spec = PotentialSpec::centered_bump(n, 1.0, 1.0);
  const EnergyData ed = validate_assumptions(spec, E, 0.0);
  return make_problem(spec, ed, make_integrator_config(spec, ed));
}

ScatteringProblem two_bump_problem() {
  const PotentialSpec spec(2, {Bump{make_vec({-0.6, 0.0}), 1.0, 0.5}, Bump{make_vec({0.5, 0.3}), 1.0, 0.5}});
  const EnergyData ed = validate_assumptions(spec, 4.0, 0.0);
  return make_problem(spec, ed, make_integrator_config(spec, ed));
}

SectionPoint random_point(const Section& sec, std::mt19937_64& rng, double s_max) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-s_max, s_max);
  const int n = sec.dim();
  Vec phat(n), q(n);
  for (int i = 0; i < n; ++i) phat[i] = g(rng);
  for (int i = 0; i < n; ++i) q[i] = u(rng);
  return sec.make_point(phat, q);
}

Mat omega(int m) {
  Mat w = Mat::Zero(2 * m, 2 * m);
  w.block(0, m, m, m) = Mat::Identity(m, m);
  w.block(m, 0, m, m) = -Mat::Identity(m, m);
  return w;
}

}  // namespace

TEST_CASE("without a potential the section map is the identity with zero delay") {
  const PotentialSpec spec = PotentialSpec::zero(2);
  const EnergyData ed = validate_assumptions(spec, 1.0, 0.0);
  const ScatteringProblem prob = make_problem(spec, ed, make_integrator_config(spec, ed));
  const SectionPoint z = prob.section.make_point(make_vec({0.3, 1.0}), make_vec({0.5, 0.1}));
  const ScatterRecord r = scattering_map(prob, z);
  CHECK(r.tau == 0.0);
  CHECK(r.delta == 0.0);
  CHECK((r.z_out.phat - z.phat).norm() == 0.0);
  CHECK((r.z_out.qperp - z.qperp).norm() == 0.0);
}

TEST_CASE("lines missing the support are not deflected") {
  const ScatteringProblem prob = bump_problem(2);
  const SectionPoint z = prob.section.make_point(make_vec({1.0, 0.0}), make_vec({0.0, 1.2}));
  const ScatterRecord r = scattering_map(prob, z);
  CHECK(r.missed);
  CHECK(r.tau == 0.0);
  CHECK((r.z_out.qperp - z.qperp).norm() == 0.0);
}

TEST_CASE("time delay from the projection matches the closed form") {
  const ScatteringProblem prob = two_bump_problem();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const SectionPoint z = random_point(prob.section, rng, 1.1);
    const ScatterRecord r = scattering_map(prob, z);
    CHECK(std::abs(r.tau - r.tau_closed_form) < 1e-8);
    CHECK(r.energy_drift < 1e-8);
    const PhasePoint w = wave_minus(prob, z);
    CHECK(hamiltonian(prob.spec, w) == doctest::Approx(4.0).epsilon(1e-5));
  }
}

TEST_CASE("a centred bump conserves the impact parameter") {
  for (int n : {2, 3}) {
    const ScatteringProblem prob = bump_problem(n);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
      const SectionPoint z = random_point(prob.section, rng, 0.7);
      const ScatterRecord r = scattering_map(prob, z);
      CHECK(r.z_out.impact() == doctest::Approx(z.impact()).epsilon(1e-9));
    }
  }
}

TEST_CASE("section map Jacobian is symplectic with unit determinant") {
  for (int n : {2, 3}) {
    const ScatteringProblem prob = n == 2 ? two_bump_problem() : bump_problem(3);
    std::mt19937_64 rng(5);
    const Mat w = omega(n - 1);
    for (int i = 0; i < 8; ++i) {
      const SectionPoint z = random_point(prob.section, rng, 0.9);
      const ChartJacobian j = chart_jacobian(prob, z);
      CHECK((j.J.transpose() * w * j.J - w).cwiseAbs().maxCoeff() < 1e-4);
      CHECK(std::abs(j.J.determinant() - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("rho does not depend on the transverse frame of either chart") {
  const ScatteringProblem prob = bump_problem(3);
  const SectionPoint z = prob.section.make_point(make_vec({0.3, -0.2, 0.9}), make_vec({0.4, 0.3, 0.0}));
  const ChartJacobian ref = chart_jacobian(prob, z);
  auto spun = [](const Vec& phat, double angle) {
    Mat R = Mat::Identity(3, 3);
    R(0, 0) = R(1, 1) = std::cos(angle);
    R(0, 1) = -std::sin(angle);
    R(1, 0) = std::sin(angle);
    return Mat(R * householder_to_axis(phat));
  };
  const ChartJacobian other = chart_jacobian(prob, z, 1e-4, spun(z.phat, 0.7), spun(ref.z_out.phat, -1.9));
  CHECK(other.rho == doctest::Approx(ref.rho).epsilon(1e-6));
}

TEST_CASE("deflection angle by quadrature agrees with the trajectory") {
  const ScatteringProblem prob = bump_problem(2);
  for (double s : {0.01, 0.3, 0.6, 0.95}) {
    CHECK(std::abs(deflection_quadrature(prob.spec, 4.0, s) - deflection_trajectory(prob, s)) < 1e-6);
  }
  CHECK(deflection_quadrature(prob.spec, 4.0, 1.2) == 0.0);
  CHECK(deflection_quadrature(PotentialSpec::zero(2), 4.0, 0.5) == 0.0);
}

TEST_CASE("turning point is the outermost root") {
  const PotentialSpec spec = PotentialSpec::centered_bump(2, 1.0, 1.0);
  for (double s : {0.05, 0.4, 0.9}) {
    const double r = turning_point(spec, 4.0, s);
    auto f = [&](double x) { return 1.0 - spec.radial_value(x) / 4.0 - s * s / (x * x); };
    CHECK(std::abs(f(r)) < 1e-12);
    for (int k = 1; k <= 50; ++k) CHECK(f(r + k * (1.0 - r) / 50.0) > 0.0);
  }
}

TEST_CASE("unwrapping removes 2 pi jumps") {
  std::vector<double> phi{3.0, -3.1, -2.9, 3.0};
  unwrap_angles(phi);
  CHECK(phi[1] == doctest::Approx(-3.1 + 2 * std::numbers::pi));
  CHECK(phi[2] == doctest::Approx(-2.9 + 2 * std::numbers::pi));
  CHECK(phi[3] == doctest::Approx(3.0));
}

TEST_CASE("below the barrier the outgoing direction winds once") {
  const PotentialSpec spec = PotentialSpec::centered_bump(2, 1.0, 1.0);
  AssumptionConfig cfg;
  cfg.winding_mode = true;
  const EnergyData ed = validate_assumptions(spec, 0.5, 0.0, cfg);
  const ScatteringProblem prob = make_problem(spec, ed, make_integrator_config(spec, ed));
  std::vector<double> sigma;
  for (int i = 0; i <= 84; ++i) sigma.push_back(-1.05 + 2.1 * i / 84.0);
  const WindingProfile prof = winding_profile(prob, sigma);
  CHECK(std::abs(prof.phi.front()) < 1e-12);
  CHECK(std::abs(prof.phi.back() - 2 * std::numbers::pi) < 1e-12);
  CHECK(prof.winding_number == doctest::Approx(1.0));
  for (std::size_t i = 1; i < prof.phi.size(); ++i) CHECK(prof.phi[i] >= prof.phi[i - 1] - 1e-9);
}

TEST_CASE("sojourn difference is independent of the ball once it encloses the transit") {
  const ScatteringProblem prob = bump_problem(3);
  const SectionPoint z = prob.section.make_point(make_vec({0.0, 0.0, 1.0}), make_vec({0.3, 0.2, 0.0}));
  const std::vector<double> radii{1.1, 1.5, 3.0, 10.0};
  const SojournResult s = sojourn_difference(prob, z, radii);
  REQUIRE(s.threshold <= 1.1);
  for (double v : s.values) CHECK(v == doctest::Approx(s.values.front()).epsilon(1e-9));
  // For a centred bump the stabilised value is the time delay.
  CHECK(s.values.front() == doctest::Approx(scattering_map(prob, z).tau).epsilon(1e-6));
}

TEST_CASE("radial-only helpers reject other potentials") {
  const ScatteringProblem prob = two_bump_problem();
  CHECK_THROWS_AS(deflection_trajectory(prob, 0.2), ConfigurationError);
  CHECK_THROWS_AS(deflection_quadrature(prob.spec, 4.0, 0.2), ConfigurationError);
}
