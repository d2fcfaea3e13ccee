#include "hamscat/functionals.hpp"

#include "hamscat/errors.hpp"
#include "hamscat/parallel.hpp"
#include "hamscat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace hamscat {

namespace {

constexpr std::uint64_t kMonteCarloBlock = 1u << 16;

// Relative-residual floor; every functional vanishes identically at v = 0.
double value_floor(int n, double energy) { return 1e-12 * std::pow(2.0 * energy, 0.5 * n); }

// int g(v(q)) d^n q over the supports. Centred bump: 1-D rule in r with
// `nodes` points. Otherwise composite Gauss-Legendre on the bounding box with
// `panels` panels of 12 nodes per axis.
double volume_integral(const PotentialSpec& spec, const std::function<double(double)>& g, int nodes, int panels) {
  const int n = spec.dim();
  if (spec.empty()) return 0.0;
  if (spec.is_radial()) {
    const double r0 = spec.bumps().front().radius;
    const GaussRule rule = gauss_legendre(nodes, 0.0, r0);
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double r = rule.nodes[i];
      terms[i] = rule.weights[i] * std::pow(r, n - 1) * g(spec.radial_value(r));
    }
    return unit_sphere_area(n) * pairwise_sum(terms);
  }
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  for (const auto& b : spec.bumps()) {
    lo = lo.cwiseMin(Vec(b.center.array() - b.radius));
    hi = hi.cwiseMax(Vec(b.center.array() + b.radius));
  }
  std::vector<std::vector<double>> x(n), w(n);
  for (int k = 0; k < n; ++k) {
    const double width = (hi[k] - lo[k]) / panels;
    for (int p = 0; p < panels; ++p) {
      const GaussRule rule = gauss_legendre(12, lo[k] + p * width, lo[k] + (p + 1) * width);
      x[k].insert(x[k].end(), rule.nodes.begin(), rule.nodes.end());
      w[k].insert(w[k].end(), rule.weights.begin(), rule.weights.end());
    }
  }
  // Parallel over the first axis, each slice summed in a fixed order.
  const std::size_t m = x[0].size();
  const auto slices = parallel_map<double>(m, [&](std::size_t i0) {
    std::vector<std::size_t> idx(n, 0);
    Vec q(n);
    std::vector<double> terms;
    for (;;) {
      q[0] = x[0][i0];
      double weight = w[0][i0];
      for (int k = 1; k < n; ++k) {
        q[k] = x[k][idx[k]];
        weight *= w[k][idx[k]];
      }
      terms.push_back(weight * g(spec.value(q)));
      int k = 1;
      while (k < n && ++idx[k] == x[k].size()) idx[k++] = 0;
      if (k == n) break;
    }
    return pairwise_sum(terms);
  });
  return pairwise_sum(slices);
}

double xi_integrand(double v, double energy, double exponent) {
  const double base = 1.0 - v / energy;
  if (base <= 0.0) return 1.0;
  return 1.0 - std::pow(base, exponent);
}

struct XiRule {
  int nodes;
  int panels;
};

double xi_value(const PotentialSpec& spec, double energy, XiRule rule) {
  const int n = spec.dim();
  const double integral =
      volume_integral(spec, [&](double v) { return xi_integrand(v, energy, 0.5 * n); }, rule.nodes, rule.panels);
  return unit_ball_volume(n) * std::pow(2.0 * energy, 0.5 * n) * integral;
}

constexpr XiRule kXiFine{256, 16};
constexpr XiRule kXiCoarse{128, 8};

void check_energy(double energy) {
  if (!(energy > 0.0) || !std::isfinite(energy)) throw ConfigurationError("energy must be positive and finite");
}

// --- section integrals --------------------------------------------------------

struct NodeValue {
  double value = 0.0;
  double energy_drift = 0.0;
  double energy_residual = 0.0;
  double tau_residual = 0.0;
};

using NodeFunction = std::function<NodeValue(const ScatteringProblem&, const SectionPoint&)>;

struct SectionSum {
  double value = 0.0;
  std::size_t nodes = 0;
  double drift = 0.0;
  double residual = 0.0;
  double tau_residual = 0.0;
};

bool fiber_mode(const ScatteringProblem& problem, const FunctionalConfig& cfg) {
  return cfg.use_symmetry && problem.spec.is_radial();
}

SectionSum section_sum(const ScatteringProblem& problem, const QuadratureConfig& quad, bool fiber,
                       const NodeFunction& f) {
  SectionSum out;
  if (problem.spec.empty()) return out;
  const double s_max = quad.s_max_margin * problem.spec.support_radius();
  const auto nodes = section_quadrature(problem.section, s_max, quad, fiber, problem.spec.bumps());
  const auto values = parallel_map<NodeValue>(nodes.size(), [&](std::size_t i) { return f(problem, nodes[i].z); });
  std::vector<double> terms(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    terms[i] = nodes[i].weight * values[i].value;
    out.drift = std::max(out.drift, values[i].energy_drift);
    out.residual = std::max(out.residual, values[i].energy_residual);
    out.tau_residual = std::max(out.tau_residual, values[i].tau_residual);
  }
  out.value = pairwise_sum(terms);
  out.nodes = nodes.size();
  return out;
}

QuadratureConfig halved(const QuadratureConfig& q) {
  QuadratureConfig c = q;
  c.sphere_resolution = std::max(4, q.sphere_resolution / 2);
  c.impact_nodes = std::max(4, q.impact_nodes / 2);
  c.transverse_angles = std::max(4, q.transverse_angles / 2);
  return c;
}

// Value on the configured rule, with error |Q - Q_coarse| + |Q(h) - Q(2h)| + floor.
Estimate integrate_section(const ScatteringProblem& problem, const FunctionalConfig& cfg, const NodeFunction& f,
                           double scale, const std::string& method) {
  const bool fiber = fiber_mode(problem, cfg);
  const SectionSum fine = section_sum(problem, cfg.quadrature, fiber, f);
  const SectionSum coarse = section_sum(problem, halved(cfg.quadrature), fiber, f);
  const SectionSum doubled = section_sum(with_step_scaled(problem, 2.0), cfg.quadrature, fiber, f);
  Estimate e;
  e.method = method;
  e.value = scale * fine.value;
  e.error = std::abs(scale) * (std::abs(fine.value - coarse.value) + std::abs(fine.value - doubled.value)) +
            value_floor(problem.section.dim(), problem.section.energy());
  e.evaluations = fine.nodes;
  e.max_energy_drift = std::max({fine.drift, coarse.drift, doubled.drift});
  e.max_energy_residual = std::max({fine.residual, coarse.residual, doubled.residual});
  e.max_tau_residual = std::max({fine.tau_residual, coarse.tau_residual, doubled.tau_residual});
  return e;
}

NodeValue from_record(const ScatterRecord& r, double value) {
  return NodeValue{value, r.energy_drift, r.energy_residual, r.tau_residual};
}

}  // namespace

double unit_ball_volume(int n) { return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(1.0 + 0.5 * n); }

XiEstimate xi_radial_quadrature(const PotentialSpec& spec, double energy) {
  check_energy(energy);
  Estimate e;
  e.method = "radial_quadrature";
  e.value = xi_value(spec, energy, kXiFine);
  e.error = std::abs(e.value - xi_value(spec, energy, kXiCoarse)) + value_floor(spec.dim(), energy);
  e.evaluations = spec.is_radial() ? kXiFine.nodes
                                   : static_cast<std::size_t>(std::pow(12.0 * kXiFine.panels, spec.dim()));
  return e;
}

XiEstimate xi_montecarlo(const PotentialSpec& spec, double energy, std::uint64_t samples, std::uint64_t seed) {
  check_energy(energy);
  if (samples == 0) throw ConfigurationError("Monte Carlo needs at least one sample");
  Estimate e;
  e.method = "montecarlo";
  e.evaluations = samples;
  if (spec.empty()) return e;

  const int n = spec.dim();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  double vmax = 0.0;
  for (const auto& b : spec.bumps()) {
    lo = lo.cwiseMin(Vec(b.center.array() - b.radius));
    hi = hi.cwiseMax(Vec(b.center.array() + b.radius));
    vmax += std::abs(b.amplitude);
  }
  const double pmax = std::sqrt(2.0 * (energy + vmax));
  double volume = std::pow(2.0 * pmax, n);
  for (int k = 0; k < n; ++k) volume *= hi[k] - lo[k];

  // Each block owns a generator seeded from (seed, block index), so the counts
  // do not depend on how blocks are distributed over workers.
  const std::uint64_t blocks = (samples + kMonteCarloBlock - 1) / kMonteCarloBlock;
  struct Counts {
    std::int64_t plus = 0;
    std::int64_t minus = 0;
  };
  const auto counts = parallel_map<Counts>(blocks, [&](std::size_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::uint64_t begin = block * kMonteCarloBlock;
    const std::uint64_t end = std::min(samples, begin + kMonteCarloBlock);
    Counts c;
    Vec q(n);
    for (std::uint64_t i = begin; i < end; ++i) {
      double h0 = 0.0;
      for (int k = 0; k < n; ++k) q[k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
      for (int k = 0; k < n; ++k) {
        const double p = pmax * (2.0 * unit(rng) - 1.0);
        h0 += 0.5 * p * p;
      }
      const bool in_free = h0 <= energy;
      const bool in_full = h0 + spec.value(q) <= energy;
      if (in_free && !in_full) ++c.plus;
      if (in_full && !in_free) ++c.minus;
    }
    return c;
  });
  std::int64_t plus = 0, minus = 0;
  for (const auto& c : counts) {
    plus += c.plus;
    minus += c.minus;
  }
  const double N = static_cast<double>(samples);
  const double mean = static_cast<double>(plus - minus) / N;
  const double second = static_cast<double>(plus + minus) / N;
  e.value = volume * mean;
  e.error = samples > 1 ? volume * std::sqrt(std::max(0.0, second - mean * mean) / (N - 1.0)) : volume;
  return e;
}

XiDerivative dxi_dE(const PotentialSpec& spec, double energy, double relative_step) {
  check_energy(energy);
  if (!(relative_step > 0.0) || relative_step >= 0.5) throw ConfigurationError("dxi/dE: relative step must lie in (0, 0.5)");
  const int n = spec.dim();
  XiDerivative d;
  d.delta_e = relative_step * energy;
  auto central = [&](double h) {
    return (xi_value(spec, energy + h, kXiFine) - xi_value(spec, energy - h, kXiFine)) / (2.0 * h);
  };
  d.central_difference = central(d.delta_e);
  const double quad_noise = xi_radial_quadrature(spec, energy).error / d.delta_e;
  d.error = std::abs(d.central_difference - central(2.0 * d.delta_e)) + quad_noise;

  const double exponent = 0.5 * (n - 2);
  const double integral = volume_integral(
      spec, [&](double v) { return exponent == 0.0 ? (v < energy ? 0.0 : 1.0) : xi_integrand(v, energy, exponent); },
      kXiFine.nodes, kXiFine.panels);
  d.analytic = n * unit_ball_volume(n) * std::pow(2.0 * energy, 0.5 * (n - 2)) * integral;
  return d;
}

double time_delay_display_n3(const PotentialSpec& spec, double energy) {
  check_energy(energy);
  if (spec.dim() != 3) throw ConfigurationError("the n = 3 display needs a three-dimensional potential");
  const double integral = volume_integral(
      spec, [&](double v) { return xi_integrand(v, energy, 0.5); }, kXiFine.nodes, kXiFine.panels);
  return 6.0 * std::numbers::pi * std::sqrt(2.0 * energy) * integral;
}

Estimate total_time_delay(const ScatteringProblem& problem, const FunctionalConfig& cfg) {
  return integrate_section(
      problem, cfg,
      [](const ScatteringProblem& p, const SectionPoint& z) {
        const ScatterRecord r = scattering_map(p, z);
        return from_record(r, r.tau);
      },
      1.0, "section_quadrature");
}

Estimate sojourn_integral(const ScatteringProblem& problem, const FunctionalConfig& cfg, double radius) {
  const double radii[1] = {radius};
  return integrate_section(
      problem, cfg,
      [&](const ScatteringProblem& p, const SectionPoint& z) {
        const SojournResult s = sojourn_difference(p, z, radii);
        return NodeValue{s.values[0], 0.0, 0.0, 0.0};
      },
      1.0, "sojourn");
}

CalabiEstimate calabi_delta(const ScatteringProblem& problem, const FunctionalConfig& cfg) {
  const int n = problem.section.dim();
  return integrate_section(
      problem, cfg,
      [](const ScatteringProblem& p, const SectionPoint& z) {
        const ScatterRecord r = scattering_map(p, z);
        return from_record(r, r.delta);
      },
      1.0 / n, "delta");
}

CalabiEstimate calabi_rho(const ScatteringProblem& problem, const FunctionalConfig& cfg) {
  const int n = problem.section.dim();
  const double step = cfg.fd_step;
  return integrate_section(
      problem, cfg,
      [step](const ScatteringProblem& p, const SectionPoint& z) {
        const ScatterRecord r = scattering_map(p, z);
        if (r.missed) return NodeValue{};
        const ChartJacobian j = chart_jacobian(p, z, step);
        return NodeValue{j.rho, j.energy_drift, j.energy_residual, 0.0};
      },
      1.0 / (n * (n - 1)), "rho");
}

CalabiEstimate calabi_radial(const PotentialSpec& spec, double energy, int nodes) {
  check_energy(energy);
  const int n = spec.dim();
  Estimate e;
  e.method = "radial";
  e.evaluations = static_cast<std::size_t>(nodes);
  if (spec.empty()) return e;
  if (!spec.is_radial()) throw ConfigurationError("the radial Calabi route requires a single centred bump");
  const double r0 = spec.bumps().front().radius;
  const double prefactor = n * unit_ball_volume(n) * unit_ball_volume(n - 1) * std::pow(2.0 * energy, 0.5 * n);
  auto integral = [&](int m) {
    const GaussRule rule = gauss_legendre(m, 0.0, r0);
    const auto terms = parallel_map<double>(rule.nodes.size(), [&](std::size_t i) {
      const double s = rule.nodes[i];
      return rule.weights[i] * std::pow(s, n - 1) * deflection_quadrature(spec, energy, s);
    });
    return pairwise_sum(terms);
  };
  const double fine = integral(nodes);
  e.value = prefactor * fine;
  e.error = prefactor * std::abs(fine - integral(std::max(4, nodes / 2))) + value_floor(n, energy);
  return e;
}

CalabiEstimate calabi_isotopy(const ScatteringProblem& problem, const FunctionalConfig& cfg) {
  if (cfg.isotopy_nodes < 2) throw ConfigurationError("isotopy_nodes must be at least 2");
  auto a_s = [](double s) {
    // a_s = int v dt along the s v trajectory = (int s v dt) / s.
    return [s](const ScatteringProblem& p, const SectionPoint& z) {
      const OutgoingTransit t = outgoing_transit(p, z);
      if (t.missed) return NodeValue{};
      return NodeValue{t.exit.tally.potential_action / s, t.exit.tally.energy_drift / p.section.energy(),
                       t.exit.tally.energy_residual / p.section.energy(), 0.0};
    };
  };
  auto layer = [&](double s) {
    ScatteringProblem scaled = problem;
    scaled.spec = problem.spec.scaled(s);
    return integrate_section(scaled, cfg, a_s(s), 1.0, "isotopy");
  };
  auto s_integral = [&](int m, Estimate& acc) {
    const GaussRule rule = gauss_legendre(m, 0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const Estimate l = layer(rule.nodes[i]);
      total += rule.weights[i] * l.value;
      acc.error += rule.weights[i] * l.error;
      acc.evaluations += l.evaluations;
      acc.max_energy_drift = std::max(acc.max_energy_drift, l.max_energy_drift);
      acc.max_energy_residual = std::max(acc.max_energy_residual, l.max_energy_residual);
    }
    return total;
  };
  Estimate e;
  e.method = "isotopy";
  if (problem.spec.empty()) return e;
  e.value = s_integral(cfg.isotopy_nodes, e);
  Estimate coarse_acc;
  const double coarse = s_integral(std::max(2, cfg.isotopy_nodes / 2), coarse_acc);
  e.error += std::abs(e.value - coarse);
  return e;
}

}  // namespace hamscat
