#include "hamscat/commands.hpp"

#include "hamscat/errors.hpp"
#include "hamscat/parallel.hpp"
#include "hamscat/scattering.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hamscat {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Setup {
  PotentialSpec spec;
  ScatteringProblem problem;
};

Setup make_setup(const RunConfig& cfg) {
  const PotentialSpec spec = cfg.potential();
  const EnergyData ed = validate_assumptions(spec, cfg.energy, cfg.section_R, cfg.assumptions);
  double scale = cfg.step_scale;
  if (cfg.step > 0.0) {
    const double default_step = 1e-3 * spec.length_scale() / std::sqrt(2.0 * cfg.energy);
    scale = cfg.step / default_step;
  }
  return Setup{spec, make_problem(spec, ed, make_integrator_config(spec, ed, scale, cfg.energy_tol))};
}

void reject_winding(const RunConfig& cfg, const char* command) {
  if (cfg.assumptions.winding_mode) {
    throw ConfigurationError(std::string(command) + " is not defined in winding mode (use scatter or verify)",
                             "winding_mode_unsupported");
  }
}

json number(double x) {
  // Non-finite values have no JSON spelling; null keeps the payload parseable.
  return std::isfinite(x) ? json(x) : json(nullptr);
}

json estimate_json(const Estimate& e, const std::string& hash) {
  return json{{"method", e.method},
              {"value", number(e.value)},
              {"error", number(e.error)},
              {"evaluations", e.evaluations},
              {"max_energy_drift", number(e.max_energy_drift)},
              {"max_energy_residual", number(e.max_energy_residual)},
              {"max_tau_residual", number(e.max_tau_residual)},
              {"config_hash", hash}};
}

json dxi_json(const XiDerivative& d, const std::string& hash) {
  return json{{"method", "central_difference"},
              {"value", number(d.central_difference)},
              {"error", number(d.error)},
              {"analytic", number(d.analytic)},
              {"delta_e", number(d.delta_e)},
              {"config_hash", hash}};
}

std::vector<double> winding_grid(const RunConfig& cfg, const PotentialSpec& spec) {
  const double s_max = cfg.functionals.quadrature.s_max_margin * std::max(spec.support_radius(), spec.length_scale());
  std::vector<double> grid(cfg.winding_samples);
  for (int i = 0; i < cfg.winding_samples; ++i) grid[i] = -s_max + 2.0 * s_max * i / (cfg.winding_samples - 1);
  return grid;
}

bool route_available(const std::string& route, const PotentialSpec& spec) {
  return route != "radial" || spec.is_radial();
}

CalabiEstimate run_route(const std::string& route, const Setup& s, const RunConfig& cfg) {
  if (route == "delta") return calabi_delta(s.problem, cfg.functionals);
  if (route == "rho") return calabi_rho(s.problem, cfg.functionals);
  if (route == "radial") return calabi_radial(s.spec, cfg.energy, cfg.functionals.radial_nodes);
  return calabi_isotopy(s.problem, cfg.functionals);
}

double support_area(const PotentialSpec& spec) {
  double area = 0.0;
  for (const auto& b : spec.bumps()) area += std::numbers::pi * b.radius * b.radius;
  return area;
}

Check make_check(std::string name, double value, double tolerance) {
  return Check{std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance};
}

json provenance(const RunConfig& cfg, const std::string& command, double wall_seconds) {
  return json{{"config_hash", config_hash(cfg)},
              {"command", command},
              {"version", kVersion},
              {"compiler", __VERSION__},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"boost", BOOST_LIB_VERSION},
              {"threads", worker_count()},
              {"wall_time_seconds", wall_seconds}};
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + file.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& file, json payload, json prov) {
  payload["provenance"] = std::move(prov);
  write_text(file, payload.dump(2) + "\n");
}

}  // namespace

std::vector<std::string> scatter_columns(int n) {
  std::vector<std::string> cols{"node", "weight"};
  auto vec = [&](const std::string& stem) {
    for (int i = 1; i <= n; ++i) cols.push_back(stem + "_" + std::to_string(i));
  };
  vec("phat");
  vec("qperp");
  cols.push_back("impact");
  vec("out_phat");
  vec("out_qperp");
  for (const char* c : {"tau", "tau_residual", "delta", "phi", "energy_residual", "energy_drift"}) cols.push_back(c);
  return cols;
}

std::vector<std::string> winding_columns() { return {"sigma", "phi"}; }

ScatterTable cmd_scatter(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  ScatterTable table;
  if (cfg.assumptions.winding_mode) {
    const auto grid = winding_grid(cfg, s.spec);
    const WindingProfile prof = winding_profile(s.problem, grid);
    table.columns = winding_columns();
    for (std::size_t i = 0; i < prof.sigma.size(); ++i) table.rows.push_back({prof.sigma[i], prof.phi[i]});
    return table;
  }
  const int n = cfg.dimension;
  table.columns = scatter_columns(n);
  const auto& quad = cfg.functionals.quadrature;
  const double s_max = quad.s_max_margin * (s.spec.empty() ? s.spec.length_scale() : s.spec.support_radius());
  const auto nodes = section_quadrature(s.problem.section, s_max, quad, false, s.spec.bumps());
  const bool radial = s.spec.is_radial();
  const auto records =
      parallel_map<ScatterRecord>(nodes.size(), [&](std::size_t i) { return scattering_map(s.problem, nodes[i].z); });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const ScatterRecord& r = records[i];
    std::vector<double> row{static_cast<double>(i), nodes[i].weight};
    for (int k = 0; k < n; ++k) row.push_back(r.z_in.phat[k]);
    for (int k = 0; k < n; ++k) row.push_back(r.z_in.qperp[k]);
    row.push_back(r.z_in.impact());
    for (int k = 0; k < n; ++k) row.push_back(r.z_out.phat[k]);
    for (int k = 0; k < n; ++k) row.push_back(r.z_out.qperp[k]);
    double phi = std::numeric_limits<double>::quiet_NaN();
    if (radial) {
      // Signed angle from p- to p+, positive towards the side of the offset.
      const double b = r.z_in.impact();
      const double along = r.z_out.phat.dot(r.z_in.phat);
      const double across = b > 0.0 ? r.z_out.phat.dot(r.z_in.qperp) / b : 0.0;
      phi = std::atan2(across, along);
    }
    for (double v : {r.tau, r.tau_residual, r.delta, phi, r.energy_residual, r.energy_drift}) row.push_back(v);
    table.rows.push_back(std::move(row));
  }
  return table;
}

json cmd_xi(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  const std::string hash = config_hash(cfg);
  json results = json::array();
  results.push_back(estimate_json(xi_radial_quadrature(s.spec, cfg.energy), hash));
  results.push_back(estimate_json(xi_montecarlo(s.spec, cfg.energy, cfg.mc_samples, cfg.mc_seed), hash));
  return json{{"config_hash", hash}, {"results", results}};
}

json cmd_timedelay(const RunConfig& cfg) {
  reject_winding(cfg, "timedelay");
  const Setup s = make_setup(cfg);
  const std::string hash = config_hash(cfg);
  json results = json::array();
  results.push_back(estimate_json(total_time_delay(s.problem, cfg.functionals), hash));
  const double radius = cfg.sojourn_radius_factor * s.problem.entry_radius();
  json sojourn = estimate_json(sojourn_integral(s.problem, cfg.functionals, radius), hash);
  sojourn["radius"] = radius;
  results.push_back(sojourn);
  const XiDerivative d = dxi_dE(s.spec, cfg.energy, cfg.dxi_relative_step);
  json out{{"config_hash", hash}, {"results", results}, {"dxi_dE", dxi_json(d, hash)}};
  if (cfg.dimension == 3) out["display_n3"] = number(time_delay_display_n3(s.spec, cfg.energy));
  return out;
}

json cmd_calabi(const RunConfig& cfg) {
  reject_winding(cfg, "calabi");
  const Setup s = make_setup(cfg);
  const std::string hash = config_hash(cfg);
  json results = json::array();
  json skipped = json::array();
  for (const auto& route : cfg.calabi_routes) {
    if (!route_available(route, s.spec)) {
      skipped.push_back(route);
      continue;
    }
    results.push_back(estimate_json(run_route(route, s, cfg), hash));
  }
  return json{{"config_hash", hash}, {"results", results}, {"skipped_routes", skipped}};
}

VerificationReport cmd_verify(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  VerificationReport rep;
  rep.config_hash = config_hash(cfg);
  const Tolerances& tol = cfg.tolerances;

  if (cfg.assumptions.winding_mode) {
    rep.winding_mode = true;
    const auto grid = winding_grid(cfg, s.spec);
    const WindingProfile prof = winding_profile(s.problem, grid);
    rep.winding_number = prof.winding_number;
    rep.checks.push_back(make_check("winding_start", std::abs(prof.phi.front()), tol.winding_endpoint));
    rep.checks.push_back(
        make_check("winding_end", std::abs(prof.phi.back() - 2.0 * std::numbers::pi), tol.winding_endpoint));
    rep.checks.push_back(make_check("winding_number", std::abs(std::round(prof.winding_number) - 1.0), 0.0));
    rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.pass; });
    return rep;
  }

  const int n = cfg.dimension;
  const double E = cfg.energy;
  rep.xi_quadrature = xi_radial_quadrature(s.spec, E);
  rep.xi_montecarlo = xi_montecarlo(s.spec, E, cfg.mc_samples, cfg.mc_seed);
  rep.time_delay = total_time_delay(s.problem, cfg.functionals);
  rep.dxi = dxi_dE(s.spec, E, cfg.dxi_relative_step);
  for (const auto& route : cfg.calabi_routes) {
    if (route_available(route, s.spec)) rep.calabi.push_back(run_route(route, s, cfg));
  }

  const double xi = rep.xi_quadrature.value;
  const double xi_scale = std::max(std::abs(xi), 1e-9 * std::pow(2.0 * E, 0.5 * n));
  rep.max_energy_drift = rep.time_delay.max_energy_drift;
  for (const auto& c : rep.calabi) {
    rep.max_energy_drift = std::max(rep.max_energy_drift, c.max_energy_drift);
    rep.checks.push_back(make_check("e1_" + c.method, std::abs(c.value - xi) / xi_scale, tol.e1));
  }
  if (!rep.calabi.empty()) {
    const auto best = std::min_element(rep.calabi.begin(), rep.calabi.end(),
                                       [](const Estimate& a, const Estimate& b) { return a.error < b.error; });
    rep.best_route = best->method;
    rep.residual_e1 = best->value - xi;
    rep.residual_e1_error = best->error + rep.xi_quadrature.error;
  }

  rep.residual_e4a = rep.time_delay.value + rep.dxi.central_difference;
  rep.residual_e4a_error = rep.time_delay.error + rep.dxi.error;
  if (n == 2) {
    rep.checks.push_back(make_check("e4a", std::abs(rep.time_delay.value),
                                    tol.e4a_n2 * std::sqrt(2.0 * E) * support_area(s.spec)));
  } else {
    const double scale = std::max(std::abs(rep.dxi.central_difference), 1e-9 * std::pow(2.0 * E, 0.5 * n) / E);
    rep.checks.push_back(make_check("e4a", std::abs(rep.residual_e4a) / scale, tol.e4a));
  }
  rep.checks.push_back(make_check("xi_montecarlo", std::abs(rep.xi_montecarlo.value - xi),
                                  tol.montecarlo_sigmas * rep.xi_montecarlo.error + rep.xi_quadrature.error));
  rep.checks.push_back(make_check("energy_drift", rep.max_energy_drift, tol.energy_drift));
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.pass; });
  return rep;
}

json report_to_json(const VerificationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"value", number(c.value)}, {"tolerance", number(c.tolerance)}, {"pass", c.pass}});
  }
  json out{{"config_hash", r.config_hash}, {"checks", checks}, {"pass", r.pass}};
  if (r.winding_mode) {
    out["winding_number"] = number(r.winding_number);
    return out;
  }
  json calabi = json::array();
  for (const auto& c : r.calabi) calabi.push_back(estimate_json(c, r.config_hash));
  out["xi"] = {estimate_json(r.xi_quadrature, r.config_hash), estimate_json(r.xi_montecarlo, r.config_hash)};
  out["time_delay"] = estimate_json(r.time_delay, r.config_hash);
  out["dxi_dE"] = dxi_json(r.dxi, r.config_hash);
  out["calabi"] = calabi;
  out["residual_e1"] = {{"value", number(r.residual_e1)}, {"error", number(r.residual_e1_error)}, {"route", r.best_route}};
  out["residual_e4a"] = {{"value", number(r.residual_e4a)}, {"error", number(r.residual_e4a_error)}};
  out["max_energy_drift"] = number(r.max_energy_drift);
  return out;
}

std::string report_to_text(const VerificationReport& r) {
  std::ostringstream os;
  auto line = [&](const char* label, double v, double e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-24s %.12g +/- %.3g\n", label, v, e);
    os << buf;
  };
  os << "hamscat verification report\n";
  os << "config hash: " << r.config_hash << "\n\n";
  if (r.winding_mode) {
    os << "winding number: " << r.winding_number << "\n";
  } else {
    line("xi (quadrature)", r.xi_quadrature.value, r.xi_quadrature.error);
    line("xi (Monte Carlo)", r.xi_montecarlo.value, r.xi_montecarlo.error);
    line("T_E", r.time_delay.value, r.time_delay.error);
    line("dxi/dE", r.dxi.central_difference, r.dxi.error);
    for (const auto& c : r.calabi) line(("CAL " + c.method).c_str(), c.value, c.error);
    line(("residual e1 (" + r.best_route + ")").c_str(), r.residual_e1, r.residual_e1_error);
    line("residual e4a", r.residual_e4a, r.residual_e4a_error);
  }
  os << "\nchecks:\n";
  for (const auto& c : r.checks) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-4s %-20s %.6g (tolerance %.6g)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                  c.value, c.tolerance);
    os << buf;
  }
  os << "\nresult: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const ScatterTable& table, const std::filesystem::path& file) {
  std::ostringstream os;
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  write_text(file, os.str());
}

int run_command(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out_dir,
                std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigurationError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  if (command == "scatter") {
    const ScatterTable table = cmd_scatter(cfg);
    write_csv(table, out_dir / "scatter.csv");
    log << "scatter: " << table.rows.size() << " rows -> " << (out_dir / "scatter.csv").string() << "\n";
    return kExitPass;
  }
  if (command == "xi" || command == "timedelay" || command == "calabi") {
    const json payload = command == "xi" ? cmd_xi(cfg) : command == "timedelay" ? cmd_timedelay(cfg) : cmd_calabi(cfg);
    const auto file = out_dir / (command + ".json");
    write_json(file, payload, provenance(cfg, command, elapsed()));
    for (const auto& r : payload["results"]) {
      log << command << " " << r["method"].get<std::string>() << ": " << r["value"].dump() << " +/- "
          << r["error"].dump() << "\n";
    }
    return kExitPass;
  }
  if (command == "verify") {
    const VerificationReport rep = cmd_verify(cfg);
    write_json(out_dir / "report.json", report_to_json(rep), provenance(cfg, command, elapsed()));
    const std::string text = report_to_text(rep);
    write_text(out_dir / "report.txt", text);
    log << text;
    return rep.pass ? kExitPass : kExitVerificationFailed;
  }
  throw ConfigurationError("unknown command '" + command + "'");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigurationError*>(&e)) return kExitConfiguration;
  return kExitNumerical;
}

std::string error_record(const std::exception& e) {
  std::string code = "internal";
  if (const auto* err = dynamic_cast<const Error*>(&e)) code = err->code();
  return json{{"error", code}, {"message", e.what()}}.dump();
}

}  // namespace hamscat
