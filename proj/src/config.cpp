#include "hamscat/config.hpp"

#include "hamscat/errors.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace hamscat {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked about.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigurationError(where() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigurationError(where(key) + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return (it == obj_.end() || it->is_null()) ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigurationError("unknown configuration key " + where(it.key().c_str()));
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string w = path_.empty() ? "<root>" : path_;
    if (key) w = path_.empty() ? key : path_ + "." + key;
    return "'" + w + "'";
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Bump parse_bump(const json& j, const std::string& path, int n) {
  ObjectReader r(j, path);
  std::vector<double> center;
  Bump b;
  r.read("center", center);
  r.read("amplitude", b.amplitude);
  r.read("radius", b.radius);
  r.finish();
  if (center.empty()) center.assign(n, 0.0);
  if (static_cast<int>(center.size()) != n) {
    throw ConfigurationError("'" + path + ".center' must have " + std::to_string(n) + " components");
  }
  b.center = Vec::Zero(n);
  for (int i = 0; i < n; ++i) b.center[i] = center[i];
  return b;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigurationError(what);
}

void validate(const RunConfig& c) {
  require(c.dimension == 2 || c.dimension == 3, "'dimension' must be 2 or 3");
  require(std::isfinite(c.energy) && c.energy > 0.0, "'energy' must be positive");
  require(std::isfinite(c.section_R), "'section_R' must be finite");
  for (const auto& b : c.bumps) {
    require(std::isfinite(b.amplitude), "bump amplitude must be finite");
    require(std::isfinite(b.radius) && b.radius > 0.0, "bump radius must be positive");
    require(b.center.allFinite(), "bump centre must be finite");
  }
  require(c.step >= 0.0 && std::isfinite(c.step), "'integrator.step' must be non-negative");
  require(c.step_scale > 0.0 && std::isfinite(c.step_scale), "'integrator.step_scale' must be positive");
  require(c.energy_tol > 0.0, "'integrator.energy_tol' must be positive");
  const auto& q = c.functionals.quadrature;
  require(q.sphere_resolution >= 4, "'quadrature.sphere_resolution' must be at least 4");
  require(q.impact_nodes >= 4, "'quadrature.impact_nodes' must be at least 4");
  require(q.transverse_angles >= 4, "'quadrature.transverse_angles' must be at least 4");
  require(q.s_max_margin >= 1.0, "'quadrature.s_max_margin' must be at least 1");
  require(c.functionals.fd_step > 0.0, "'quadrature.fd_step' must be positive");
  require(c.functionals.isotopy_nodes >= 2, "'quadrature.isotopy_nodes' must be at least 2");
  require(c.functionals.radial_nodes >= 2, "'quadrature.radial_nodes' must be at least 2");
  require(c.dxi_relative_step > 0.0 && c.dxi_relative_step < 0.5, "'quadrature.dxi_relative_step' must lie in (0, 0.5)");
  require(c.sojourn_radius_factor >= 1.0, "'quadrature.sojourn_radius_factor' must be at least 1");
  require(c.mc_samples > 0, "'montecarlo.samples' must be positive");
  require(c.assumptions.grid_points >= 8, "'assumptions.grid_points' must be at least 8");
  require(c.assumptions.safety_margin >= 0.0, "'assumptions.safety_margin' must be non-negative");
  require(c.winding_samples >= 3, "'mode.winding_samples' must be at least 3");
  for (const auto& route : c.calabi_routes) {
    require(route == "delta" || route == "rho" || route == "radial" || route == "isotopy",
            "unknown Calabi route '" + route + "'");
  }
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  ObjectReader root(doc, "");
  root.read("dimension", c.dimension);
  root.read("energy", c.energy);
  root.read("section_R", c.section_R);
  require(c.dimension == 2 || c.dimension == 3, "'dimension' must be 2 or 3");

  if (const json* pot = root.child("potential")) {
    ObjectReader r(*pot, "potential");
    if (const json* bumps = r.child("bumps")) {
      require(bumps->is_array(), "'potential.bumps' must be an array");
      for (std::size_t i = 0; i < bumps->size(); ++i) {
        c.bumps.push_back(parse_bump((*bumps)[i], "potential.bumps." + std::to_string(i), c.dimension));
      }
    }
    r.finish();
  }

  if (const json* integ = root.child("integrator")) {
    ObjectReader r(*integ, "integrator");
    r.read("step", c.step);
    r.read("step_scale", c.step_scale);
    r.read("energy_tol", c.energy_tol);
    r.finish();
  }

  if (const json* quad = root.child("quadrature")) {
    ObjectReader r(*quad, "quadrature");
    auto& q = c.functionals.quadrature;
    r.read("sphere_resolution", q.sphere_resolution);
    r.read("impact_nodes", q.impact_nodes);
    r.read("transverse_angles", q.transverse_angles);
    r.read("s_max_margin", q.s_max_margin);
    r.read("use_symmetry", c.functionals.use_symmetry);
    r.read("fd_step", c.functionals.fd_step);
    r.read("isotopy_nodes", c.functionals.isotopy_nodes);
    r.read("radial_nodes", c.functionals.radial_nodes);
    r.read("dxi_relative_step", c.dxi_relative_step);
    r.read("sojourn_radius_factor", c.sojourn_radius_factor);
    r.finish();
  }

  if (const json* mc = root.child("montecarlo")) {
    ObjectReader r(*mc, "montecarlo");
    r.read("samples", c.mc_samples);
    r.read("seed", c.mc_seed);
    r.finish();
  }

  if (const json* as = root.child("assumptions")) {
    ObjectReader r(*as, "assumptions");
    r.read("grid_points", c.assumptions.grid_points);
    r.read("safety_margin", c.assumptions.safety_margin);
    r.read("barrier_margin", c.assumptions.barrier_margin);
    r.finish();
  }

  if (const json* mode = root.child("mode")) {
    ObjectReader r(*mode, "mode");
    r.read("winding_mode", c.assumptions.winding_mode);
    r.read("winding_samples", c.winding_samples);
    r.finish();
  }

  if (const json* cal = root.child("calabi")) {
    ObjectReader r(*cal, "calabi");
    r.read("routes", c.calabi_routes);
    r.finish();
  }

  if (const json* tol = root.child("tolerances")) {
    ObjectReader r(*tol, "tolerances");
    r.read("e1", c.tolerances.e1);
    r.read("e4a", c.tolerances.e4a);
    r.read("e4a_n2", c.tolerances.e4a_n2);
    r.read("montecarlo_sigmas", c.tolerances.montecarlo_sigmas);
    r.read("winding_endpoint", c.tolerances.winding_endpoint);
    r.read("energy_drift", c.tolerances.energy_drift);
    r.finish();
  }

  if (const json* out = root.child("output")) {
    ObjectReader r(*out, "output");
    r.read("directory", c.output_directory);
    // Every format is always written; the key is accepted for compatibility.
    std::vector<std::string> formats;
    r.read("formats", formats);
    r.finish();
  }
  root.finish();
  validate(c);
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigurationError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& key = parts[i];
    if (key.empty()) throw ConfigurationError("override '" + assignment + "' has an empty path component");
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ConfigurationError("override '" + assignment + "': '" + key + "' is not an array index");
      }
      if (idx > node->size()) throw ConfigurationError("override '" + assignment + "': index out of range");
      if (idx == node->size()) node->push_back(json::object());
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigurationError("override '" + assignment + "' descends into a scalar");
      node = &(*node)[key];
    }
    if (last) *node = value;
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open configuration file '" + path + "'");
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigurationError("configuration file '" + path + "' is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

json config_to_json(const RunConfig& c) {
  json bumps = json::array();
  for (const auto& b : c.bumps) {
    std::vector<double> center(b.center.data(), b.center.data() + b.center.size());
    bumps.push_back({{"center", center}, {"amplitude", b.amplitude}, {"radius", b.radius}});
  }
  const auto& q = c.functionals.quadrature;
  return json{
      {"dimension", c.dimension},
      {"energy", c.energy},
      {"section_R", c.section_R},
      {"potential", {{"bumps", bumps}}},
      {"integrator", {{"step", c.step}, {"step_scale", c.step_scale}, {"energy_tol", c.energy_tol}}},
      {"quadrature",
       {{"sphere_resolution", q.sphere_resolution},
        {"impact_nodes", q.impact_nodes},
        {"transverse_angles", q.transverse_angles},
        {"s_max_margin", q.s_max_margin},
        {"use_symmetry", c.functionals.use_symmetry},
        {"fd_step", c.functionals.fd_step},
        {"isotopy_nodes", c.functionals.isotopy_nodes},
        {"radial_nodes", c.functionals.radial_nodes},
        {"dxi_relative_step", c.dxi_relative_step},
        {"sojourn_radius_factor", c.sojourn_radius_factor}}},
      {"montecarlo", {{"samples", c.mc_samples}, {"seed", c.mc_seed}}},
      {"assumptions",
       {{"grid_points", c.assumptions.grid_points},
        {"safety_margin", c.assumptions.safety_margin},
        {"barrier_margin", c.assumptions.barrier_margin}}},
      {"mode", {{"winding_mode", c.assumptions.winding_mode}, {"winding_samples", c.winding_samples}}},
      {"calabi", {{"routes", c.calabi_routes}}},
      {"tolerances",
       {{"e1", c.tolerances.e1},
        {"e4a", c.tolerances.e4a},
        {"e4a_n2", c.tolerances.e4a_n2},
        {"montecarlo_sigmas", c.tolerances.montecarlo_sigmas},
        {"winding_endpoint", c.tolerances.winding_endpoint},
        {"energy_drift", c.tolerances.energy_drift}}},
  };
}

std::string config_hash(const RunConfig& cfg) {
  // json objects keep keys sorted, so dump() is canonical.
  const std::string text = config_to_json(cfg).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

}  // namespace hamscat
