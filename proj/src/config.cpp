#include "homdef/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace homdef {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  require_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

const json& required(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = required(j, key, where);
  if (!v.is_number()) throw ConfigError("key '" + key + "' in " + where + " must be a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& where, double fallback) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

int integer(const json& j, const std::string& key, const std::string& where) {
  const json& v = required(j, key, where);
  if (!v.is_number_integer()) throw ConfigError("key '" + key + "' in " + where + " must be an integer");
  return v.get<int>();
}

int integer_or(const json& j, const std::string& key, const std::string& where, int fallback) {
  return j.contains(key) ? integer(j, key, where) : fallback;
}

std::string text(const json& j, const std::string& key, const std::string& where) {
  const json& v = required(j, key, where);
  if (!v.is_string()) throw ConfigError("key '" + key + "' in " + where + " must be a string");
  return v.get<std::string>();
}

bool flag_or(const json& j, const std::string& key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError("key '" + key + "' in " + where + " must be a boolean");
  return j.at(key).get<bool>();
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
  const json& v = required(j, key, where);
  if (!v.is_array()) throw ConfigError("key '" + key + "' in " + where + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("key '" + key + "' in " + where + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

PeriodicCoefficient parse_coefficient(const json& j, int dim, int components) {
  const std::string where = "coefficient";
  require_object(j, where);
  const std::string type = text(j, "type", where);
  if (type == "identity") {
    check_keys(j, where, {"type"});
    return identity_coefficient(components, dim);
  }
  if (type == "constant") {
    check_keys(j, where, {"type", "value"});
    const json& v = required(j, "value", where);
    const int size = components * dim;
    if (v.is_number()) {
      return constant_coefficient(TensorBlock::Identity(size, size) * v.get<double>(), components, dim);
    }
    if (!v.is_array() || static_cast<int>(v.size()) != size) {
      throw ConfigError("key 'value' in coefficient must be a number or a " + std::to_string(size) +
                        "x" + std::to_string(size) + " array");
    }
    TensorBlock t(size, size);
    for (int r = 0; r < size; ++r) {
      if (!v[r].is_array() || static_cast<int>(v[r].size()) != size) {
        throw ConfigError("key 'value' in coefficient has a malformed row");
      }
      for (int c = 0; c < size; ++c) t(r, c) = v[r][c].get<double>();
    }
    return constant_coefficient(t, components, dim);
  }
  if (components != 1 && type != "coupled-laminate") {
    throw ConfigError("coefficient type '" + type + "' is scalar; set components to 1");
  }
  if (type == "laminate") {
    check_keys(j, where, {"type", "mean", "amplitude", "transverse"});
    std::optional<double> transverse;
    if (j.contains("transverse")) transverse = number(j, "transverse", where);
    return laminate_coefficient(dim, number(j, "mean", where), number(j, "amplitude", where), transverse);
  }
  if (type == "checkerboard") {
    check_keys(j, where, {"type", "phase0", "phase1"});
    return checkerboard_coefficient(dim, number(j, "phase0", where), number(j, "phase1", where));
  }
  if (type == "trig") {
    check_keys(j, where, {"type", "mean", "amplitude"});
    return trig_coefficient(dim, number(j, "mean", where), number(j, "amplitude", where));
  }
  if (type == "coupled-laminate") {
    check_keys(j, where, {"type", "mean", "amplitude", "coupling"});
    if (components != 2) throw ConfigError("coupled-laminate needs components = 2");
    return coupled_laminate_coefficient(dim, number(j, "mean", where), number(j, "amplitude", where),
                                        number(j, "coupling", where));
  }
  if (type == "table") {
    check_keys(j, where, {"type", "path"});
    return table_coefficient(dim, load_coefficient_table(text(j, "path", where)));
  }
  throw ConfigError("unknown coefficient type '" + type + "'");
}

std::optional<DefectCoefficient> parse_defect(const json& j, const PeriodicCoefficient& a) {
  if (j.is_null()) return std::nullopt;
  const std::string where = "defect";
  require_object(j, where);
  const std::string type = text(j, "type", where);
  const int n = a.components();
  const int d = a.dim();
  if (type == "ball") {
    check_keys(j, where, {"type", "value", "radius"});
    return ball_defect(TensorBlock::Identity(n * d, n * d) * number(j, "value", where), n, d,
                       number(j, "radius", where));
  }
  if (type == "scaled-ball") {
    check_keys(j, where, {"type", "factor", "radius"});
    return scaled_ball_defect(a, number(j, "factor", where), number(j, "radius", where));
  }
  if (type == "gaussian") {
    check_keys(j, where, {"type", "amplitude", "width"});
    return gaussian_defect(n, d, number(j, "amplitude", where), number(j, "width", where));
  }
  throw ConfigError("unknown defect type '" + type + "'");
}

Nonlinearity parse_nonlinearity(const json& j, int dim, int components) {
  const std::string where = "nonlinearity";
  require_object(j, where);
  const std::string type = text(j, "type", where);
  if (type == "zero") {
    check_keys(j, where, {"type"});
    return zero_nonlinearity(components, dim);
  }
  if (type == "linear") {
    check_keys(j, where, {"type", "forcing"});
    return linear_nonlinearity(components, dim, number(j, "forcing", where));
  }
  if (type == "cubic") {
    check_keys(j, where, {"type", "forcing", "cubic", "linear"});
    return cubic_nonlinearity(components, dim, number(j, "forcing", where),
                              number_or(j, "cubic", where, 1.0), number_or(j, "linear", where, 1.0));
  }
  if (type == "convective") {
    check_keys(j, where, {"type", "velocity", "forcing"});
    const auto v = numbers(j, "velocity", where);
    if (static_cast<int>(v.size()) != dim) throw ConfigError("key 'velocity' in nonlinearity needs d entries");
    return convective_nonlinearity(components, dim, v, number(j, "forcing", where));
  }
  throw ConfigError("unknown nonlinearity type '" + type + "'");
}

SolverConfig parse_solver(const json& j) {
  SolverConfig s;
  if (j.is_null()) return s;
  const std::string where = "solver";
  check_keys(j, where, {"tolerance", "max_iterations", "damping", "monitor_window", "growth_limit",
                        "spectral_tolerance", "spectral_iterations"});
  s.tolerance = number_or(j, "tolerance", where, s.tolerance);
  s.max_iterations = integer_or(j, "max_iterations", where, s.max_iterations);
  s.damping = flag_or(j, "damping", where, s.damping);
  s.monitor_window = integer_or(j, "monitor_window", where, s.monitor_window);
  s.growth_limit = number_or(j, "growth_limit", where, s.growth_limit);
  s.spectral_tolerance = number_or(j, "spectral_tolerance", where, s.spectral_tolerance);
  s.spectral_iterations = integer_or(j, "spectral_iterations", where, s.spectral_iterations);
  s.validate();
  return s;
}

}  // namespace

double configured_mesh_diameter(const ProblemSpec& p) {
  double sq = 0.0;
  for (int k = 0; k < p.dim; ++k) {
    const double hk = p.box.extent(k) / p.mesh_subdivisions;
    sq += hk * hk;
  }
  return std::sqrt(sq);
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, "config",
             {"version", "dimension", "components", "domain", "mesh", "coefficient", "defect",
              "nonlinearity", "eps", "ladder", "variant", "solver", "assembly", "fit", "probe",
              "test_field", "output", "seed", "threads", "ball_rule", "description"});
  const int version = integer(doc, "version", "config");
  if (version != kConfigVersion) {
    throw ConfigError("unsupported config version " + std::to_string(version) + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  const int dim = integer(doc, "dimension", "config");
  if (dim != 1 && dim != 2) throw ConfigError("key 'dimension' must be 1 or 2");
  const int components = integer_or(doc, "components", "config", 1);
  if (components < 1 || components * dim > kMaxBlock) throw ConfigError("key 'components' out of range");

  const json& domain = required(doc, "domain", "config");
  check_keys(domain, "domain", {"lower", "upper"});
  const auto lower = numbers(domain, "lower", "domain");
  const auto upper = numbers(domain, "upper", "domain");
  if (static_cast<int>(lower.size()) != dim || static_cast<int>(upper.size()) != dim) {
    throw ConfigError("keys 'lower' and 'upper' in domain need d entries");
  }
  const Box box = make_box(lower, upper);

  const json& mesh = required(doc, "mesh", "config");
  check_keys(mesh, "mesh", {"subdivisions", "cell_subdivisions"});
  const int subdivisions = integer(mesh, "subdivisions", "mesh");
  const int cell_subdivisions = integer_or(mesh, "cell_subdivisions", "mesh", 64);
  if (subdivisions < 2 || cell_subdivisions < 2) throw ConfigError("mesh subdivisions must be at least 2");

  PeriodicCoefficient a = parse_coefficient(required(doc, "coefficient", "config"), dim, components);
  std::optional<DefectCoefficient> b =
      parse_defect(doc.contains("defect") ? doc.at("defect") : json(), a);
  Nonlinearity nl = parse_nonlinearity(required(doc, "nonlinearity", "config"), dim, components);

  ProblemSpec problem{dim, box, subdivisions, cell_subdivisions, a, b, nl};
  if (doc.contains("variant")) problem.variant = parse_variant(text(doc, "variant", "config"));
  else problem.variant = dim == 1 ? Variant::plain_scalar : Variant::plain_2d;
  problem.solver = parse_solver(doc.contains("solver") ? doc.at("solver") : json());
  if (doc.contains("assembly")) {
    const json& as = doc.at("assembly");
    check_keys(as, "assembly", {"resolution_floor", "allow_underresolved"});
    problem.assembly.resolution_floor = number_or(as, "resolution_floor", "assembly", 8.0);
    problem.assembly.allow_underresolved = flag_or(as, "allow_underresolved", "assembly", false);
    if (!(problem.assembly.resolution_floor > 0.0)) throw ConfigError("key 'resolution_floor' must be positive");
  }
  if (doc.contains("ball_rule")) {
    const json& br = doc.at("ball_rule");
    check_keys(br, "ball_rule", {"radial", "angular"});
    problem.rule.radial = integer_or(br, "radial", "ball_rule", 0);
    problem.rule.angular = integer_or(br, "angular", "ball_rule", 0);
  }

  ExperimentConfig cfg(problem);
  cfg.source = doc;
  if (doc.contains("eps")) {
    cfg.eps = number(doc, "eps", "config");
    if (!(*cfg.eps > 0.0)) throw ConfigError("key 'eps' must be positive");
  }
  if (doc.contains("ladder")) {
    cfg.ladder = numbers(doc, "ladder", "config");
    if (cfg.ladder.empty()) throw ConfigError("key 'ladder' must not be empty");
    validate_ladder(cfg.ladder);
  }
  if (doc.contains("fit")) {
    const json& f = doc.at("fit");
    check_keys(f, "fit", {"eps_min", "eps_max"});
    FitWindow w;
    w.eps_min = number_or(f, "eps_min", "fit", 0.0);
    w.eps_max = number_or(f, "eps_max", "fit", std::numeric_limits<double>::infinity());
    cfg.fit_window = w;
  }
  if (doc.contains("probe")) {
    const json& p = doc.at("probe");
    check_keys(p, "probe", {"radius", "trials"});
    cfg.probe.radius = number_or(p, "radius", "probe", cfg.probe.radius);
    cfg.probe.trials = integer_or(p, "trials", "probe", cfg.probe.trials);
    if (cfg.probe.radius < 0.0 || cfg.probe.trials < 1) throw ConfigError("probe radius/trials out of range");
  }
  if (doc.contains("test_field")) {
    const json& t = doc.at("test_field");
    check_keys(t, "test_field", {"kind", "exponent"});
    cfg.test_field.kind = text(t, "kind", "test_field");
    cfg.test_field.exponent = number_or(t, "exponent", "test_field", cfg.test_field.exponent);
    if (cfg.test_field.kind != "sine" && cfg.test_field.kind != "spike") {
      throw ConfigError("key 'kind' in test_field must be 'sine' or 'spike'");
    }
  }
  if (doc.contains("output")) cfg.output = text(doc, "output", "config");
  if (doc.contains("seed")) {
    const json& seed = doc.at("seed");
    if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) throw ConfigError("key 'seed' must be a nonnegative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  cfg.threads = integer_or(doc, "threads", "config", 1);
  if (cfg.threads < 1) throw ConfigError("key 'threads' must be at least 1");
  if (doc.contains("description") && !doc.at("description").is_string()) {
    throw ConfigError("key 'description' must be a string");
  }

  // Resolution floor against the smallest eps the config will use.
  std::optional<double> eps_min = cfg.eps;
  if (!cfg.ladder.empty()) eps_min = eps_min ? std::min(*eps_min, cfg.ladder.back()) : cfg.ladder.back();
  const bool oscillates = !a.is_constant() || b.has_value();
  if (eps_min && oscillates && !problem.assembly.allow_underresolved) {
    const double h = configured_mesh_diameter(problem);
    if (h > *eps_min / problem.assembly.resolution_floor * (1 + 1e-12)) {
      std::ostringstream msg;
      msg << "mesh too coarse: h = " << h << " exceeds eps/" << problem.assembly.resolution_floor
          << " for eps = " << *eps_min;
      throw ConfigError(msg.str());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

DiscreteField sine_test_field(std::shared_ptr<const DomainMesh> mesh) {
  DiscreteField u(mesh, 1);
  for (int n = 0; n < mesh->num_nodes(); ++n) {
    double v = 1.0;
    for (int k = 0; k < mesh->dim; ++k) {
      const double t = (mesh->nodes(k, n) - mesh->box.lower(k)) / mesh->box.extent(k);
      v *= std::sin(std::numbers::pi * t);
    }
    u(n, 0) = mesh->on_boundary[n] ? 0.0 : v;
  }
  return u;
}

DiscreteField spike_test_field(std::shared_ptr<const DomainMesh> mesh, double exponent) {
  DiscreteField u = sine_test_field(mesh);
  for (int n = 0; n < mesh->num_nodes(); ++n) {
    u(n, 0) *= std::pow(mesh->nodes.col(n).norm(), exponent);
  }
  return u;
}

}  // namespace homdef
