#include "config.hpp"

#include "etacurv/stencil.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace etacurv::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access to one JSON object; remembers which keys were read so that
// unknown keys can be rejected.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  [[nodiscard]] const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      throw ConfigError(join(path_, key), "missing required key");
    }
    return j_.at(key);
  }

  [[nodiscard]] double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) {
      throw ConfigError(join(path_, key), "expected a number");
    }
    return v.get<double>();
  }

  [[nodiscard]] double number_or(const std::string& key, double fallback) {
    if (!has(key)) {
      return fallback;
    }
    return number(key);
  }

  [[nodiscard]] int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) {
      throw ConfigError(join(path_, key), "expected an integer");
    }
    return v.get<int>();
  }

  [[nodiscard]] int integer_or(const std::string& key, int fallback) {
    if (!has(key)) {
      return fallback;
    }
    return integer(key);
  }

  [[nodiscard]] std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) {
      throw ConfigError(join(path_, key), "expected a string");
    }
    return v.get<std::string>();
  }

  [[nodiscard]] std::string string_or(const std::string& key, const std::string& fallback) {
    if (!has(key)) {
      return fallback;
    }
    return string(key);
  }

  [[nodiscard]] std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) {
      throw ConfigError(join(path_, key), "expected an array of numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) {
        throw ConfigError(join(path_, key), "expected an array of numbers");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  [[nodiscard]] Section child(const std::string& key) { return {raw(key), join(path_, key)}; }

  [[nodiscard]] std::string key_path(const std::string& key) const { return join(path_, key); }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError(join(path_, key), "unknown key");
      }
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) {
    throw ConfigError(key, message);
  }
}

void check_table(const FSpec& f, const std::string& key) {
  require(f.radii.size() == f.values.size() && f.radii.size() >= 2, key,
          "radii and values must have equal length >= 2");
  for (std::size_t i = 1; i < f.radii.size(); ++i) {
    require(f.radii[i] > f.radii[i - 1], key + ".radii", "must be strictly increasing");
  }
}

FSpec parse_f(Section s, int n, Geometry geometry) {
  FSpec f;
  f.builtin = s.string("builtin");
  const std::string key = s.key_path("builtin");
  if (geometry == Geometry::Surface) {
    if (f.builtin == "power_decay") {
      f.c = s.number("c");
      f.p = s.number("p");
    } else if (f.builtin == "aniso_power") {
      f.c = s.number("c");
      f.p = s.number("p");
      f.delta = s.number("delta");
      f.axis = s.integer_or("axis", n);
      require(f.axis >= 0 && f.axis <= n, s.key_path("axis"), "must index a coordinate of R^{n+1}");
    } else if (f.builtin == "constant") {
      f.c = s.number("c");
    } else if (f.builtin == "tabulated") {
      f.radii = s.numbers("radii");
      f.values = s.numbers("values");
      check_table(f, s.key_path("radii"));
    } else {
      throw ConfigError(key, "unknown builtin '" + f.builtin +
                                 "' (expected power_decay, aniso_power, constant or tabulated)");
    }
  } else {
    if (f.builtin == "constant") {
      f.c = s.number("c");
    } else if (f.builtin == "grad_quadratic") {
      f.c = s.number("c");
      f.a = s.number("a");
    } else if (f.builtin == "tabulated") {
      f.radii = s.numbers("radii");
      f.values = s.numbers("values");
      check_table(f, s.key_path("radii"));
    } else {
      throw ConfigError(key, "unknown builtin '" + f.builtin + "' (expected constant, grad_quadratic or tabulated)");
    }
  }
  s.finish();
  return f;
}

NewtonSpec parse_newton(Section s) {
  NewtonSpec nw;
  nw.tol = s.number_or("tol", nw.tol);
  require(nw.tol > 0.0, s.key_path("tol"), "must be positive");
  nw.max_iter = s.integer_or("max_iter", nw.max_iter);
  require(nw.max_iter >= 1, s.key_path("max_iter"), "must be at least 1");
  nw.max_halvings = s.integer_or("max_halvings", nw.max_halvings);
  require(nw.max_halvings >= 0 && nw.max_halvings <= 30, s.key_path("max_halvings"), "must be in [0, 30]");
  nw.form = s.string_or("form", nw.form);
  require(nw.form == "raw" || nw.form == "root", s.key_path("form"), "expected raw or root");
  nw.jacobian = s.string_or("jacobian", nw.jacobian);
  require(nw.jacobian == "analytic" || nw.jacobian == "fd", s.key_path("jacobian"), "expected analytic or fd");
  s.finish();
  return nw;
}

void parse_surface(Section& root, RunConfig& cfg) {
  {
    Section grid = root.child("grid");
    const std::string mode = grid.string("mode");
    try {
      cfg.grid_mode = geometry::parse_grid_mode(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(grid.key_path("mode"), e.what());
    }
    const std::vector<double> sizes = grid.numbers("sizes");
    const std::string skey = grid.key_path("sizes");
    for (double v : sizes) {
      require(v == std::floor(v) && v >= 8 && v <= 1 << 16, skey, "sizes must be integers >= 8");
    }
    if (cfg.grid_mode == geometry::GridMode::Full2d) {
      require(cfg.n == 2, grid.key_path("mode"), "full-2d requires n = 2; use axisym-1d");
      require(sizes.size() == 2, skey, "full-2d expects [n_lon, n_lat]");
      cfg.grid_sizes = {static_cast<int>(sizes[0]), static_cast<int>(sizes[1])};
      require(cfg.grid_sizes.n_lon % 2 == 0, skey, "longitude count must be even");
    } else {
      require(sizes.size() == 1, skey, "axisym-1d expects [n_lat]");
      cfg.grid_sizes = {0, static_cast<int>(sizes[0])};
    }
    grid.finish();
  }
  cfg.r1 = root.number_or("r1", cfg.r1);
  cfg.r2 = root.number_or("r2", cfg.r2);
  require(cfg.r1 > 0.0 && cfg.r1 < 1.0, "r1", "must satisfy 0 < r1 < 1");
  require(cfg.r2 > 1.0, "r2", "must satisfy r2 > 1");
  cfg.epsilon = root.number_or("epsilon", cfg.epsilon);
  require(cfg.epsilon > 0.0, "epsilon", "must be positive");
  require(solver::homotopy_floor(cfg.r1, cfg.r2, cfg.k, cfg.epsilon) > 0.0, "epsilon",
          "too large for the annulus [r1, r2]; the homotopy right-hand side would not stay positive");
  if (root.has("t_schedule")) {
    Section ts = root.child("t_schedule");
    cfg.schedule.dt0 = ts.number_or("dt0", cfg.schedule.dt0);
    cfg.schedule.dt_min = ts.number_or("dt_min", cfg.schedule.dt_min);
    cfg.schedule.dt_max = ts.number_or("dt_max", cfg.schedule.dt_max);
    require(cfg.schedule.dt_min > 0.0, ts.key_path("dt_min"), "must be positive");
    require(cfg.schedule.dt0 >= cfg.schedule.dt_min, ts.key_path("dt0"), "must be >= dt_min");
    require(cfg.schedule.dt_max >= cfg.schedule.dt0, ts.key_path("dt_max"), "must be >= dt0");
    require(cfg.schedule.dt_max <= 1.0, ts.key_path("dt_max"), "must be <= 1");
    ts.finish();
  }
  if (root.has("monitors")) {
    Section m = root.child("monitors");
    cfg.monitors.big_a = m.number_or("A", cfg.monitors.big_a);
    cfg.monitors.alpha = m.number_or("alpha", cfg.monitors.alpha);
    m.finish();
  }
  cfg.validation_samples = root.integer_or("validation_samples", cfg.validation_samples);
  require(cfg.validation_samples >= 1, "validation_samples", "must be positive");
}

void parse_flat(Section& root, RunConfig& cfg) {
  Section dom = root.child("domain");
  const std::string shape = dom.string("shape");
  try {
    cfg.domain.shape = flatcase::parse_shape(shape);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(dom.key_path("shape"), e.what());
  }
  cfg.domain.n = cfg.n;
  cfg.domain.h = dom.number("h");
  require(cfg.domain.h > 0.0 && cfg.domain.h <= 0.5, dom.key_path("h"), "must be in (0, 0.5]");
  if (cfg.domain.shape == flatcase::DomainShape::Ball) {
    cfg.domain.radius = dom.number_or("radius", 1.0);
    require(cfg.domain.radius > 2.0 * cfg.domain.h, dom.key_path("radius"), "must exceed 2 h");
  } else {
    cfg.domain.lower = dom.numbers("lower");
    cfg.domain.upper = dom.numbers("upper");
    require(static_cast<int>(cfg.domain.lower.size()) == cfg.n, dom.key_path("lower"), "must have n entries");
    require(static_cast<int>(cfg.domain.upper.size()) == cfg.n, dom.key_path("upper"), "must have n entries");
  }
  dom.finish();
  try {
    static_cast<void>(flatcase::build_domain(cfg.domain));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(dom.key_path("shape"), e.what());
  }
  cfg.beta = root.number_or("beta", cfg.beta);
  require(cfg.beta > 0.0, "beta", "must be positive");
}

json* walk(json& doc, const std::string& path) {
  json* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) {
      throw ConfigError(path, "empty component in override key");
    }
    if (!cur->is_object()) {
      throw ConfigError(path, "override descends into a non-object");
    }
    cur = &(*cur)[part];
    if (dot == std::string::npos) {
      return cur;
    }
    if (cur->is_null()) {
      *cur = json::object();
    }
    start = dot + 1;
  }
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("--config", "cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--override", "expected key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  *walk(doc, key) = std::move(parsed);
}

RunConfig parse_config(const json& doc, Geometry expected) {
  Section root(doc, "");
  RunConfig cfg;
  cfg.geometry = expected;
  if (root.has("geometry")) {
    const std::string g = root.string("geometry");
    require(g == "surface" || g == "flat", "geometry", "expected surface or flat");
    const Geometry declared = g == "flat" ? Geometry::Flat : Geometry::Surface;
    require(declared == expected, "geometry",
            expected == Geometry::Flat ? "solve-flat needs geometry = flat" : "solve-surface needs geometry = surface");
  }
  cfg.n = root.integer("n");
  require(cfg.n >= 2, "n", "must be at least 2");
  require(cfg.n + 1 <= kMaxAmbient, "n", "must be at most " + std::to_string(kMaxAmbient - 1));
  cfg.k = root.integer("k");
  require(cfg.k >= 1 && cfg.k <= cfg.n, "k", "must satisfy 1 <= k <= n");
  cfg.f = parse_f(root.child("f"), cfg.n, expected);
  if (root.has("newton")) {
    cfg.newton = parse_newton(root.child("newton"));
  }
  const int seed = root.integer_or("seed", 0);
  require(seed >= 0, "seed", "must be non-negative");
  cfg.seed = static_cast<unsigned>(seed);
  cfg.output_dir = root.string_or("output_dir", cfg.output_dir);
  require(!cfg.output_dir.empty(), "output_dir", "must not be empty");
  cfg.verbosity = root.integer_or("verbosity", cfg.verbosity);
  require(cfg.verbosity >= 0 && cfg.verbosity <= 2, "verbosity", "must be 0, 1 or 2");

  if (expected == Geometry::Surface) {
    parse_surface(root, cfg);
  } else {
    parse_flat(root, cfg);
  }
  root.finish();
  return cfg;
}

solver::PrescribedData surface_data(const RunConfig& cfg) {
  solver::PrescribedData d;
  d.r1 = cfg.r1;
  d.r2 = cfg.r2;
  const FSpec& f = cfg.f;
  if (f.builtin == "power_decay") {
    d.f = solver::power_decay(f.c, f.p);
  } else if (f.builtin == "aniso_power") {
    d.f = solver::aniso_power(f.c, f.p, f.delta, f.axis);
  } else if (f.builtin == "constant") {
    d.f = solver::constant(f.c);
  } else {
    d.f = solver::tabulated_radial(f.radii, f.values);
  }
  return d;
}

flatcase::FlatFn flat_function(const RunConfig& cfg) {
  const FSpec& f = cfg.f;
  if (f.builtin == "constant") {
    return flatcase::flat_constant(f.c);
  }
  if (f.builtin == "grad_quadratic") {
    return flatcase::flat_grad_quadratic(f.c, f.a);
  }
  return flatcase::flat_tabulated_radial(f.radii, f.values);
}

solver::NewtonConfig surface_newton(const RunConfig& cfg) {
  solver::NewtonConfig nc;
  nc.tol = cfg.newton.tol;
  nc.max_iter = cfg.newton.max_iter;
  nc.max_halvings = cfg.newton.max_halvings;
  nc.form = cfg.newton.form == "root" ? solver::EquationForm::Root : solver::EquationForm::Raw;
  nc.jacobian = cfg.newton.jacobian == "fd" ? solver::JacobianMode::FiniteDifference : solver::JacobianMode::Analytic;
  return nc;
}

flatcase::FlatConfig flat_newton(const RunConfig& cfg) {
  flatcase::FlatConfig fc;
  fc.tol = cfg.newton.tol;
  fc.max_iter = cfg.newton.max_iter;
  fc.max_halvings = cfg.newton.max_halvings;
  fc.form = cfg.newton.form == "root" ? flatcase::EquationForm::Root : flatcase::EquationForm::Raw;
  fc.jacobian =
      cfg.newton.jacobian == "fd" ? flatcase::JacobianMode::FiniteDifference : flatcase::JacobianMode::Analytic;
  fc.beta = cfg.beta;
  return fc;
}

}  // namespace etacurv::cli
