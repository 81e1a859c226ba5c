#include "commands.hpp"

#include "cli.hpp"
#include "json_writer.hpp"

#include "etacurv/format.hpp"
#include "etacurv/symm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace etacurv::cli {

namespace fs = std::filesystem;

namespace {

std::string status_json(std::string_view command, std::string_view status, int code, std::string_view message,
                        const std::string& output_dir) {
  JsonObject o;
  o.add("command", command).add("status", status).add("exit_code", code).add("message", message);
  if (!output_dir.empty()) {
    o.add("output_dir", output_dir);
  }
  return o.str();
}

// Writes status.json next to the artifacts and echoes it on stdout.
int finish(std::ostream& out, const fs::path& dir, std::string_view command, std::string_view status, int code,
           std::string_view message) {
  const std::string s = status_json(command, status, code, message, dir.string());
  write_file_atomic(dir / "status.json", s + "\n");
  out << s << '\n';
  return code;
}

JsonObject conditions_json(const solver::ConditionReport& c) {
  JsonObject o;
  o.add("pass", c.pass())
      .add("failure", c.failure())
      .add("samples", c.samples)
      .add("f_min", c.f_min)
      .add("inner_margin", c.inner_margin)
      .add("outer_margin", c.outer_margin)
      .add("monotonicity_max", c.monotonicity_max)
      .add("positive", c.positive)
      .add("inner_ok", c.inner_ok)
      .add("outer_ok", c.outer_ok)
      .add("monotone_ok", c.monotone_ok)
      .add("zero_margin", c.zero_margin);
  return o;
}

JsonObject grid_json(const RunConfig& cfg, const geometry::SphereGrid& grid) {
  JsonObject o;
  o.add("mode", geometry::to_string(cfg.grid_mode)).add("nodes", grid.size()).add("n_lat", grid.n_lat());
  if (cfg.grid_mode == geometry::GridMode::Full2d) {
    o.add("n_lon", grid.n_lon());
  }
  o.add("spacing", grid.spacing());
  return o;
}

struct TraceSummary {
  int accepted = 0;
  int newton_iterations = 0;
  double final_t = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
};

TraceSummary summarize(const std::vector<solver::TraceRecord>& trace) {
  TraceSummary s;
  s.rho_min = trace.empty() ? 0.0 : trace.front().monitors.rho_min;
  s.rho_max = trace.empty() ? 0.0 : trace.front().monitors.rho_max;
  for (const auto& r : trace) {
    ++s.accepted;
    s.newton_iterations += r.newton_iterations;
    s.final_t = r.t;
    s.rho_min = std::min(s.rho_min, r.monitors.rho_min);
    s.rho_max = std::max(s.rho_max, r.monitors.rho_max);
  }
  return s;
}

JsonObject continuation_json(const RunConfig& cfg, const std::vector<solver::TraceRecord>& trace, bool completed) {
  const TraceSummary s = summarize(trace);
  JsonObject o;
  o.add("completed", completed)
      .add("epsilon", cfg.epsilon)
      .add("accepted_steps", s.accepted)
      .add("newton_iterations", s.newton_iterations)
      .add("final_t", s.final_t)
      .add("trace_rho_min", s.rho_min)
      .add("trace_rho_max", s.rho_max);
  return o;
}

std::string trace_text(const std::vector<solver::TraceRecord>& trace) {
  std::string s;
  for (const auto& r : trace) {
    s += solver::trace_record_json(r);
    s += '\n';
  }
  return s;
}

// Radius of the round solution of sigma_k = c / r^p, defined when p != k.
std::optional<double> round_radius(const RunConfig& cfg) {
  if (cfg.f.builtin != "power_decay" || cfg.f.p == cfg.k || cfg.f.c <= 0.0) {
    return std::nullopt;
  }
  const double big_c = solver::unit_sphere_sigma(cfg.n, cfg.k);
  return std::pow(cfg.f.c / big_c, 1.0 / (cfg.f.p - cfg.k));
}

// Writes surface.csv and report.json for the final (or last) iterate.
void write_surface_artifacts(const RunConfig& cfg, const fs::path& dir, const geometry::SphereGrid& grid,
                             const solver::PrescribedData& data, const geometry::RadialField& rho,
                             const solver::ConditionReport& cond, const std::vector<solver::TraceRecord>& trace,
                             std::string_view status, bool completed) {
  JsonObject report;
  report.add("status", status).add("n", cfg.n).add("k", cfg.k).add("seed", static_cast<int>(cfg.seed));
  report.add("grid", grid_json(cfg, grid));
  report.add("conditions", conditions_json(cond));
  report.add("non_unique", cond.zero_margin);
  report.add("continuation", continuation_json(cfg, trace, completed));

  try {
    const auto jet = geometry::surface_jet(grid, rho);
    std::ostringstream csv;
    geometry::write_surface_csv(csv, grid, jet, cfg.k);
    write_file_atomic(dir / "surface.csv", csv.str());
    report.raw("estimates", verify::to_json(verify::estimate_report(jet, data.f, cfg.k, cfg.monitors)));
  } catch (const std::exception& e) {
    report.null("estimates").add("estimates_error", e.what());
  }

  if (const auto r = round_radius(cfg)) {
    JsonObject ref;
    ref.add("radius", *r).add("max_abs_deviation", (rho.rho.array() - *r).abs().maxCoeff());
    report.add("round_reference", ref);
  }
  write_file_atomic(dir / "report.json", report.str() + "\n");
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("output_dir", "cannot create '" + dir.string() + "': " + ec.message());
  }
}

}  // namespace

int cmd_solve_surface(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  constexpr std::string_view kCmd = "solve-surface";
  const fs::path dir(cfg.output_dir);
  prepare_dir(dir);

  const auto grid = geometry::build_grid(cfg.n, cfg.grid_mode, cfg.grid_sizes);
  const auto data = surface_data(cfg);
  const auto cond = solver::validate_conditions(data, cfg.n, cfg.k, cfg.validation_samples, cfg.seed);

  if (!cond.pass()) {
    JsonObject report;
    report.add("status", "precondition_failed").add("n", cfg.n).add("k", cfg.k);
    report.add("grid", grid_json(cfg, grid));
    report.add("conditions", conditions_json(cond));
    write_file_atomic(dir / "report.json", report.str() + "\n");
    write_file_atomic(dir / "trace.jsonl", "");
    if (cfg.verbosity >= 1) {
      err << "precondition failed: " << cond.failure() << '\n';
    }
    return finish(out, dir, kCmd, "precondition_failed", kExitPrecondition, cond.failure());
  }

  solver::HomotopyRun run;
  run.epsilon = cfg.epsilon;
  run.schedule = cfg.schedule;
  run.newton = surface_newton(cfg);
  run.monitors = cfg.monitors;
  std::string trace_buffer;
  run.on_record = [&](const solver::TraceRecord& r) {
    trace_buffer += solver::trace_record_json(r);
    trace_buffer += '\n';
    write_file_atomic(dir / "trace.jsonl", trace_buffer);
    if (cfg.verbosity >= 2) {
      err << fmt::format("t = {:.6f}  dt = {:.3g}  newton = {}  residual = {:.3e}\n", r.t, r.dt,
                         r.newton_iterations, r.max_residual);
    }
  };

  try {
    auto result = solver::continue_to_target(grid, data, std::move(run), cfg.k);
    write_file_atomic(dir / "trace.jsonl", trace_text(result.run.trace));
    write_surface_artifacts(cfg, dir, grid, data, result.rho, cond, result.run.trace, "converged", true);
    if (cfg.verbosity >= 1) {
      err << fmt::format("converged after {} accepted steps\n", result.run.trace.size());
    }
    return finish(out, dir, kCmd, "converged", kExitOk,
                  cond.zero_margin ? "converged; monotonicity holds only with equality, solution may not be unique"
                                   : "converged");
  } catch (const solver::ContinuationStuck& e) {
    write_file_atomic(dir / "trace.jsonl", trace_text(e.run().trace));
    write_surface_artifacts(cfg, dir, grid, data, e.last(), cond, e.run().trace, "continuation_stuck", false);
    err << e.what() << '\n';
    return finish(out, dir, kCmd, "continuation_stuck", kExitSolveFailed, e.what());
  } catch (const NewtonFailure& e) {
    write_surface_artifacts(cfg, dir, grid, data, geometry::RadialField{e.last_iterate()}, cond, {},
                            "newton_failed", false);
    err << e.what() << '\n';
    return finish(out, dir, kCmd, "newton_failed", kExitSolveFailed, e.what());
  } catch (const PreconditionError& e) {
    err << e.what() << '\n';
    return finish(out, dir, kCmd, "precondition_failed", kExitPrecondition, e.what());
  } catch (const solver::ConfigurationError& e) {
    throw ConfigError("epsilon", e.what());
  }
}

namespace {

std::string newton_trace(const NewtonReport& r) {
  std::string s;
  for (std::size_t i = 0; i < r.residual_history.size(); ++i) {
    JsonObject o;
    o.add("iteration", static_cast<int>(i)).add("max_residual", r.residual_history[i]);
    if (i == 0) {
      o.null("step_fraction");
    } else {
      o.add("step_fraction", r.step_fractions[i - 1]);
    }
    s += o.str();
    s += '\n';
  }
  return s;
}

JsonObject newton_json(const NewtonReport& r) {
  JsonObject o;
  o.add("converged", r.converged)
      .add("iterations", r.iterations)
      .add("initial_residual", r.initial_residual)
      .add("final_residual", r.final_residual);
  return o;
}

// Max interior deviation from s (|x|^2 - R^2)/2, the exact solution for
// constant f on a ball.
std::optional<JsonObject> quadratic_reference(const RunConfig& cfg, const flatcase::DomainGrid& grid,
                                              const Eigen::VectorXd& phi) {
  if (cfg.f.builtin != "constant" || cfg.domain.shape != flatcase::DomainShape::Ball || cfg.f.c <= 0.0) {
    return std::nullopt;
  }
  const double s = std::pow(cfg.f.c / symm::binomial(cfg.n, cfg.k), 1.0 / cfg.k) / (cfg.n - 1);
  const double r2 = cfg.domain.radius * cfg.domain.radius;
  const Eigen::VectorXd ref = grid.sample([&](const SmallVec& x) { return 0.5 * s * (x.squaredNorm() - r2); });
  JsonObject o;
  o.add("scale", s).add("max_abs_error", (phi - ref).cwiseAbs().maxCoeff());
  return o;
}

void write_flat_artifacts(const RunConfig& cfg, const fs::path& dir, const flatcase::DomainGrid& grid,
                          const flatcase::FlatFn& f, const Eigen::VectorXd& phi, const NewtonReport& newton,
                          std::string_view status) {
  const auto state = flatcase::make_state(grid, phi, cfg.beta);
  std::ostringstream csv;
  flatcase::write_flat_csv(csv, grid, state, f, cfg.k);
  write_file_atomic(dir / "flat.csv", csv.str());
  write_file_atomic(dir / "trace.jsonl", newton_trace(newton));

  JsonObject domain;
  domain.add("shape", cfg.domain.shape == flatcase::DomainShape::Ball ? "ball" : "rectangle")
      .add("h", cfg.domain.h)
      .add("interior_nodes", grid.size())
      .add("boundary_nodes", grid.boundary_count());
  JsonObject pog;
  pog.add("beta", cfg.beta).add("value", flatcase::pogorelov_monitor(state));
  const double max_phi = phi.size() ? phi.maxCoeff() : 0.0;

  JsonObject report;
  report.add("status", status).add("n", cfg.n).add("k", cfg.k);
  report.add("domain", domain).add("newton", newton_json(newton)).add("pogorelov", pog);
  report.add("max_phi", max_phi)
      .add("maximum_principle", max_phi <= 0.0)
      .add("max_hessian_norm", flatcase::max_hessian_norm(state));
  if (const auto ref = quadratic_reference(cfg, grid, phi)) {
    report.add("quadratic_reference", *ref);
  }
  write_file_atomic(dir / "report.json", report.str() + "\n");
}

}  // namespace

int cmd_solve_flat(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  constexpr std::string_view kCmd = "solve-flat";
  const fs::path dir(cfg.output_dir);
  prepare_dir(dir);

  const auto grid = flatcase::build_domain(cfg.domain);
  const auto f = flat_function(cfg);
  try {
    const auto sol = flatcase::dirichlet_solve(grid, f, cfg.k, flat_newton(cfg));
    write_flat_artifacts(cfg, dir, grid, f, sol.state.phi, sol.report.newton, "converged");
    if (cfg.verbosity >= 1) {
      err << fmt::format("converged in {} Newton iterations\n", sol.report.newton.iterations);
    }
    return finish(out, dir, kCmd, "converged", kExitOk, "converged");
  } catch (const NewtonFailure& e) {
    write_flat_artifacts(cfg, dir, grid, f, e.last_iterate(), e.report(), "newton_failed");
    err << e.what() << '\n';
    return finish(out, dir, kCmd, "newton_failed", kExitSolveFailed, e.what());
  } catch (const PreconditionError& e) {
    JsonObject report;
    report.add("status", "precondition_failed").add("n", cfg.n).add("k", cfg.k).add("message", e.what());
    write_file_atomic(dir / "report.json", report.str() + "\n");
    err << e.what() << '\n';
    return finish(out, dir, kCmd, "precondition_failed", kExitPrecondition, e.what());
  }
}

namespace {

// Reads the rho column of a surface CSV.
Eigen::VectorXd read_rho_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("--surface", "cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("--surface", "empty file");
  }
  int column = -1;
  {
    std::istringstream hs(line);
    std::string cell;
    for (int c = 0; std::getline(hs, cell, ','); ++c) {
      if (cell == "rho") {
        column = c;
      }
    }
  }
  if (column < 0) {
    throw ConfigError("--surface", "no rho column in header");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c <= column; ++c) {
      if (!std::getline(ls, cell, ',')) {
        throw ConfigError("--surface", "short row at line " + std::to_string(values.size() + 2));
      }
    }
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("--surface", "bad number '" + cell + "'");
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

int cmd_verify(const RunConfig& cfg, const std::string& surface_csv, std::ostream& out, std::ostream& err) {
  const auto grid = geometry::build_grid(cfg.n, cfg.grid_mode, cfg.grid_sizes);
  geometry::RadialField rho{read_rho_column(surface_csv)};
  if (rho.rho.size() != grid.size()) {
    throw ConfigError("--surface", fmt::format("{} rows but the configured grid has {} nodes", rho.rho.size(),
                                               grid.size()));
  }
  const auto data = surface_data(cfg);
  try {
    const auto jet = geometry::surface_jet(grid, rho);
    out << verify::to_json(verify::estimate_report(jet, data.f, cfg.k, cfg.monitors)) << '\n';
    return kExitOk;
  } catch (const std::domain_error& e) {
    err << e.what() << '\n';
    out << status_json("verify", "precondition_failed", kExitPrecondition, e.what(), "") << '\n';
    return kExitPrecondition;
  }
}

namespace {

// sigma_m by summing products over all m-subsets.
double sigma_enumerate(const std::vector<double>& v, int m) {
  const int n = static_cast<int>(v.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != m) {
      continue;
    }
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        prod *= v[static_cast<std::size_t>(i)];
      }
    }
    total += prod;
  }
  return total;
}

int cone_failure_enumerate(const std::vector<double>& v, int k) {
  for (int j = 1; j <= k; ++j) {
    if (!(sigma_enumerate(v, j) > 0.0)) {
      return j;
    }
  }
  return 0;
}

std::string vector_json(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s += (i ? "," : "") + format_double(v(i));
  }
  return s + "]";
}

std::string matrix_json(const Eigen::MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += (i ? "," : "") + vector_json(m.row(i).transpose());
  }
  return s + "]";
}

}  // namespace

int cmd_oracle(const OracleArgs& args, std::ostream& out, std::ostream& err) {
  const int n = static_cast<int>(args.values.size());
  if (n < 1 || n > 12) {
    throw ConfigError("values", "expected between 1 and 12 values");
  }
  for (double v : args.values) {
    if (!std::isfinite(v)) {
      throw ConfigError("values", "values must be finite");
    }
  }
  if (args.what == "sigma") {
    if (args.m < 0 || args.m > n) {
      throw ConfigError("--m", fmt::format("must be in [0, {}]", n));
    }
    out << format_double(sigma_enumerate(args.values, args.m)) << '\n';
    return kExitOk;
  }
  if (args.k < 1 || args.k > n) {
    throw ConfigError("--k", fmt::format("must be in [1, {}]", n));
  }
  const int failing = cone_failure_enumerate(args.values, args.k);
  if (args.what == "cone") {
    out << (failing == 0 ? "inside" : "outside") << '\n';
    return kExitOk;
  }

  // derivs
  if (n < 2) {
    throw ConfigError("values", "derivs needs at least 2 values");
  }
  if (failing != 0) {
    err << fmt::format("sigma_{} <= 0: outside Gamma_{}\n", failing, args.k);
    out << "outside\n";
    return kExitPrecondition;
  }
  const int k = args.k;
  const auto g = [&](const Eigen::VectorXd& x) {
    return std::pow(sigma_enumerate(std::vector<double>(x.data(), x.data() + x.size()), k), 1.0 / k);
  };
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(args.values.data(), n);
  const double scale = std::max(1.0, x0.cwiseAbs().maxCoeff());

  // Richardson-extrapolated central differences.
  const auto d1 = [&](int i, double h) {
    Eigen::VectorXd p = x0;
    Eigen::VectorXd m = x0;
    p(i) += h;
    m(i) -= h;
    return (g(p) - g(m)) / (2.0 * h);
  };
  const auto d2 = [&](int i, int j, double h) {
    const auto at = [&](double si, double sj) {
      Eigen::VectorXd y = x0;
      y(i) += si * h;
      y(j) += sj * h;
      return g(y);
    };
    return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
  };
  const double h1 = 1e-5 * scale;
  const double h2 = 1e-4 * scale;
  Eigen::VectorXd fd_grad(n);
  Eigen::MatrixXd fd_hess(n, n);
  for (int i = 0; i < n; ++i) {
    fd_grad(i) = (4.0 * d1(i, 0.5 * h1) - d1(i, h1)) / 3.0;
    for (int j = 0; j < n; ++j) {
      fd_hess(i, j) = (4.0 * d2(i, j, 0.5 * h2) - d2(i, j, h2)) / 3.0;
    }
  }

  const auto coeffs = symm::operator_coefficients(symm::SpectrumVector(args.values, k));
  const Eigen::VectorXd& grad = coeffs.gradient;
  const Eigen::MatrixXd& hess = coeffs.hessian;

  JsonObject o;
  o.add("k", k)
      .add("sigma_k", sigma_enumerate(args.values, k))
      .add("G", g(x0))
      .raw("gradient", vector_json(grad))
      .raw("fd_gradient", vector_json(fd_grad))
      .raw("hessian", matrix_json(hess))
      .raw("fd_hessian", matrix_json(fd_hess))
      .add("max_gradient_diff", (grad - fd_grad).cwiseAbs().maxCoeff())
      .add("max_hessian_diff", (hess - fd_hess).cwiseAbs().maxCoeff());
  out << o.str() << '\n';
  return kExitOk;
}

}  // namespace etacurv::cli
