// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include "cli.hpp"
#include "oracles.hpp"

#include "etacurv/flatcase.hpp"
#include "etacurv/geometry.hpp"
#include "etacurv/solver.hpp"
#include "etacurv/symm.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace etacurv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "etacurv_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI on an inline config; returns the exit code.
int run_cli(const std::string& command, const json& config, const fs::path& out) {
  fs::create_directories(out);
  const fs::path cfg = out / "config.json";
  std::ofstream(cfg) << config.dump(2);
  std::ostringstream so;
  std::ostringstream se;
  return cli::run({command, "--config", cfg.string(), "--out", out.string()}, so, se);
}

json surface_config(const json& f, const json& grid) {
  return json{{"n", 2},     {"k", 2},         {"grid", grid},  {"f", f},
              {"r1", 0.5},  {"r2", 2.0},      {"epsilon", 0.01}, {"seed", 42},
              {"verbosity", 0}};
}

json round_config() {
  return surface_config({{"builtin", "power_decay"}, {"c", 1.25}, {"p", 3}},
                        {{"mode", "full-2d"}, {"sizes", {64, 32}}});
}

std::vector<json> read_trace(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<json> out;
  for (std::string line; std::getline(in, line);) {
    out.push_back(json::parse(line));
  }
  return out;
}

Outcome sigma_equivalence() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(2, 8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = dim(rng);
    const int m = std::uniform_int_distribution<int>(0, n)(rng);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) {
      x = gauss(rng);
    }
    const double ref = oracle::sigma_enumerate(v, m);
    const double got = symm::sigma(v, m);
    if (ref == 0.0) {
      worst = std::max(worst, std::abs(got));
      continue;
    }
    worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
  }
  return {worst <= 1e-12, fmt::format("max relative error {:.3e} over 10000 vectors", worst)};
}

Outcome derivative_consistency() {
  std::mt19937_64 rng(202);
  double grad_err = 0.0;
  double hess_err = 0.0;
  double euler_err = 0.0;
  double concavity = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 4;
    const int k = 1 + (trial / 4) % n;
    const auto lam = oracle::random_cone_point(rng, n, k);
    const auto c = symm::operator_coefficients(symm::SpectrumVector(lam, k));
    const auto g = [k](const std::vector<double>& v) { return oracle::g_enumerate(v, k); };
    const auto g_ext = [k](const std::vector<long double>& v) { return oracle::g_enumerate(v, k); };
    const Eigen::VectorXd fd_g = oracle::fd_gradient<long double>(g_ext, lam);
    const Eigen::MatrixXd fd_h = oracle::fd_hessian<long double>(g_ext, lam);
    grad_err = std::max(grad_err, (c.gradient - fd_g).norm() / fd_g.norm());
    if (k > 1) {
      hess_err = std::max(hess_err, (c.hessian - fd_h).norm() / fd_h.norm());
    } else {
      hess_err = std::max(hess_err, (c.hessian - fd_h).norm());
    }
    double euler = 0.0;
    for (int i = 0; i < n; ++i) {
      euler += c.gradient(i) * lam[static_cast<std::size_t>(i)];
    }
    euler_err = std::max(euler_err, std::abs(euler - c.value) / c.value);

    const auto mu = oracle::random_cone_point(rng, n, k);
    std::vector<double> mid(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) {
      mid[i] = 0.5 * (lam[i] + mu[i]);
    }
    const double slack = g(mid) - 0.5 * (g(lam) + g(mu));
    concavity = std::min(concavity, slack);
  }
  const bool ok = grad_err <= 1e-6 && hess_err <= 1e-6 && euler_err <= 1e-10 && concavity >= -1e-12;
  return {ok, fmt::format("gradient {:.2e}, hessian {:.2e}, euler {:.2e}, concavity slack {:.2e}", grad_err,
                          hess_err, euler_err, concavity)};
}

Outcome round_recovery(const fs::path& out) {
  const int code = run_cli("solve-surface", round_config(), out);
  if (code != 0) {
    return {false, fmt::format("exit code {}", code)};
  }
  const json r = json::parse(slurp(out / "report.json"));
  const double dev = r["round_reference"]["max_abs_deviation"].get<double>();
  const double defect = r["estimates"]["identity_defect"].get<double>();
  const double min_u = r["estimates"]["min_u"].get<double>();
  const bool completed = r["continuation"]["completed"].get<bool>();
  const bool ok = completed && dev < 1e-6 && defect <= 1e-6 && min_u >= 1.25 - 1e-4;
  return {ok, fmt::format("max|rho - 1.25| {:.2e}, identity defect {:.2e}, min u {:.10f}", dev, defect, min_u)};
}

Outcome axisym_recovery() {
  json cfg = surface_config({{"builtin", "power_decay"}, {"c", 12.0 * 1.2}, {"p", 3}},
                            {{"mode", "axisym-1d"}, {"sizes", {128}}});
  cfg["n"] = 3;
  const fs::path out = workdir() / "crit4";
  const int code = run_cli("solve-surface", cfg, out);
  if (code != 0) {
    return {false, fmt::format("exit code {}", code)};
  }
  const json r = json::parse(slurp(out / "report.json"));
  const double radius = r["round_reference"]["radius"].get<double>();
  const double dev = r["round_reference"]["max_abs_deviation"].get<double>();
  return {std::abs(radius - 1.2) < 1e-14 && dev < 1e-6, fmt::format("max|rho - 1.2| {:.2e}", dev)};
}

Outcome anisotropic_containment() {
  const json f = {{"builtin", "aniso_power"}, {"c", 1.25}, {"p", 3}, {"delta", 0.2}, {"axis", 2}};
  const auto data = solver::PrescribedData{solver::aniso_power(1.25, 3.0, 0.2, 2), 0.5, 2.0};
  const auto cond = solver::validate_conditions(data, 2, 2, 256, 42);
  if (!cond.pass()) {
    return {false, "validate_conditions failed: " + cond.failure()};
  }
  struct Level {
    double kappa = 0.0;
    double grad = 0.0;
  };
  std::vector<Level> levels;
  bool contained = true;
  for (int n_lat : {32, 64}) {
    const fs::path out = workdir() / fmt::format("crit5_{}", n_lat);
    const int code = run_cli("solve-surface", surface_config(f, {{"mode", "full-2d"}, {"sizes", {2 * n_lat, n_lat}}}),
                             out);
    if (code != 0) {
      return {false, fmt::format("exit code {} on {}x{}", code, 2 * n_lat, n_lat)};
    }
    const double h = geometry::build_grid(2, geometry::GridMode::Full2d, {2 * n_lat, n_lat}).spacing();
    for (const auto& rec : read_trace(out / "trace.jsonl")) {
      const double lo = rec["monitors"]["rho_min"].get<double>();
      const double hi = rec["monitors"]["rho_max"].get<double>();
      contained = contained && lo >= 0.5 - 2.0 * h && hi <= 2.0 + 2.0 * h;
    }
    const json r = json::parse(slurp(out / "report.json"));
    levels.push_back({r["estimates"]["max_abs_kappa"].get<double>(), r["estimates"]["max_grad_rho"].get<double>()});
  }
  const double dk = std::abs(levels[1].kappa - levels[0].kappa) / levels[1].kappa;
  const double dg = std::abs(levels[1].grad - levels[0].grad) / levels[1].grad;
  const bool ok = contained && dk < 0.05 && dg < 0.05;
  return {ok, fmt::format("contained {}, max|kappa| change {:.2e}, max|grad rho| change {:.2e}", contained, dk, dg)};
}

Outcome barrier_rejection() {
  const json cfg = surface_config({{"builtin", "constant"}, {"c", 1.0}}, {{"mode", "full-2d"}, {"sizes", {64, 32}}});
  const fs::path out = workdir() / "crit6";
  const int code = run_cli("solve-surface", cfg, out);
  const json r = json::parse(slurp(out / "report.json"));
  const double mono = r["conditions"]["monotonicity_max"].get<double>();
  const std::string failure = r["conditions"]["failure"].get<std::string>();
  const bool ok = code == cli::kExitPrecondition && mono > 0.0 && failure == "radial monotonicity of rho^k f";
  return {ok, fmt::format("exit code {}, monotonicity violation {:.3g}", code, mono)};
}

struct FlatLevel {
  double h = 0.0;
  double error = 0.0;
  double pogorelov = 0.0;
};

std::vector<FlatLevel> flat_levels() {
  std::vector<FlatLevel> levels;
  const auto f = flatcase::flat_constant(1.0);
  for (int inv : {16, 32, 64}) {
    flatcase::DomainSpec spec;
    spec.h = 1.0 / inv;
    const auto grid = flatcase::build_domain(spec);
    flatcase::FlatConfig cfg;
    cfg.beta = 4.0;
    const auto sol = flatcase::dirichlet_solve(grid, f, 2, cfg);
    const Eigen::VectorXd exact = grid.sample([](const SmallVec& x) { return 0.5 * (x.squaredNorm() - 1.0); });
    levels.push_back({spec.h, (sol.state.phi - exact).cwiseAbs().maxCoeff(), sol.report.pogorelov});
  }
  return levels;
}

Outcome flat_exactness(const std::vector<FlatLevel>& levels) {
  std::vector<double> h;
  std::vector<double> e;
  for (const auto& l : levels) {
    h.push_back(l.h);
    e.push_back(l.error);
  }
  const double order = oracle::fitted_order(h, e);
  return {order >= 1.8 && order <= 2.2,
          fmt::format("errors {:.3e} {:.3e} {:.3e}, fitted order {:.3f}", e[0], e[1], e[2], order)};
}

Outcome pogorelov_stability(const std::vector<FlatLevel>& levels) {
  const double a = levels[1].pogorelov;
  const double b = levels[2].pogorelov;
  const double change = std::abs(b - a) / std::abs(b);
  return {change < 0.05, fmt::format("h=1/32 {:.6f}, h=1/64 {:.6f}, change {:.2e}", a, b, change)};
}

// Symmetric difference quotient of `residual` along `dir`, Richardson-extrapolated.
Eigen::VectorXd directional_fd(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double step) {
  const auto central = [&](double s) { return Eigen::VectorXd((residual(x + s * dir) - residual(x - s * dir)) / (2 * s)); };
  return (4.0 * central(0.5 * step) - central(step)) / 3.0;
}

Outcome jacobian_oracle() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const auto grid = geometry::build_grid(2, geometry::GridMode::Full2d, {32, 16});
  const solver::PrescribedData data{solver::aniso_power(1.25, 3.0, 0.2, 2), 0.5, 2.0};
  Eigen::VectorXd rho = grid.sample([](const SmallVec& x) { return 1.2 + 0.05 * x(0) * x(2) + 0.03 * x(1); });
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    rho(i) += 1e-4 * unit(rng);
  }
  Eigen::VectorXd dir(rho.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) {
    dir(i) = unit(rng);
  }
  double curved = 0.0;
  for (auto form : {solver::EquationForm::Raw, solver::EquationForm::Root}) {
    solver::NewtonConfig cfg;
    cfg.form = form;
    const Eigen::VectorXd jv = solver::jacobian(grid, {rho}, data, 2, cfg) * dir;
    const auto res = [&](const Eigen::VectorXd& r) { return solver::residual(grid, {r}, data, 2, form); };
    const Eigen::VectorXd fd = directional_fd(res, rho, dir, 1e-5);
    curved = std::max(curved, (jv - fd).norm() / fd.norm());
  }

  flatcase::DomainSpec spec;
  spec.h = 1.0 / 16.0;
  const auto fgrid = flatcase::build_domain(spec);
  const auto f = flatcase::flat_grad_quadratic(1.0, 0.5);
  Eigen::VectorXd phi = flatcase::initial_guess(fgrid, f, 2);
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    phi(i) += 1e-4 * unit(rng);
  }
  Eigen::VectorXd fdir(phi.size());
  for (Eigen::Index i = 0; i < fdir.size(); ++i) {
    fdir(i) = unit(rng);
  }
  const flatcase::FlatConfig fcfg;
  const Eigen::VectorXd fjv = flatcase::flat_jacobian(fgrid, phi, f, 2, fcfg) * fdir;
  const auto fres = [&](const Eigen::VectorXd& p) {
    return flatcase::flat_residual(fgrid, flatcase::make_state(fgrid, p), f, 2);
  };
  const Eigen::VectorXd ffd = directional_fd(fres, phi, fdir, 1e-5);
  const double flat = (fjv - ffd).norm() / ffd.norm();

  return {curved <= 1e-5 && flat <= 1e-5, fmt::format("curved {:.2e}, flat {:.2e}", curved, flat)};
}

Outcome determinism(const fs::path& first) {
  const fs::path second = workdir() / "crit10";
  const int code = run_cli("solve-surface", round_config(), second);
  if (code != 0) {
    return {false, fmt::format("exit code {}", code)};
  }
  const std::string a = slurp(first / "report.json");
  const std::string b = slurp(second / "report.json");
  return {!a.empty() && a == b, fmt::format("report.json {} bytes, identical {}", a.size(), a == b)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, double limit, const std::function<Outcome()>& fn) {
    Timer timer;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = timer.seconds();
    if (limit > 0.0 && t > limit) {
      o.pass = false;
      o.detail += fmt::format("; runtime over {:.0f} s", limit);
    }
    failures += o.pass ? 0 : 1;
    std::cout << fmt::format("{} criterion {:>2}: {} | {} | {:.2f} s", o.pass ? "PASS" : "FAIL", id, name, o.detail, t)
              << std::endl;
  };

  const fs::path round_dir = workdir() / "crit3";
  std::vector<FlatLevel> levels;

  report(1, "sigma recurrence vs subset enumeration", 10.0, sigma_equivalence);
  report(2, "G derivatives, Euler identity, concavity", 30.0, derivative_consistency);
  report(3, "round sphere recovery n=2 k=2 64x32", 120.0, [&] { return round_recovery(round_dir); });
  report(4, "axisymmetric round recovery n=3 k=2", 60.0, axisym_recovery);
  report(5, "anisotropic containment and grid stability", 600.0, anisotropic_containment);
  report(6, "barrier rejection for constant f", 1.0, barrier_rejection);
  report(7, "flat quadratic exactness", 60.0, [&] {
    levels = flat_levels();
    return flat_exactness(levels);
  });
  report(8, "Pogorelov monitor stability", 0.0, [&] {
    if (levels.size() != 3) {
      return Outcome{false, "flat levels unavailable"};
    }
    return pogorelov_stability(levels);
  });
  report(9, "Jacobian-vector products vs residual differencing", 30.0, jacobian_oracle);
  report(10, "deterministic report JSON", 0.0, [&] { return determinism(round_dir); });

  std::cout << fmt::format("{} of 10 criteria passed", 10 - failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
