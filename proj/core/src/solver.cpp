#include "etacurv/solver.hpp"

#include "assembly.hpp"

#include "etacurv/format.hpp"
#include "etacurv/parallel.hpp"
#include "etacurv/symm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

namespace etacurv::solver {

using geometry::NodeChart;
using geometry::NodeJet;
using geometry::RadialField;
using geometry::SphereGrid;

std::string ConditionReport::failure() const {
  if (!positive) {
    return "f must be positive on the annulus";
  }
  if (!monotone_ok) {
    return "radial monotonicity of rho^k f";
  }
  if (!inner_ok) {
    return "barrier condition on |X| = r1";
  }
  if (!outer_ok) {
    return "barrier condition on |X| = r2";
  }
  return {};
}

namespace {

std::vector<SmallVec> sample_directions(int ambient, int count, unsigned seed) {
  std::vector<SmallVec> dirs;
  for (int a = 0; a < ambient; ++a) {
    SmallVec e = SmallVec::Zero(ambient);
    e(a) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<int>(dirs.size()) < count) {
    SmallVec v(ambient);
    for (int a = 0; a < ambient; ++a) {
      v(a) = normal(rng);
    }
    const double len = v.norm();
    if (len > 1e-8) {
      dirs.push_back(v / len);
    }
  }
  return dirs;
}

}  // namespace

ConditionReport validate_conditions(const PrescribedData& data, int n, int k, int samples, unsigned seed) {
  check_radii(data);
  const int ambient = n + 1;
  const double c = unit_sphere_sigma(n, k);
  const auto dirs = sample_directions(ambient, std::max(samples, 2 * ambient), seed);
  const auto normals = sample_directions(ambient, std::max(samples / 4, 2 * ambient), seed + 1);
  constexpr int kLevels = 9;

  ConditionReport rep;
  rep.samples = static_cast<int>(dirs.size());
  rep.f_min = std::numeric_limits<double>::infinity();
  rep.inner_margin = std::numeric_limits<double>::infinity();
  rep.outer_margin = std::numeric_limits<double>::infinity();
  rep.monotonicity_max = -std::numeric_limits<double>::infinity();
  double scale = 0.0;

  const auto radial = [&](double r, const SmallVec& w, const SmallVec& nu) {
    const SmallVec x = r * w;
    return std::pow(r, k) * data.f(x, nu);
  };

  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const SmallVec& w = dirs[d];
    rep.inner_margin = std::min(rep.inner_margin, data.f(data.r1 * w, w) - c / std::pow(data.r1, k));
    rep.outer_margin = std::min(rep.outer_margin, c / std::pow(data.r2, k) - data.f(data.r2 * w, w));

    // nu = w plus a rotating subset of the fixed normals.
    for (std::size_t m = 0; m <= 3; ++m) {
      const SmallVec& nu = m == 0 ? w : normals[(d * 3 + m) % normals.size()];
      for (int l = 0; l < kLevels; ++l) {
        const double r = data.r1 + (data.r2 - data.r1) * l / (kLevels - 1);
        rep.f_min = std::min(rep.f_min, data.f(r * w, nu));
        const double dr = 1e-5 * r;
        const double deriv = (radial(r + dr, w, nu) - radial(r - dr, w, nu)) / (2.0 * dr);
        rep.monotonicity_max = std::max(rep.monotonicity_max, deriv);
        scale = std::max(scale, std::abs(radial(r, w, nu)) / r);
      }
    }
  }

  const double barrier_tol = 1e-12 * c / std::pow(data.r1, k);
  const double mono_tol = 1e-7 * std::max(scale, 1e-300);
  rep.positive = rep.f_min > 0.0;
  rep.inner_ok = rep.inner_margin >= -barrier_tol;
  rep.outer_ok = rep.outer_margin >= -barrier_tol;
  rep.monotone_ok = rep.monotonicity_max <= mono_tol;
  rep.zero_margin = rep.monotone_ok && rep.monotonicity_max > -mono_tol;
  return rep;
}

double homotopy_floor(double r1, double r2, int k, double epsilon) {
  // The bracket is monotone in rho, so its extremes sit at the endpoints.
  const auto bracket = [&](double r) {
    const double inv = 1.0 / std::pow(r, k);
    return inv + epsilon * (inv - 1.0);
  };
  return std::min(bracket(r1), bracket(r2));
}

PrescribedData homotopy_f(const PrescribedData& data, int n, int k, double epsilon, double t) {
  check_radii(data);
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("homotopy parameter t = " + std::to_string(t) + " outside [0, 1]");
  }
  if (!(epsilon > 0.0)) {
    throw ConfigurationError("homotopy epsilon must be positive");
  }
  if (const double c0 = homotopy_floor(data.r1, data.r2, k, epsilon); !(c0 > 0.0)) {
    throw ConfigurationError("epsilon = " + std::to_string(epsilon) +
                             " too large for the annulus: bracket minimum " + std::to_string(c0) + " <= 0");
  }
  const double c = unit_sphere_sigma(n, k);
  PrescribedData out = data;
  out.f = [f = data.f, c, k, epsilon, t](const SmallVec& x, const SmallVec& nu) {
    const double inv = 1.0 / std::pow(x.norm(), k);
    const double start = c * (inv + epsilon * (inv - 1.0));
    if (t == 1.0) {
      return f(x, nu);
    }
    if (t == 0.0) {
      return start;
    }
    return t * f(x, nu) + (1.0 - t) * start;
  };
  return out;
}

namespace {

double node_residual(const NodeJet& nj, const SurfaceFn& f, int k, EquationForm form, int node) {
  const symm::SpectrumVector lambda(nj.eta, k);
  if (const int fail = symm::first_cone_failure(lambda); fail != 0) {
    throw geometry::EtaConvexityError(node, fail);
  }
  const double s = symm::sigma(lambda, k);
  const double rhs = f(nj.position, nj.normal);
  if (form == EquationForm::Raw) {
    return s - rhs;
  }
  return std::pow(s, 1.0 / k) - std::pow(rhs, 1.0 / k);
}

// Derivatives of the node residual with respect to the jet components
// (rho, d_a rho, covariant d_ab rho).
std::vector<double> node_derivatives(const NodeChart& chart, const NodeJet& nj, const SurfaceFn& f, int k,
                                     EquationForm form) {
  const int n = static_cast<int>(chart.ghat.size());
  const symm::SpectrumVector lambda(nj.eta, k);
  const auto co = symm::operator_coefficients(lambda);

  SmallVec f_kappa(n);
  for (int p = 0; p < n; ++p) {
    f_kappa(nj.eta_perm[static_cast<std::size_t>(p)]) = co.f_coeffs(p);
  }
  const SmallMat& v = nj.directions;
  const SmallMat p_mat = v * f_kappa.asDiagonal() * v.transpose();
  const SmallMat q_mat = v * f_kappa.cwiseProduct(nj.kappa).asDiagonal() * v.transpose();

  const double rho = nj.rho;
  const double w = std::sqrt(rho * rho + nj.grad_norm * nj.grad_norm);
  const SmallVec& d = nj.grad_rho;
  const double tr_ph = p_mat.cwiseProduct(nj.second_form).sum();

  std::vector<double> d_g(static_cast<std::size_t>(jet_size(n)), 0.0);

  {
    double tr_pdn = 0.0;
    double tr_qdg = 0.0;
    for (int a = 0; a < n; ++a) {
      tr_pdn += p_mat(a, a) * 2.0 * rho * chart.ghat(a);
      tr_qdg += q_mat(a, a) * 2.0 * rho * chart.ghat(a);
    }
    tr_pdn -= p_mat.cwiseProduct(nj.hess_rho).sum();
    const double dw = rho / w;
    d_g[0] = tr_pdn / w - tr_ph * dw / w - tr_qdg;
  }
  const SmallVec pd = p_mat * d;
  const SmallVec qd = q_mat * d;
  for (int a = 0; a < n; ++a) {
    const double dw = d(a) / (chart.ghat(a) * w);
    d_g[static_cast<std::size_t>(first_index(a))] = 4.0 * pd(a) / w - tr_ph * dw / w - 2.0 * qd(a);
    for (int b = a; b < n; ++b) {
      const double tr = a == b ? p_mat(a, a) : 2.0 * p_mat(a, b);
      d_g[static_cast<std::size_t>(second_index(n, a, b))] = -rho * tr / w;
    }
  }

  const auto fg = f_gradient(f, nj.position, nj.normal);
  std::vector<double> d_f(d_g.size(), 0.0);
  {
    const SmallVec dnu = chart.x / w - nj.normal * (rho / (w * w));
    d_f[0] = fg.d_position.dot(chart.x) + fg.d_normal.dot(dnu);
  }
  for (int a = 0; a < n; ++a) {
    const SmallVec dnu = -chart.tangent.col(a) / (chart.ghat(a) * w) - nj.normal * (d(a) / (chart.ghat(a) * w * w));
    d_f[static_cast<std::size_t>(first_index(a))] = fg.d_normal.dot(dnu);
  }

  std::vector<double> out(d_g.size());
  if (form == EquationForm::Raw) {
    const double scale = k * std::pow(co.sigma_k, 1.0 - 1.0 / k);
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c] = scale * d_g[c] - d_f[c];
    }
  } else {
    const double scale = std::pow(fg.value, 1.0 / k - 1.0) / k;
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c] = d_g[c] - scale * d_f[c];
    }
  }
  return out;
}

using detail::as_span;

Eigen::VectorXd residual_of(const SphereGrid& grid, const Eigen::VectorXd& rho, const PrescribedData& data, int k,
                            EquationForm form) {
  Eigen::VectorXd out(grid.size());
  const auto field = as_span(rho);
  parallel_for(grid.size(), [&](int i) {
    const NodeJet nj = geometry::evaluate_node(grid.chart(i), apply(grid.stencil(i), field), i);
    out(i) = node_residual(nj, data.f, k, form, i);
  });
  return out;
}

Eigen::SparseMatrix<double> analytic_jacobian(const SphereGrid& grid, const Eigen::VectorXd& rho,
                                              const PrescribedData& data, int k, EquationForm form) {
  const auto field = as_span(rho);
  return detail::assemble_jacobian(
      grid.size(), [&](int i) -> const JetStencil& { return grid.stencil(i); },
      [&](int i) {
        const NodeJet nj = geometry::evaluate_node(grid.chart(i), apply(grid.stencil(i), field), i);
        return node_derivatives(grid.chart(i), nj, data.f, k, form);
      });
}

Eigen::SparseMatrix<double> fd_jacobian(const SphereGrid& grid, const Eigen::VectorXd& rho, const PrescribedData& data,
                                        int k, EquationForm form, double step) {
  return detail::fd_jacobian(
      grid.size(), rho, [&](int i) -> const JetStencil& { return grid.stencil(i); },
      [&](int i, std::span<const double> field) {
        const NodeJet nj = geometry::evaluate_node(grid.chart(i), apply(grid.stencil(i), field), i);
        return node_residual(nj, data.f, k, form, i);
      },
      step);
}

class CurvedProblem {
public:
  CurvedProblem(const SphereGrid& grid, const PrescribedData& data, int k, const NewtonConfig& config)
      : grid_(grid),
        data_(data),
        k_(k),
        config_(config),
        lo_(data.r1 * (1.0 - config.containment_margin)),
        hi_(data.r2 * (1.0 + config.containment_margin)) {}

  std::optional<Eigen::VectorXd> try_residual(const Eigen::VectorXd& x) const {
    if (!x.allFinite() || x.minCoeff() < lo_ || x.maxCoeff() > hi_ || !(x.minCoeff() > 0.0)) {
      return std::nullopt;
    }
    try {
      return residual_of(grid_, x, data_, k_, config_.form);
    } catch (const geometry::EtaConvexityError&) {
      return std::nullopt;
    } catch (const geometry::DomainError&) {
      return std::nullopt;
    }
  }

  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x) const {
    if (config_.jacobian == JacobianMode::FiniteDifference) {
      return fd_jacobian(grid_, x, data_, k_, config_.form, config_.fd_step);
    }
    return analytic_jacobian(grid_, x, data_, k_, config_.form);
  }

private:
  const SphereGrid& grid_;
  const PrescribedData& data_;
  int k_;
  const NewtonConfig& config_;
  double lo_;
  double hi_;
};

}  // namespace

Eigen::VectorXd residual(const SphereGrid& grid, const RadialField& rho, const PrescribedData& data, int k,
                         EquationForm form) {
  if (rho.rho.size() != grid.size()) {
    throw std::invalid_argument("radial field size does not match the grid");
  }
  return residual_of(grid, rho.rho, data, k, form);
}

Eigen::SparseMatrix<double> jacobian(const SphereGrid& grid, const RadialField& rho, const PrescribedData& data, int k,
                                     const NewtonConfig& config) {
  if (config.jacobian == JacobianMode::FiniteDifference) {
    return fd_jacobian(grid, rho.rho, data, k, config.form, config.fd_step);
  }
  return analytic_jacobian(grid, rho.rho, data, k, config.form);
}

SolveResult newton_solve(const SphereGrid& grid, const RadialField& rho0, const PrescribedData& data, int k,
                         const NewtonConfig& config) {
  check_radii(data);
  if (k < 1 || k > grid.n()) {
    throw PreconditionError("order k = " + std::to_string(k) + " outside [1, n]");
  }
  if (rho0.rho.size() != grid.size()) {
    throw PreconditionError("initial radial field size does not match the grid");
  }
  const auto field = as_span(rho0.rho);
  for (int i = 0; i < grid.size(); ++i) {
    if (!(rho0.rho(i) > 0.0)) {
      throw PreconditionError("initial rho is not positive at node " + std::to_string(i));
    }
    const NodeJet nj = geometry::evaluate_node(grid.chart(i), apply(grid.stencil(i), field), i);
    if (!(data.f(nj.position, nj.normal) > 0.0)) {
      throw PreconditionError("f is not positive at node " + std::to_string(i));
    }
  }

  CurvedProblem problem(grid, data, k, config);
  NewtonSettings settings;
  settings.tol = config.tol;
  settings.max_iter = config.max_iter;
  settings.max_halvings = config.max_halvings;
  settings.on_accept = config.on_accept;
  auto [x, report] = damped_newton(problem, rho0.rho, settings);
  return {RadialField{std::move(x)}, std::move(report)};
}

ContinuationResult continue_to_target(const SphereGrid& grid, const PrescribedData& data, HomotopyRun run, int k) {
  check_radii(data);
  const int n = grid.n();
  const auto& sched = run.schedule;
  if (!(sched.dt_min > 0.0 && sched.dt0 >= sched.dt_min && sched.dt_max >= sched.dt0)) {
    throw ConfigurationError("t schedule must satisfy 0 < dt_min <= dt0 <= dt_max");
  }
  // Validates epsilon against the annulus before any work.
  static_cast<void>(homotopy_f(data, n, k, run.epsilon, 0.0));

  RadialField rho{Eigen::VectorXd::Ones(grid.size())};
  run.trace.clear();

  const auto record = [&](double t, double dt, const SolveResult& sol, const PrescribedData& data_t) {
    const auto jet = geometry::surface_jet(grid, sol.rho);
    TraceRecord rec;
    rec.t = t;
    rec.dt = dt;
    rec.newton_iterations = sol.report.iterations;
    rec.max_residual = sol.report.final_residual;
    rec.monitors = verify::estimate_report(jet, data_t.f, k, run.monitors);
    run.trace.push_back(rec);
    if (run.on_record) {
      run.on_record(rec);
    }
  };

  {
    const auto data0 = homotopy_f(data, n, k, run.epsilon, 0.0);
    auto sol = newton_solve(grid, rho, data0, k, run.newton);
    rho = sol.rho;
    record(0.0, 0.0, sol, data0);
  }

  double t = 0.0;
  double dt = sched.dt0;
  while (t < 1.0) {
    double t_try = t + dt;
    if (t_try > 1.0 - 1e-12) {
      t_try = 1.0;
    }
    const auto data_t = homotopy_f(data, n, k, run.epsilon, t_try);
    try {
      auto sol = newton_solve(grid, rho, data_t, k, run.newton);
      rho = sol.rho;
      record(t_try, t_try - t, sol, data_t);
      t = t_try;
      if (sol.report.iterations <= sched.easy_iterations) {
        dt = std::min(dt * sched.grow, sched.dt_max);
      }
    } catch (const NewtonFailure&) {
      dt *= 0.5;
      if (dt < sched.dt_min) {
        throw ContinuationStuck(t, std::move(run), std::move(rho));
      }
    }
  }
  return {std::move(rho), std::move(run)};
}

std::string trace_record_json(const TraceRecord& r) {
  std::ostringstream os;
  os << "{\"t\":" << format_double(r.t) << ",\"dt\":" << format_double(r.dt)
     << ",\"newton_iterations\":" << r.newton_iterations << ",\"max_residual\":" << format_double(r.max_residual)
     << ",\"monitors\":" << verify::to_json(r.monitors) << '}';
  return os.str();
}

}  // namespace etacurv::solver
