#include "etacurv/flatcase.hpp"

#include "assembly.hpp"
#include "etacurv/format.hpp"
#include "etacurv/symm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

namespace etacurv::flatcase {

namespace {

// Interior nodes closer than this fraction of a stencil arm to the boundary
// are moved onto it (phi = 0) instead of carrying a near-singular ghost.
constexpr double kSnapFraction = 1e-6;

struct Lattice {
  std::vector<int> dims;
  std::vector<int> strides;
  std::vector<int> offset;  // index shift so that lattice index 0 maps to `origin`
  SmallVec origin;
  double h = 0.0;

  [[nodiscard]] int total() const {
    int t = 1;
    for (int d : dims) {
      t *= d;
    }
    return t;
  }

  [[nodiscard]] std::vector<int> unflatten(int flat) const {
    std::vector<int> idx(dims.size());
    for (std::size_t a = 0; a < dims.size(); ++a) {
      idx[a] = (flat / strides[a]) % dims[a];
    }
    return idx;
  }

  [[nodiscard]] std::optional<int> flatten(const std::vector<int>& idx) const {
    int flat = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      if (idx[a] < 0 || idx[a] >= dims[a]) {
        return std::nullopt;
      }
      flat += idx[a] * strides[a];
    }
    return flat;
  }

  [[nodiscard]] SmallVec point(const std::vector<int>& idx) const {
    SmallVec p(static_cast<Eigen::Index>(dims.size()));
    for (std::size_t a = 0; a < dims.size(); ++a) {
      p(static_cast<Eigen::Index>(a)) = origin(static_cast<Eigen::Index>(a)) + h * idx[a];
    }
    return p;
  }
};

class Domain {
public:
  explicit Domain(const DomainSpec& spec) : spec_(spec) {}

  [[nodiscard]] bool inside(const SmallVec& x) const {
    if (spec_.shape == DomainShape::Ball) {
      return x.norm() < spec_.radius * (1.0 - 1e-12);
    }
    const double tiny = 1e-12 * spec_.h;
    for (int a = 0; a < spec_.n; ++a) {
      if (!(x(a) > spec_.lower[static_cast<std::size_t>(a)] + tiny &&
            x(a) < spec_.upper[static_cast<std::size_t>(a)] - tiny)) {
        return false;
      }
    }
    return true;
  }

  // Fraction s in (0, 1] along p -> e where the boundary is crossed; p inside.
  [[nodiscard]] double crossing(const SmallVec& p, const SmallVec& e) const {
    const SmallVec d = e - p;
    if (spec_.shape == DomainShape::Ball) {
      const double a = d.squaredNorm();
      const double b = 2.0 * p.dot(d);
      const double c = p.squaredNorm() - spec_.radius * spec_.radius;
      const double s = (-b + std::sqrt(std::max(b * b - 4.0 * a * c, 0.0))) / (2.0 * a);
      return std::clamp(s, 0.0, 1.0);
    }
    double s = 1.0;
    for (int a = 0; a < spec_.n; ++a) {
      if (d(a) > 0.0) {
        s = std::min(s, (spec_.upper[static_cast<std::size_t>(a)] - p(a)) / d(a));
      } else if (d(a) < 0.0) {
        s = std::min(s, (spec_.lower[static_cast<std::size_t>(a)] - p(a)) / d(a));
      }
    }
    return std::clamp(s, 0.0, 1.0);
  }

private:
  const DomainSpec& spec_;
};

// Lattice offsets used by the stencils: +-e_a and +-e_a +- e_b.
std::vector<std::vector<int>> stencil_offsets(int n) {
  std::vector<std::vector<int>> out;
  for (int a = 0; a < n; ++a) {
    for (int s : {1, -1}) {
      std::vector<int> o(static_cast<std::size_t>(n), 0);
      o[static_cast<std::size_t>(a)] = s;
      out.push_back(o);
    }
    for (int b = a + 1; b < n; ++b) {
      for (int sa : {1, -1}) {
        for (int sb : {1, -1}) {
          std::vector<int> o(static_cast<std::size_t>(n), 0);
          o[static_cast<std::size_t>(a)] = sa;
          o[static_cast<std::size_t>(b)] = sb;
          out.push_back(o);
        }
      }
    }
  }
  return out;
}

std::vector<int> shifted(const std::vector<int>& idx, const std::vector<int>& off) {
  std::vector<int> out = idx;
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a] += off[a];
  }
  return out;
}

}  // namespace

DomainShape parse_shape(const std::string& name) {
  if (name == "ball") {
    return DomainShape::Ball;
  }
  if (name == "rectangle") {
    return DomainShape::Rectangle;
  }
  throw std::invalid_argument("unknown domain shape '" + name + "' (expected ball or rectangle)");
}

int DomainGrid::boundary_count() const noexcept {
  return static_cast<int>(std::count(mask_.begin(), mask_.end(), NodeKind::Boundary));
}

DomainGrid build_domain(const DomainSpec& spec) {
  if (spec.n < 2 || spec.n + 1 > kMaxAmbient) {
    throw std::invalid_argument("flat domain dimension must be in [2, " + std::to_string(kMaxAmbient - 1) + "]");
  }
  if (!(spec.h > 0.0)) {
    throw std::invalid_argument("grid spacing must be positive");
  }
  const int n = spec.n;
  Lattice lat;
  lat.h = spec.h;
  lat.dims.resize(static_cast<std::size_t>(n));
  lat.strides.resize(static_cast<std::size_t>(n));
  lat.origin.resize(n);
  if (spec.shape == DomainShape::Ball) {
    if (!(spec.radius > 0.0)) {
      throw std::invalid_argument("ball radius must be positive");
    }
    const int m = static_cast<int>(std::ceil(spec.radius / spec.h)) + 1;
    for (int a = 0; a < n; ++a) {
      lat.dims[static_cast<std::size_t>(a)] = 2 * m + 1;
      lat.origin(a) = -m * spec.h;
    }
  } else {
    if (static_cast<int>(spec.lower.size()) != n || static_cast<int>(spec.upper.size()) != n) {
      throw std::invalid_argument("rectangle corners must have n coordinates");
    }
    for (int a = 0; a < n; ++a) {
      const double extent = spec.upper[static_cast<std::size_t>(a)] - spec.lower[static_cast<std::size_t>(a)];
      const double cells = extent / spec.h;
      const int rounded = static_cast<int>(std::lround(cells));
      if (!(extent > 0.0) || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells) || rounded < 2) {
        throw std::invalid_argument("rectangle extents must be positive multiples (>= 2) of h");
      }
      lat.dims[static_cast<std::size_t>(a)] = rounded + 1;
      lat.origin(a) = spec.lower[static_cast<std::size_t>(a)];
    }
  }
  int stride = 1;
  for (int a = n - 1; a >= 0; --a) {
    lat.strides[static_cast<std::size_t>(a)] = stride;
    stride *= lat.dims[static_cast<std::size_t>(a)];
  }

  DomainGrid grid;
  grid.spec_ = spec;
  const Domain dom(grid.spec_);
  const auto offsets = stencil_offsets(n);
  const int total = lat.total();

  std::vector<char> geometric_inside(static_cast<std::size_t>(total), 0);
  for (int f = 0; f < total; ++f) {
    geometric_inside[static_cast<std::size_t>(f)] = dom.inside(lat.point(lat.unflatten(f))) ? 1 : 0;
  }

  // Unknown numbering; snapped nodes become boundary.
  grid.mask_.assign(static_cast<std::size_t>(total), NodeKind::Outside);
  std::vector<int> unknown(static_cast<std::size_t>(total), -1);
  for (int f = 0; f < total; ++f) {
    if (!geometric_inside[static_cast<std::size_t>(f)]) {
      continue;
    }
    const auto idx = lat.unflatten(f);
    const SmallVec p = lat.point(idx);
    bool snapped = false;
    for (const auto& off : offsets) {
      const auto nb = lat.flatten(shifted(idx, off));
      if (nb && !geometric_inside[static_cast<std::size_t>(*nb)] &&
          dom.crossing(p, lat.point(shifted(idx, off))) < kSnapFraction) {
        snapped = true;
        break;
      }
    }
    if (snapped) {
      grid.mask_[static_cast<std::size_t>(f)] = NodeKind::Boundary;
      continue;
    }
    grid.mask_[static_cast<std::size_t>(f)] = NodeKind::Interior;
    unknown[static_cast<std::size_t>(f)] = static_cast<int>(grid.points_.size());
    grid.points_.push_back(p);
  }

  const double h = spec.h;
  for (int f = 0; f < total; ++f) {
    const int self = unknown[static_cast<std::size_t>(f)];
    if (self < 0) {
      continue;
    }
    const auto idx = lat.unflatten(f);
    const SmallVec p = lat.point(idx);

    // Term for the lattice neighbor at `off` with weight w.
    const auto ref = [&](const std::vector<int>& off, double w, Stencil& out) {
      const auto nidx = shifted(idx, off);
      const auto nb = lat.flatten(nidx);
      if (nb && unknown[static_cast<std::size_t>(*nb)] >= 0) {
        out.push_back({unknown[static_cast<std::size_t>(*nb)], w});
        return;
      }
      if (nb) {
        grid.mask_[static_cast<std::size_t>(*nb)] = NodeKind::Boundary;
      }
      if (nb && geometric_inside[static_cast<std::size_t>(*nb)]) {
        return;  // snapped node: phi = 0 exactly
      }
      const double s = dom.crossing(p, lat.point(nidx));
      out.push_back({self, w * (1.0 - 1.0 / s)});
    };

    JetStencil js;
    js.dim = n;
    js.components.assign(static_cast<std::size_t>(jet_size(n)), Stencil{});
    js.components[0] = {{self, 1.0}};
    for (int a = 0; a < n; ++a) {
      std::vector<int> e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(a)] = 1;
      std::vector<int> me = e;
      me[static_cast<std::size_t>(a)] = -1;

      Stencil& d1 = js.components[static_cast<std::size_t>(first_index(a))];
      ref(e, 0.5 / h, d1);
      ref(me, -0.5 / h, d1);

      Stencil& d2 = js.components[static_cast<std::size_t>(second_index(n, a, a))];
      ref(e, 1.0 / (h * h), d2);
      ref(me, 1.0 / (h * h), d2);
      d2.push_back({self, -2.0 / (h * h)});

      for (int b = a + 1; b < n; ++b) {
        Stencil& dx = js.components[static_cast<std::size_t>(second_index(n, a, b))];
        const double w = 0.25 / (h * h);
        for (int sa : {1, -1}) {
          for (int sb : {1, -1}) {
            std::vector<int> o(static_cast<std::size_t>(n), 0);
            o[static_cast<std::size_t>(a)] = sa;
            o[static_cast<std::size_t>(b)] = sb;
            ref(o, w * sa * sb, dx);
          }
        }
      }
    }
    grid.stencils_.push_back(std::move(js));
  }
  return grid;
}

FlatFn flat_constant(double c) {
  return [c](const SmallVec&, double, const SmallVec&) { return c; };
}

FlatFn flat_grad_quadratic(double c, double a) {
  return [c, a](const SmallVec&, double, const SmallVec& g) { return c + a * g.squaredNorm(); };
}

FlatFn flat_tabulated_radial(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() != values.size() || radii.size() < 2) {
    throw std::invalid_argument("tabulated f needs matching radii/values arrays of length >= 2");
  }
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) {
      throw std::invalid_argument("tabulated radii must be strictly increasing");
    }
  }
  return [radii = std::move(radii), values = std::move(values)](const SmallVec& x, double, const SmallVec&) {
    const double r = x.norm();
    if (r <= radii.front()) {
      return values.front();
    }
    if (r >= radii.back()) {
      return values.back();
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(radii.begin(), radii.end(), r) - radii.begin());
    const std::size_t lo = hi - 1;
    const double s = (r - radii[lo]) / (radii[hi] - radii[lo]);
    return (1.0 - s) * values[lo] + s * values[hi];
  };
}

EtaConvexityError::EtaConvexityError(int node, int failing_order)
    : std::domain_error("(eta,k)-convexity violated at interior node " + std::to_string(node) + ": sigma_" +
                        std::to_string(failing_order) + " <= 0"),
      node_(node),
      order_(failing_order) {}

namespace {

using detail::as_span;

struct NodeEval {
  LocalJet jet;
  SmallMat eta;
  SmallVec lambda;  // ascending
  SmallMat vectors;
};

NodeEval eval_node(const DomainGrid& grid, int i, std::span<const double> phi) {
  NodeEval e;
  e.jet = apply(grid.stencil(i), phi);
  const int n = grid.n();
  e.eta = e.jet.second.trace() * SmallMat::Identity(n, n) - e.jet.second;
  Eigen::SelfAdjointEigenSolver<SmallMat> es(e.eta);
  e.lambda = es.eigenvalues();
  e.vectors = es.eigenvectors();
  return e;
}

std::vector<double> to_std(const SmallVec& v) { return {v.data(), v.data() + v.size()}; }

double node_residual(const DomainGrid& grid, int i, std::span<const double> phi, const FlatFn& f, int k,
                     EquationForm form) {
  const NodeEval e = eval_node(grid, i, phi);
  const symm::SpectrumVector lambda(to_std(e.lambda), k);
  if (const int fail = symm::first_cone_failure(lambda); fail != 0) {
    throw EtaConvexityError(i, fail);
  }
  const double s = symm::sigma(lambda, k);
  const double rhs = f(grid.point(i), e.jet.value, e.jet.first);
  return form == EquationForm::Raw ? s - rhs : std::pow(s, 1.0 / k) - std::pow(rhs, 1.0 / k);
}

std::vector<double> node_derivatives(const DomainGrid& grid, int i, std::span<const double> phi, const FlatFn& f,
                                     int k, EquationForm form) {
  const int n = grid.n();
  const NodeEval e = eval_node(grid, i, phi);
  const symm::SpectrumVector lambda(to_std(e.lambda), k);
  const auto co = symm::operator_coefficients(lambda);
  const SmallVec grad_g = co.gradient;
  const SmallMat dg_deta = e.vectors * grad_g.asDiagonal() * e.vectors.transpose();
  const double tr = dg_deta.trace();

  std::vector<double> d_g(static_cast<std::size_t>(jet_size(n)), 0.0);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      d_g[static_cast<std::size_t>(second_index(n, a, b))] = a == b ? tr - dg_deta(a, a) : -2.0 * dg_deta(a, b);
    }
  }

  // f-dependence on phi and grad phi by central differences.
  const SmallVec& x = grid.point(i);
  const double fv = f(x, e.jet.value, e.jet.first);
  std::vector<double> d_f(d_g.size(), 0.0);
  {
    const double hp = 1e-6 * std::max(1.0, std::abs(e.jet.value));
    d_f[0] = (f(x, e.jet.value + hp, e.jet.first) - f(x, e.jet.value - hp, e.jet.first)) / (2.0 * hp);
  }
  SmallVec g = e.jet.first;
  for (int a = 0; a < n; ++a) {
    const double ga = g(a);
    const double hg = 1e-6 * std::max(1.0, std::abs(ga));
    g(a) = ga + hg;
    const double fp = f(x, e.jet.value, g);
    g(a) = ga - hg;
    const double fm = f(x, e.jet.value, g);
    g(a) = ga;
    d_f[static_cast<std::size_t>(first_index(a))] = (fp - fm) / (2.0 * hg);
  }

  std::vector<double> out(d_g.size());
  if (form == EquationForm::Raw) {
    const double scale = k * std::pow(co.sigma_k, 1.0 - 1.0 / k);
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c] = scale * d_g[c] - d_f[c];
    }
  } else {
    const double scale = std::pow(fv, 1.0 / k - 1.0) / k;
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c] = d_g[c] - scale * d_f[c];
    }
  }
  return out;
}

Eigen::VectorXd residual_of(const DomainGrid& grid, const Eigen::VectorXd& phi, const FlatFn& f, int k,
                            EquationForm form) {
  Eigen::VectorXd out(grid.size());
  const auto field = as_span(phi);
  parallel_for(grid.size(), [&](int i) { out(i) = node_residual(grid, i, field, f, k, form); });
  return out;
}

class FlatProblem {
public:
  FlatProblem(const DomainGrid& grid, const FlatFn& f, int k, const FlatConfig& config)
      : grid_(grid), f_(f), k_(k), config_(config) {}

  std::optional<Eigen::VectorXd> try_residual(const Eigen::VectorXd& x) const {
    if (!x.allFinite()) {
      return std::nullopt;
    }
    try {
      return residual_of(grid_, x, f_, k_, config_.form);
    } catch (const EtaConvexityError&) {
      return std::nullopt;
    }
  }

  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x) const {
    return flat_jacobian(grid_, x, f_, k_, config_);
  }

private:
  const DomainGrid& grid_;
  const FlatFn& f_;
  int k_;
  const FlatConfig& config_;
};

SmallVec domain_center(const DomainSpec& spec) {
  SmallVec c = SmallVec::Zero(spec.n);
  if (spec.shape == DomainShape::Rectangle) {
    for (int a = 0; a < spec.n; ++a) {
      c(a) = 0.5 * (spec.lower[static_cast<std::size_t>(a)] + spec.upper[static_cast<std::size_t>(a)]);
    }
  }
  return c;
}

}  // namespace

FlatState make_state(const DomainGrid& grid, Eigen::VectorXd phi, double beta) {
  if (phi.size() != grid.size()) {
    throw std::invalid_argument("phi size does not match the domain grid");
  }
  FlatState s;
  s.beta = beta;
  s.phi = std::move(phi);
  const auto field = as_span(s.phi);
  const auto count = static_cast<std::size_t>(grid.size());
  s.gradient.resize(count);
  s.hessian.resize(count);
  s.eta.resize(count);
  s.spectrum.resize(count);
  for (int i = 0; i < grid.size(); ++i) {
    const NodeEval e = eval_node(grid, i, field);
    const auto u = static_cast<std::size_t>(i);
    s.gradient[u] = e.jet.first;
    s.hessian[u] = e.jet.second;
    s.eta[u] = e.eta;
    s.spectrum[u] = to_std(e.lambda);
  }
  return s;
}

Eigen::VectorXd flat_residual(const DomainGrid& grid, const FlatState& state, const FlatFn& f, int k,
                              EquationForm form) {
  if (state.phi.size() != grid.size()) {
    throw std::invalid_argument("state size does not match the domain grid");
  }
  return residual_of(grid, state.phi, f, k, form);
}

Eigen::SparseMatrix<double> flat_jacobian(const DomainGrid& grid, const Eigen::VectorXd& phi, const FlatFn& f, int k,
                                          const FlatConfig& config) {
  const auto stencil_of = [&](int i) -> const JetStencil& { return grid.stencil(i); };
  if (config.jacobian == JacobianMode::FiniteDifference) {
    return detail::fd_jacobian(
        grid.size(), phi, stencil_of,
        [&](int i, std::span<const double> field) { return node_residual(grid, i, field, f, k, config.form); },
        config.fd_step);
  }
  const auto field = as_span(phi);
  return detail::assemble_jacobian(grid.size(), stencil_of,
                                   [&](int i) { return node_derivatives(grid, i, field, f, k, config.form); });
}

Eigen::VectorXd initial_guess(const DomainGrid& grid, const FlatFn& f, int k) {
  const auto& spec = grid.spec();
  const int n = spec.n;
  const SmallVec center = domain_center(spec);
  const double f0 = f(center, 0.0, SmallVec::Zero(n));
  if (!(f0 > 0.0)) {
    throw PreconditionError("f must be positive; f(center, 0, 0) = " + std::to_string(f0));
  }
  const double unit = symm::binomial(n, k) * std::pow(n - 1.0, k);
  const double s = std::pow(f0 / unit, 1.0 / k);
  double radius = spec.radius;
  if (spec.shape == DomainShape::Rectangle) {
    radius = 0.0;
    for (int a = 0; a < n; ++a) {
      const double half = 0.5 * (spec.upper[static_cast<std::size_t>(a)] - spec.lower[static_cast<std::size_t>(a)]);
      radius += half * half;
    }
    radius = std::sqrt(radius);
  }
  return grid.sample([&](const SmallVec& x) { return 0.5 * s * ((x - center).squaredNorm() - radius * radius); });
}

FlatSolution dirichlet_solve(const DomainGrid& grid, const FlatFn& f, int k, const FlatConfig& config) {
  if (k < 1 || k > grid.n()) {
    throw PreconditionError("order k = " + std::to_string(k) + " outside [1, n]");
  }
  if (grid.size() == 0) {
    throw PreconditionError("domain grid has no interior nodes");
  }
  Eigen::VectorXd phi0 = initial_guess(grid, f, k);
  {
    const auto field = as_span(phi0);
    for (int i = 0; i < grid.size(); ++i) {
      const LocalJet jet = apply(grid.stencil(i), field);
      if (!(f(grid.point(i), jet.value, jet.first) > 0.0)) {
        throw PreconditionError("f is not positive at interior node " + std::to_string(i));
      }
    }
  }

  FlatProblem problem(grid, f, k, config);
  NewtonSettings settings;
  settings.tol = config.tol;
  settings.max_iter = config.max_iter;
  settings.max_halvings = config.max_halvings;
  settings.on_accept = config.on_accept;
  auto [phi, newton] = damped_newton(problem, std::move(phi0), settings);

  FlatSolution sol;
  sol.state = make_state(grid, std::move(phi), config.beta);
  sol.report.newton = std::move(newton);
  sol.report.pogorelov = pogorelov_monitor(sol.state);
  sol.report.max_phi = sol.state.phi.maxCoeff();
  sol.report.max_hessian_norm = max_hessian_norm(sol.state);
  return sol;
}

double pogorelov_monitor(const FlatState& state) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < state.phi.size(); ++i) {
    const double depth = std::max(-state.phi(i), 0.0);
    const double lap = state.hessian[static_cast<std::size_t>(i)].trace();
    out = std::max(out, std::pow(depth, state.beta) * lap);
  }
  return out;
}

double max_hessian_norm(const FlatState& state) {
  double out = 0.0;
  for (const auto& hess : state.hessian) {
    Eigen::SelfAdjointEigenSolver<SmallMat> es(hess, Eigen::EigenvaluesOnly);
    out = std::max(out, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return out;
}

void write_flat_csv(std::ostream& os, const DomainGrid& grid, const FlatState& state, const FlatFn& f, int k) {
  const int n = grid.n();
  const Eigen::VectorXd res = flat_residual(grid, state, f, k);
  for (int a = 0; a < n; ++a) {
    os << 'x' << a << ',';
  }
  os << "phi,laplacian";
  for (int a = 0; a < n; ++a) {
    os << ",lambda" << a;
  }
  os << ",residual,pogorelov\n";
  for (int i = 0; i < grid.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    for (int a = 0; a < n; ++a) {
      os << format_double(grid.point(i)(a)) << ',';
    }
    const double lap = state.hessian[u].trace();
    os << format_double(state.phi(i)) << ',' << format_double(lap);
    for (double l : state.spectrum[u]) {
      os << ',' << format_double(l);
    }
    os << ',' << format_double(res(i)) << ','
       << format_double(std::pow(std::max(-state.phi(i), 0.0), state.beta) * lap) << '\n';
  }
}

}  // namespace etacurv::flatcase
