#include "etacurv/geometry.hpp"

#include "etacurv/format.hpp"
#include "etacurv/symm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace etacurv::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

// Area of the unit m-sphere.
double sphere_area(int m) {
  const double half = 0.5 * (m + 1);
  return 2.0 * std::pow(kPi, half) / std::tgamma(half);
}

class Full2dBuilder {
public:
  Full2dBuilder(int n_lon, int n_lat) : n_lon_(n_lon), n_lat_(n_lat) {}

  // Index of the node at (i, j), reflecting across the poles: the point at
  // polar index -1 is polar index 0 half a period away in longitude.
  [[nodiscard]] int operator()(int i, int j) const {
    if (j < 0) {
      j = -j - 1;
      i += n_lon_ / 2;
    } else if (j >= n_lat_) {
      j = 2 * n_lat_ - 1 - j;
      i += n_lon_ / 2;
    }
    i = ((i % n_lon_) + n_lon_) % n_lon_;
    return j * n_lon_ + i;
  }

private:
  int n_lon_;
  int n_lat_;
};

}  // namespace

GridMode parse_grid_mode(const std::string& name) {
  if (name == "full-2d") {
    return GridMode::Full2d;
  }
  if (name == "axisym-1d") {
    return GridMode::Axisym1d;
  }
  throw std::invalid_argument("unknown grid mode '" + name + "' (expected full-2d or axisym-1d)");
}

std::string to_string(GridMode mode) {
  return mode == GridMode::Full2d ? "full-2d" : "axisym-1d";
}

double SphereGrid::spacing() const noexcept {
  return mode_ == GridMode::Full2d ? std::max(d_theta_, d_phi_) : d_theta_;
}

SphereGrid build_grid(int n, GridMode mode, GridSizes sizes, double lon_origin) {
  if (n < 2) {
    throw std::invalid_argument("unsupported dimension n = " + std::to_string(n) +
                                ": the eta-spectrum needs n >= 2");
  }
  if (n + 1 > kMaxAmbient) {
    throw std::invalid_argument("dimension n = " + std::to_string(n) + " exceeds the supported maximum " +
                                std::to_string(kMaxAmbient - 1));
  }
  if (mode == GridMode::Full2d && n != 2) {
    throw std::invalid_argument("full-2d grids require n = 2; use axisym-1d for n = " + std::to_string(n));
  }
  if (sizes.n_lat < 8 || (mode == GridMode::Full2d && sizes.n_lon < 8)) {
    throw std::invalid_argument("grid resolution must be at least 8 per direction");
  }
  if (mode == GridMode::Full2d && sizes.n_lon % 2 != 0) {
    throw std::invalid_argument("longitude count must be even for across-pole reflection");
  }

  SphereGrid g;
  g.n_ = n;
  g.mode_ = mode;
  g.n_lat_ = sizes.n_lat;
  g.n_lon_ = mode == GridMode::Full2d ? sizes.n_lon : 1;
  g.d_theta_ = kPi / g.n_lat_;
  g.d_phi_ = mode == GridMode::Full2d ? 2.0 * kPi / g.n_lon_ : 0.0;

  const int total = g.n_lat_ * g.n_lon_;
  g.theta_.resize(static_cast<std::size_t>(total));
  g.phi_.resize(static_cast<std::size_t>(total));
  g.charts_.resize(static_cast<std::size_t>(total));
  g.stencils_.resize(static_cast<std::size_t>(total));
  g.weights_.resize(total);

  const int dim = n;
  const int ambient = n + 1;
  const double dt = g.d_theta_;

  for (int j = 0; j < g.n_lat_; ++j) {
    const double th = (j + 0.5) * dt;
    const double st = std::sin(th);
    const double ct = std::cos(th);
    for (int i = 0; i < g.n_lon_; ++i) {
      const int node = g.index(i, j);
      const double ph = mode == GridMode::Full2d ? lon_origin + i * g.d_phi_ : 0.0;
      g.theta_[static_cast<std::size_t>(node)] = th;
      g.phi_[static_cast<std::size_t>(node)] = ph;

      NodeChart& c = g.charts_[static_cast<std::size_t>(node)];
      c.x = SmallVec::Zero(ambient);
      c.tangent = SmallMat::Zero(ambient, dim);
      c.ghat = SmallVec::Constant(dim, st * st);
      c.ghat(0) = 1.0;
      if (mode == GridMode::Full2d) {
        const double sp = std::sin(ph);
        const double cp = std::cos(ph);
        c.x << st * cp, st * sp, ct;
        c.tangent.col(0) << ct * cp, ct * sp, -st;
        c.tangent.col(1) << -st * sp, st * cp, 0.0;
        g.weights_(node) = st * dt * g.d_phi_;
      } else {
        // Meridian plane spanned by e_1 and e_{n+1}; parallels along e_2..e_n.
        c.x(0) = st;
        c.x(ambient - 1) = ct;
        c.tangent(0, 0) = ct;
        c.tangent(ambient - 1, 0) = -st;
        for (int m = 1; m < dim; ++m) {
          c.tangent(m, m) = st;
        }
        g.weights_(node) = sphere_area(n - 1) * std::pow(st, n - 1) * dt;
      }

      JetStencil& js = g.stencils_[static_cast<std::size_t>(node)];
      js.dim = dim;
      js.components.assign(static_cast<std::size_t>(jet_size(dim)), Stencil{});
      js.components[0] = {{node, 1.0}};

      if (mode == GridMode::Full2d) {
        const Full2dBuilder at(g.n_lon_, g.n_lat_);
        const double dp = g.d_phi_;
        Stencil d_th = {{at(i, j + 1), 0.5 / dt}, {at(i, j - 1), -0.5 / dt}};
        Stencil d_ph = {{at(i + 1, j), 0.5 / dp}, {at(i - 1, j), -0.5 / dp}};
        Stencil d_thth = {{at(i, j + 1), 1.0 / (dt * dt)}, {node, -2.0 / (dt * dt)}, {at(i, j - 1), 1.0 / (dt * dt)}};
        Stencil d_phph = {{at(i + 1, j), 1.0 / (dp * dp)}, {node, -2.0 / (dp * dp)}, {at(i - 1, j), 1.0 / (dp * dp)}};
        const double wx = 0.25 / (dt * dp);
        Stencil d_thph = {{at(i + 1, j + 1), wx}, {at(i - 1, j + 1), -wx}, {at(i + 1, j - 1), -wx}, {at(i - 1, j - 1), wx}};

        // Covariant Hessian on S^2: Gamma^theta_phiphi = -sin cos, Gamma^phi_thetaphi = cot.
        accumulate(d_thph, d_ph, -ct / st);
        accumulate(d_phph, d_th, st * ct);

        js.components[static_cast<std::size_t>(first_index(0))] = d_th;
        js.components[static_cast<std::size_t>(first_index(1))] = d_ph;
        js.components[static_cast<std::size_t>(second_index(dim, 0, 0))] = d_thth;
        js.components[static_cast<std::size_t>(second_index(dim, 0, 1))] = d_thph;
        js.components[static_cast<std::size_t>(second_index(dim, 1, 1))] = d_phph;
      } else {
        // Even reflection across each pole.
        const int up = j + 1 < g.n_lat_ ? j + 1 : j;
        const int down = j - 1 >= 0 ? j - 1 : j;
        Stencil d_th = {{up, 0.5 / dt}, {down, -0.5 / dt}};
        Stencil d_thth = {{up, 1.0 / (dt * dt)}, {node, -2.0 / (dt * dt)}, {down, 1.0 / (dt * dt)}};
        js.components[static_cast<std::size_t>(first_index(0))] = d_th;
        js.components[static_cast<std::size_t>(second_index(dim, 0, 0))] = d_thth;
        for (int m = 1; m < dim; ++m) {
          Stencil parallel;
          accumulate(parallel, d_th, st * ct);
          js.components[static_cast<std::size_t>(second_index(dim, m, m))] = parallel;
        }
      }
    }
  }
  return g;
}

EtaConvexityError::EtaConvexityError(int node, int failing_order)
    : std::domain_error("(eta," + std::string("k)-convexity violated at node ") + std::to_string(node) +
                        ": sigma_" + std::to_string(failing_order) + " <= 0"),
      node_(node),
      order_(failing_order) {}

NodeJet evaluate_node(const NodeChart& chart, const LocalJet& jet, int node) {
  const int n = static_cast<int>(chart.ghat.size());
  NodeJet out;
  out.rho = jet.value;
  if (!(out.rho > 0.0)) {
    throw DomainError(node, "non-positive rho at node " + std::to_string(node));
  }
  out.grad_rho = jet.first;
  out.hess_rho = jet.second;

  double grad2 = 0.0;
  for (int a = 0; a < n; ++a) {
    grad2 += jet.first(a) * jet.first(a) / chart.ghat(a);
  }
  out.grad_norm = std::sqrt(grad2);
  const double rho = out.rho;
  const double w = std::sqrt(rho * rho + grad2);

  const SmallMat ghat = chart.ghat.asDiagonal();
  const SmallMat dd = jet.first * jet.first.transpose();
  out.metric = rho * rho * ghat + dd;
  out.second_form = (rho * rho * ghat + 2.0 * dd - rho * jet.second) / w;

  SmallVec grad_ambient = SmallVec::Zero(chart.x.size());
  for (int a = 0; a < n; ++a) {
    grad_ambient += (jet.first(a) / chart.ghat(a)) * chart.tangent.col(a);
  }
  out.position = rho * chart.x;
  out.normal = (rho * chart.x - grad_ambient) / w;
  out.support = out.position.dot(out.normal);

  Eigen::GeneralizedSelfAdjointEigenSolver<SmallMat> es(out.second_form, out.metric,
                                                        Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw NumericalError(node, "generalized eigen-decomposition failed at node " + std::to_string(node));
  }
  // Eigen returns ascending eigenvalues; store kappa descending.
  out.kappa = es.eigenvalues().reverse();
  out.directions = es.eigenvectors().rowwise().reverse();
  out.mean_curvature = out.kappa.sum();

  out.eta.resize(static_cast<std::size_t>(n));
  out.eta_perm.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    // kappa descending makes H - kappa ascending with the identity permutation.
    out.eta[static_cast<std::size_t>(p)] = out.mean_curvature - out.kappa(p);
    out.eta_perm[static_cast<std::size_t>(p)] = p;
  }
  return out;
}

SurfaceJet surface_jet(const SphereGrid& grid, const RadialField& rho) {
  if (rho.rho.size() != grid.size()) {
    throw std::invalid_argument("radial field has " + std::to_string(rho.rho.size()) + " values for " +
                                std::to_string(grid.size()) + " grid nodes");
  }
  for (int i = 0; i < grid.size(); ++i) {
    if (!(rho.rho(i) > 0.0)) {
      throw DomainError(i, "non-positive rho at node " + std::to_string(i));
    }
  }
  const std::span<const double> field(rho.rho.data(), static_cast<std::size_t>(rho.rho.size()));
  SurfaceJet out(static_cast<std::size_t>(grid.size()));
  for (int i = 0; i < grid.size(); ++i) {
    out[static_cast<std::size_t>(i)] = evaluate_node(grid.chart(i), apply(grid.stencil(i), field), i);
  }
  return out;
}

Eigen::VectorXd sigma_k_of_eta(const SurfaceJet& jet, int k) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(jet.size()));
  for (std::size_t i = 0; i < jet.size(); ++i) {
    const symm::SpectrumVector lambda(jet[i].eta, k);
    if (const int fail = symm::first_cone_failure(lambda); fail != 0) {
      throw EtaConvexityError(static_cast<int>(i), fail);
    }
    out(static_cast<Eigen::Index>(i)) = symm::sigma(lambda, k);
  }
  return out;
}

void write_surface_csv(std::ostream& os, const SphereGrid& grid, const SurfaceJet& jet, int k) {
  const int n = grid.n();
  os << "node,theta,phi,rho";
  for (int a = 0; a <= n; ++a) {
    os << ",X" << a;
  }
  os << ",u";
  for (int a = 0; a < n; ++a) {
    os << ",kappa" << a;
  }
  for (int a = 0; a < n; ++a) {
    os << ",lambda" << a;
  }
  os << ",sigma_k\n";
  for (int i = 0; i < grid.size(); ++i) {
    const NodeJet& nj = jet[static_cast<std::size_t>(i)];
    os << i << ',' << format_double(grid.theta(i)) << ',' << format_double(grid.phi(i)) << ','
       << format_double(nj.rho);
    for (int a = 0; a <= n; ++a) {
      os << ',' << format_double(nj.position(a));
    }
    os << ',' << format_double(nj.support);
    for (int a = 0; a < n; ++a) {
      os << ',' << format_double(nj.kappa(a));
    }
    for (int a = 0; a < n; ++a) {
      os << ',' << format_double(nj.eta[static_cast<std::size_t>(a)]);
    }
    os << ',' << format_double(symm::sigma(nj.eta, k)) << '\n';
  }
}

}  // namespace etacurv::geometry
