#pragma once

// Discretized S^n and the radial-graph geometry of X = rho(x) x.

#include "etacurv/stencil.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace etacurv::geometry {

enum class GridMode {
  Full2d,    ///< n = 2 latitude-longitude grid
  Axisym1d,  ///< rho depends on the polar angle only, any n >= 2
};

[[nodiscard]] GridMode parse_grid_mode(const std::string& name);
[[nodiscard]] std::string to_string(GridMode mode);

struct GridSizes {
  int n_lon = 0;  ///< longitude nodes (ignored for Axisym1d)
  int n_lat = 0;  ///< polar-angle nodes
};

/// Per-node coordinate chart on the unit sphere: the point x, the coordinate
/// tangent vectors d_a x (columns of `tangent`) and the diagonal of the round
/// metric ghat in those coordinates.
struct NodeChart {
  SmallVec x;
  SmallMat tangent;
  SmallVec ghat;
};

class SphereGrid {
public:
  [[nodiscard]] int n() const noexcept { return n_; }
  [[nodiscard]] GridMode mode() const noexcept { return mode_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(charts_.size()); }
  [[nodiscard]] int n_lon() const noexcept { return n_lon_; }
  [[nodiscard]] int n_lat() const noexcept { return n_lat_; }
  [[nodiscard]] double d_theta() const noexcept { return d_theta_; }
  [[nodiscard]] double d_phi() const noexcept { return d_phi_; }
  /// Largest angular spacing.
  [[nodiscard]] double spacing() const noexcept;

  [[nodiscard]] int index(int i_lon, int j_lat) const noexcept { return j_lat * n_lon_ + i_lon; }
  [[nodiscard]] double theta(int node) const noexcept { return theta_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] double phi(int node) const noexcept { return phi_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] const NodeChart& chart(int node) const { return charts_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] const JetStencil& stencil(int node) const { return stencils_[static_cast<std::size_t>(node)]; }
  /// Quadrature weights summing to the area of S^n.
  [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }

  /// Samples a function of the unit-sphere point at every node.
  template <typename Fn>
  [[nodiscard]] Eigen::VectorXd sample(Fn&& fn) const {
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i) {
      out(i) = fn(charts_[static_cast<std::size_t>(i)].x);
    }
    return out;
  }

private:
  friend SphereGrid build_grid(int, GridMode, GridSizes, double);

  int n_ = 2;
  GridMode mode_ = GridMode::Full2d;
  int n_lon_ = 1;
  int n_lat_ = 0;
  double d_theta_ = 0.0;
  double d_phi_ = 0.0;
  std::vector<double> theta_;
  std::vector<double> phi_;
  std::vector<NodeChart> charts_;
  std::vector<JetStencil> stencils_;
  Eigen::VectorXd weights_;
};

/// Builds the grid and its difference stencils. Polar nodes sit half a cell
/// away from the poles; `lon_origin` shifts the longitude of node column 0.
/// Throws std::invalid_argument for n < 2, resolutions below 8, or an odd
/// longitude count.
[[nodiscard]] SphereGrid build_grid(int n, GridMode mode, GridSizes sizes, double lon_origin = 0.0);

/// Positive radial function on the grid nodes.
struct RadialField {
  Eigen::VectorXd rho;
};

/// Geometric state at one node of the radial graph.
struct NodeJet {
  double rho = 0.0;
  SmallVec grad_rho;        ///< covariant components d_a rho
  SmallMat hess_rho;        ///< covariant Hessian on S^n
  double grad_norm = 0.0;   ///< |grad rho| in the round metric
  SmallVec position;        ///< X = rho x
  SmallMat metric;          ///< g
  SmallMat second_form;     ///< h
  SmallVec normal;          ///< outer unit normal
  double support = 0.0;     ///< u = <X, nu>
  SmallVec kappa;           ///< principal curvatures, descending
  SmallMat directions;      ///< g-orthonormal principal directions matching kappa
  double mean_curvature = 0.0;  ///< H = sum kappa
  std::vector<double> eta;      ///< lambda(eta), ascending
  std::vector<int> eta_perm;    ///< eta[p] = H - kappa[eta_perm[p]]
};

using SurfaceJet = std::vector<NodeJet>;

class DomainError : public std::domain_error {
public:
  DomainError(int node, const std::string& what) : std::domain_error(what), node_(node) {}
  [[nodiscard]] int node() const noexcept { return node_; }

private:
  int node_;
};

class NumericalError : public std::runtime_error {
public:
  NumericalError(int node, const std::string& what) : std::runtime_error(what), node_(node) {}
  [[nodiscard]] int node() const noexcept { return node_; }

private:
  int node_;
};

/// Raised when lambda(eta) leaves Gamma_k at some node.
class EtaConvexityError : public std::domain_error {
public:
  EtaConvexityError(int node, int failing_order);
  [[nodiscard]] int node() const noexcept { return node_; }
  [[nodiscard]] int failing_order() const noexcept { return order_; }

private:
  int node_;
  int order_;
};

/// Geometry of the radial graph from the local 2-jet of rho. Throws
/// DomainError for rho <= 0 and NumericalError if the eigen-solve fails.
[[nodiscard]] NodeJet evaluate_node(const NodeChart& chart, const LocalJet& jet, int node = -1);

/// Per-node geometry for the whole field.
[[nodiscard]] SurfaceJet surface_jet(const SphereGrid& grid, const RadialField& rho);

/// Per-node sigma_k(lambda(eta)); throws EtaConvexityError at the first node
/// outside Gamma_k.
[[nodiscard]] Eigen::VectorXd sigma_k_of_eta(const SurfaceJet& jet, int k);

/// CSV dump: node, theta, phi, rho, X..., u, kappa..., lambda..., sigma_k.
void write_surface_csv(std::ostream& os, const SphereGrid& grid, const SurfaceJet& jet, int k);

}  // namespace etacurv::geometry
