#pragma once

// Euclidean Dirichlet problem sigma_k(lambda((Delta phi) I - D^2 phi)) =
// f(x, phi, grad phi) in Omega, phi = 0 on the boundary, and the interior
// Pogorelov-type monitor (-phi)^beta Delta phi.

#include "etacurv/newton.hpp"
#include "etacurv/stencil.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace etacurv::flatcase {

enum class DomainShape { Ball, Rectangle };

[[nodiscard]] DomainShape parse_shape(const std::string& name);

struct DomainSpec {
  DomainShape shape = DomainShape::Ball;
  int n = 2;
  double h = 1.0 / 16.0;
  double radius = 1.0;          ///< ball, centered at the origin
  std::vector<double> lower;    ///< rectangle corners; extents must be multiples of h
  std::vector<double> upper;
};

enum class NodeKind : unsigned char { Outside, Boundary, Interior };

/// Cartesian lattice over the domain. Unknowns live on interior nodes;
/// lattice nodes outside the domain adjacent to an interior node form the
/// boundary mask, where phi = 0 is imposed at the boundary crossing and the
/// ghost value is closed by linear extrapolation along the stencil direction.
class DomainGrid {
public:
  [[nodiscard]] int n() const noexcept { return spec_.n; }
  [[nodiscard]] double h() const noexcept { return spec_.h; }
  [[nodiscard]] const DomainSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(points_.size()); }
  [[nodiscard]] const SmallVec& point(int node) const { return points_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] const JetStencil& stencil(int node) const { return stencils_[static_cast<std::size_t>(node)]; }
  /// Classification of every lattice node (row-major over the lattice box).
  [[nodiscard]] const std::vector<NodeKind>& mask() const noexcept { return mask_; }
  [[nodiscard]] int boundary_count() const noexcept;

  template <typename Fn>
  [[nodiscard]] Eigen::VectorXd sample(Fn&& fn) const {
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i) {
      out(i) = fn(points_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

private:
  friend DomainGrid build_domain(const DomainSpec&);

  DomainSpec spec_;
  std::vector<SmallVec> points_;
  std::vector<JetStencil> stencils_;
  std::vector<NodeKind> mask_;
};

/// Throws std::invalid_argument for n < 2, h <= 0, or a bad rectangle.
[[nodiscard]] DomainGrid build_domain(const DomainSpec& spec);

/// f(x, phi, grad phi)
using FlatFn = std::function<double(const SmallVec& x, double phi, const SmallVec& grad)>;

[[nodiscard]] FlatFn flat_constant(double c);
/// c + a |grad phi|^2
[[nodiscard]] FlatFn flat_grad_quadratic(double c, double a);
/// Piecewise linear in |x|; constant outside the table.
[[nodiscard]] FlatFn flat_tabulated_radial(std::vector<double> radii, std::vector<double> values);

struct FlatState {
  Eigen::VectorXd phi;
  std::vector<SmallVec> gradient;
  std::vector<SmallMat> hessian;
  std::vector<SmallMat> eta;                  ///< (Delta phi) I - D^2 phi
  std::vector<std::vector<double>> spectrum;  ///< lambda(eta), ascending
  double beta = 4.0;
};

[[nodiscard]] FlatState make_state(const DomainGrid& grid, Eigen::VectorXd phi, double beta = 4.0);

enum class EquationForm { Raw, Root };
enum class JacobianMode { Analytic, FiniteDifference };

/// Raised when lambda(eta) leaves Gamma_k at an interior node.
class EtaConvexityError : public std::domain_error {
public:
  EtaConvexityError(int node, int failing_order);
  [[nodiscard]] int node() const noexcept { return node_; }
  [[nodiscard]] int failing_order() const noexcept { return order_; }

private:
  int node_;
  int order_;
};

/// Per-interior-node sigma_k(lambda(eta)) - f (or the k-th root form).
[[nodiscard]] Eigen::VectorXd flat_residual(const DomainGrid& grid, const FlatState& state, const FlatFn& f, int k,
                                            EquationForm form = EquationForm::Raw);

struct FlatConfig {
  double tol = 1e-10;
  int max_iter = 40;
  int max_halvings = 6;
  EquationForm form = EquationForm::Raw;
  JacobianMode jacobian = JacobianMode::Analytic;
  double fd_step = 1e-7;
  double beta = 4.0;
  std::function<void(const Eigen::VectorXd&)> on_accept;
};

[[nodiscard]] Eigen::SparseMatrix<double> flat_jacobian(const DomainGrid& grid, const Eigen::VectorXd& phi,
                                                        const FlatFn& f, int k, const FlatConfig& config);

struct FlatReport {
  NewtonReport newton;
  double pogorelov = 0.0;
  double max_phi = 0.0;          ///< > 0 flags a maximum-principle violation
  double max_hessian_norm = 0.0;  ///< max spectral norm of D^2 phi
};

struct FlatSolution {
  FlatState state;
  FlatReport report;
};

/// Convex quadratic s (|x - c|^2 - R^2)/2 over the ball or the rectangle's
/// circumscribed ball, with s matching sigma_k to f at the domain center.
/// On rectangles this start is always admissible for k = 1; for k >= 2 the
/// edge-adjacent nodes may fall outside Gamma_k (flat faces are not strictly
/// convex), in which case the solve is rejected as a precondition failure.
[[nodiscard]] Eigen::VectorXd initial_guess(const DomainGrid& grid, const FlatFn& f, int k);

/// Damped Newton with Gamma_k safeguarding under homogeneous Dirichlet data.
/// Throws PreconditionError if f <= 0 at the start, NewtonFailure otherwise.
[[nodiscard]] FlatSolution dirichlet_solve(const DomainGrid& grid, const FlatFn& f, int k, const FlatConfig& config);

/// max over interior nodes of (-phi)^beta Delta phi; nodes with phi > 0
/// contribute with -phi clamped to zero.
[[nodiscard]] double pogorelov_monitor(const FlatState& state);

/// max over interior nodes of the spectral norm of D^2 phi.
[[nodiscard]] double max_hessian_norm(const FlatState& state);

/// CSV dump: x..., phi, laplacian, lambda..., residual, pogorelov.
void write_flat_csv(std::ostream& os, const DomainGrid& grid, const FlatState& state, const FlatFn& f, int k);

}  // namespace etacurv::flatcase
