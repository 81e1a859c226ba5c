#pragma once

// Right-hand sides f(X, nu) of the curved equation and their derivatives.

#include "etacurv/stencil.hpp"

#include <functional>
#include <string>
#include <vector>

namespace etacurv::solver {

/// f(X, nu) with X in R^{n+1} and nu a unit vector of R^{n+1}.
using SurfaceFn = std::function<double(const SmallVec& position, const SmallVec& normal)>;

struct PrescribedData {
  SurfaceFn f;
  double r1 = 0.5;  ///< inner barrier radius, 0 < r1 < 1
  double r2 = 2.0;  ///< outer barrier radius, r2 > 1
};

/// Checks 0 < r1 < 1 < r2 and a callable f; throws std::invalid_argument.
void check_radii(const PrescribedData& data);

/// Central-difference gradients of f with respect to X and nu.
struct FGradient {
  double value = 0.0;
  SmallVec d_position;
  SmallVec d_normal;
};

[[nodiscard]] FGradient f_gradient(const SurfaceFn& f, const SmallVec& position, const SmallVec& normal,
                                   double step = 1e-6);

/// c / |X|^p
[[nodiscard]] SurfaceFn power_decay(double c, double p);

/// c (1 + delta <nu, e_axis>) / |X|^p; axis < 0 selects the last coordinate.
[[nodiscard]] SurfaceFn aniso_power(double c, double p, double delta, int axis = -1);

/// f = c
[[nodiscard]] SurfaceFn constant(double c);

/// Piecewise-linear in |X| through (radii[i], values[i]); radii strictly
/// increasing, constant extension outside the table.
[[nodiscard]] SurfaceFn tabulated_radial(std::vector<double> radii, std::vector<double> values);

/// C_n^k (n-1)^k, the value of sigma_k(lambda(eta)) on the unit sphere.
[[nodiscard]] double unit_sphere_sigma(int n, int k);

}  // namespace etacurv::solver
