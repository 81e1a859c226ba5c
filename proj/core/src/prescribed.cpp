#include "etacurv/prescribed.hpp"

#include "etacurv/symm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace etacurv::solver {

void check_radii(const PrescribedData& data) {
  if (!data.f) {
    throw std::invalid_argument("prescribed data has no function");
  }
  if (!(data.r1 > 0.0 && data.r1 < 1.0 && data.r2 > 1.0)) {
    throw std::invalid_argument("barrier radii must satisfy 0 < r1 < 1 < r2");
  }
}

FGradient f_gradient(const SurfaceFn& f, const SmallVec& position, const SmallVec& normal, double step) {
  const auto dim = position.size();
  FGradient g;
  g.value = f(position, normal);
  g.d_position.resize(dim);
  g.d_normal.resize(dim);
  const double hx = step * std::max(1.0, position.norm());
  SmallVec p = position;
  SmallVec q = normal;
  for (Eigen::Index a = 0; a < dim; ++a) {
    const double xa = p(a);
    p(a) = xa + hx;
    const double fp = f(p, normal);
    p(a) = xa - hx;
    const double fm = f(p, normal);
    p(a) = xa;
    g.d_position(a) = (fp - fm) / (2.0 * hx);

    const double na = q(a);
    q(a) = na + step;
    const double gp = f(position, q);
    q(a) = na - step;
    const double gm = f(position, q);
    q(a) = na;
    g.d_normal(a) = (gp - gm) / (2.0 * step);
  }
  return g;
}

SurfaceFn power_decay(double c, double p) {
  return [c, p](const SmallVec& x, const SmallVec&) { return c / std::pow(x.norm(), p); };
}

SurfaceFn aniso_power(double c, double p, double delta, int axis) {
  return [c, p, delta, axis](const SmallVec& x, const SmallVec& nu) {
    const auto idx = axis < 0 ? nu.size() - 1 : static_cast<Eigen::Index>(axis);
    return c * (1.0 + delta * nu(idx)) / std::pow(x.norm(), p);
  };
}

SurfaceFn constant(double c) {
  return [c](const SmallVec&, const SmallVec&) { return c; };
}

SurfaceFn tabulated_radial(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() != values.size() || radii.size() < 2) {
    throw std::invalid_argument("tabulated f needs matching radii/values arrays of length >= 2");
  }
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) {
      throw std::invalid_argument("tabulated radii must be strictly increasing");
    }
  }
  return [radii = std::move(radii), values = std::move(values)](const SmallVec& x, const SmallVec&) {
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

double unit_sphere_sigma(int n, int k) { return symm::binomial(n, k) * std::pow(n - 1.0, k); }

}  // namespace etacurv::solver
