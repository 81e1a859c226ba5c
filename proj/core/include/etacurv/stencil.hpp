#pragma once

// Linear stencils mapping a nodal field to the local 2-jet (value, first
// derivatives, second derivatives) at one node. Both the sphere grid and the
// flat domain grid express their difference operators this way, so residual
// evaluation and Jacobian assembly share a single representation.

#include <Eigen/Core>

#include <span>
#include <vector>

namespace etacurv {

/// Largest ambient dimension supported by the small fixed-capacity types.
inline constexpr int kMaxAmbient = 8;

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

struct StencilTerm {
  int node;
  double weight;
};

using Stencil = std::vector<StencilTerm>;

/// Number of jet components for intrinsic dimension n: value, n first
/// derivatives, n(n+1)/2 second derivatives (upper triangle).
[[nodiscard]] constexpr int jet_size(int n) noexcept { return 1 + n + n * (n + 1) / 2; }

/// Component index of the first derivative along a.
[[nodiscard]] constexpr int first_index(int a) noexcept { return 1 + a; }

/// Component index of the second derivative (a, b), order-independent.
[[nodiscard]] constexpr int second_index(int n, int a, int b) noexcept {
  if (a > b) {
    const int t = a;
    a = b;
    b = t;
  }
  // Row-major upper triangle offset.
  return 1 + n + a * n - a * (a - 1) / 2 + (b - a);
}

/// Stencils for every jet component at one node.
struct JetStencil {
  int dim = 0;
  std::vector<Stencil> components;  // size jet_size(dim)
};

/// Evaluated 2-jet at one node.
struct LocalJet {
  double value = 0.0;
  SmallVec first;
  SmallMat second;
};

[[nodiscard]] inline double apply(const Stencil& s, std::span<const double> field) {
  double acc = 0.0;
  for (const auto& t : s) {
    acc += t.weight * field[static_cast<std::size_t>(t.node)];
  }
  return acc;
}

[[nodiscard]] inline LocalJet apply(const JetStencil& js, std::span<const double> field) {
  const int n = js.dim;
  LocalJet jet;
  jet.value = apply(js.components[0], field);
  jet.first.resize(n);
  jet.second.resize(n, n);
  for (int a = 0; a < n; ++a) {
    jet.first(a) = apply(js.components[static_cast<std::size_t>(first_index(a))], field);
    for (int b = a; b < n; ++b) {
      const double v = apply(js.components[static_cast<std::size_t>(second_index(n, a, b))], field);
      jet.second(a, b) = v;
      jet.second(b, a) = v;
    }
  }
  return jet;
}

/// Adds `scale * s` into `out`.
inline void accumulate(Stencil& out, const Stencil& s, double scale) {
  for (const auto& t : s) {
    out.push_back({t.node, scale * t.weight});
  }
}

}  // namespace etacurv
