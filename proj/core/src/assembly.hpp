#pragma once

// Sparse Jacobian assembly over per-node jet stencils, shared by the curved
// and flat pipelines.

#include "etacurv/parallel.hpp"
#include "etacurv/stencil.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace etacurv::detail {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Chain rule: row i gets sum_c dR_i/dc * stencil_c. `derivs(i)` returns the
/// derivatives of residual i with respect to its jet components.
template <typename StencilOf, typename Derivs>
Eigen::SparseMatrix<double> assemble_jacobian(int size, StencilOf&& stencil_of, Derivs&& derivs) {
  std::vector<std::vector<Eigen::Triplet<double>>> rows(static_cast<std::size_t>(size));
  parallel_for(size, [&](int i) {
    const JetStencil& st = stencil_of(i);
    const std::vector<double> dr = derivs(i);
    auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < st.components.size(); ++c) {
      for (const auto& term : st.components[c]) {
        row.emplace_back(i, term.node, dr[c] * term.weight);
      }
    }
  });
  std::vector<Eigen::Triplet<double>> all;
  for (auto& r : rows) {
    all.insert(all.end(), r.begin(), r.end());
  }
  Eigen::SparseMatrix<double> jac(size, size);
  jac.setFromTriplets(all.begin(), all.end());
  return jac;
}

/// Column-wise central differencing; only the rows whose stencils read the
/// perturbed column are re-evaluated. `node_residual(i, field)` evaluates
/// residual i on an arbitrary field.
template <typename StencilOf, typename NodeResidual>
Eigen::SparseMatrix<double> fd_jacobian(int size, const Eigen::VectorXd& x, StencilOf&& stencil_of,
                                        NodeResidual&& node_residual, double step) {
  std::vector<std::vector<int>> readers(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    for (const auto& comp : stencil_of(i).components) {
      for (const auto& term : comp) {
        readers[static_cast<std::size_t>(term.node)].push_back(i);
      }
    }
  }
  for (auto& r : readers) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }

  std::vector<std::vector<Eigen::Triplet<double>>> cols(static_cast<std::size_t>(size));
  parallel_for(size, [&](int m) {
    const double h = step * std::max(1.0, std::abs(x(m)));
    Eigen::VectorXd plus = x;
    Eigen::VectorXd minus = x;
    plus(m) += h;
    minus(m) -= h;
    for (int i : readers[static_cast<std::size_t>(m)]) {
      const double rp = node_residual(i, as_span(plus));
      const double rm = node_residual(i, as_span(minus));
      cols[static_cast<std::size_t>(m)].emplace_back(i, m, (rp - rm) / (2.0 * h));
    }
  });
  std::vector<Eigen::Triplet<double>> all;
  for (auto& c : cols) {
    all.insert(all.end(), c.begin(), c.end());
  }
  Eigen::SparseMatrix<double> jac(size, size);
  jac.setFromTriplets(all.begin(), all.end());
  return jac;
}

}  // namespace etacurv::detail
