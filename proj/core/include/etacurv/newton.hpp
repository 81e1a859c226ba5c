#pragma once

// Damped Newton iteration shared by the curved and flat solvers.
//
// A problem supplies
//   std::optional<Eigen::VectorXd> try_residual(const Eigen::VectorXd& x)
//       residual at x, or nullopt when x is inadmissible (outside Gamma_k,
//       outside the containment box, non-positive radius, ...)
//   Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x)
//
// Each step tries fractions 1, 1/2, ..., 1/2^max_halvings of the Newton
// update and accepts the first admissible candidate whose max-norm residual
// is strictly smaller than the current one.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace etacurv {

/// Precondition violated before any iteration ran (bad initial state, bad data).
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class NewtonFailureKind {
  Diverged,          ///< every admissible fraction increased the residual
  ConeExit,          ///< no fraction stayed admissible
  MaxIterations,
  SingularJacobian,
};

[[nodiscard]] std::string to_string(NewtonFailureKind kind);

struct NewtonSettings {
  double tol = 1e-10;
  int max_iter = 40;
  int max_halvings = 6;
  /// Called with every accepted iterate (including the initial one).
  std::function<void(const Eigen::VectorXd&)> on_accept;
};

struct NewtonReport {
  int iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<double> step_fractions;
};

class NewtonFailure : public std::runtime_error {
public:
  NewtonFailure(NewtonFailureKind kind, Eigen::VectorXd last_iterate, NewtonReport report)
      : std::runtime_error("Newton failure: " + to_string(kind) + " after " +
                           std::to_string(report.iterations) + " iterations, residual " +
                           std::to_string(report.final_residual)),
        kind_(kind),
        last_iterate_(std::move(last_iterate)),
        report_(std::move(report)) {}

  [[nodiscard]] NewtonFailureKind kind() const noexcept { return kind_; }
  [[nodiscard]] const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  [[nodiscard]] const NewtonReport& report() const noexcept { return report_; }

private:
  NewtonFailureKind kind_;
  Eigen::VectorXd last_iterate_;
  NewtonReport report_;
};

template <typename Problem>
std::pair<Eigen::VectorXd, NewtonReport> damped_newton(Problem& problem, Eigen::VectorXd x,
                                                       const NewtonSettings& settings) {
  NewtonReport report;
  auto residual = problem.try_residual(x);
  if (!residual) {
    throw PreconditionError("initial iterate is not admissible (outside the cone or containment box)");
  }
  double current = residual->template lpNorm<Eigen::Infinity>();
  report.initial_residual = current;
  report.final_residual = current;
  report.residual_history.push_back(current);
  if (settings.on_accept) {
    settings.on_accept(x);
  }

  while (current > settings.tol) {
    if (report.iterations >= settings.max_iter) {
      throw NewtonFailure(NewtonFailureKind::MaxIterations, std::move(x), std::move(report));
    }
    const Eigen::SparseMatrix<double> jac = problem.jacobian(x);
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) {
      throw NewtonFailure(NewtonFailureKind::SingularJacobian, std::move(x), std::move(report));
    }
    const Eigen::VectorXd step = lu.solve(-*residual);
    if (lu.info() != Eigen::Success || !step.allFinite()) {
      throw NewtonFailure(NewtonFailureKind::SingularJacobian, std::move(x), std::move(report));
    }

    bool any_admissible = false;
    bool accepted = false;
    double fraction = 1.0;
    for (int cut = 0; cut <= settings.max_halvings; ++cut, fraction *= 0.5) {
      Eigen::VectorXd candidate = x + fraction * step;
      auto cand_residual = problem.try_residual(candidate);
      if (!cand_residual) {
        continue;
      }
      any_admissible = true;
      const double norm = cand_residual->template lpNorm<Eigen::Infinity>();
      if (norm < current) {
        x = std::move(candidate);
        residual = std::move(cand_residual);
        current = norm;
        accepted = true;
        break;
      }
    }
    ++report.iterations;
    if (!accepted) {
      report.final_residual = current;
      throw NewtonFailure(any_admissible ? NewtonFailureKind::Diverged : NewtonFailureKind::ConeExit,
                          std::move(x), std::move(report));
    }
    report.step_fractions.push_back(fraction);
    report.residual_history.push_back(current);
    report.final_residual = current;
    if (settings.on_accept) {
      settings.on_accept(x);
    }
  }
  report.converged = true;
  return {std::move(x), std::move(report)};
}

}  // namespace etacurv
