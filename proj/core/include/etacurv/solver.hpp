#pragma once

// Damped Newton and continuation solver for sigma_k(lambda(eta)) = f(X, nu)
// on radial graphs over S^n.

#include "etacurv/geometry.hpp"
#include "etacurv/newton.hpp"
#include "etacurv/prescribed.hpp"
#include "etacurv/verify.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etacurv::solver {

/// Worst-case margins of the barrier and monotonicity conditions.
struct ConditionReport {
  double f_min = 0.0;                ///< smallest sampled f on the annulus
  double inner_margin = 0.0;         ///< min of f(X, X/|X|) - C/r1^k on |X| = r1
  double outer_margin = 0.0;         ///< min of C/r2^k - f(X, X/|X|) on |X| = r2
  double monotonicity_max = 0.0;     ///< max of d/drho (rho^k f); must be <= 0
  bool positive = false;
  bool inner_ok = false;
  bool outer_ok = false;
  bool monotone_ok = false;
  bool zero_margin = false;          ///< monotonicity holds only with equality
  int samples = 0;

  [[nodiscard]] bool pass() const noexcept { return positive && inner_ok && outer_ok && monotone_ok; }
  /// Name of the first failing condition, empty when passing.
  [[nodiscard]] std::string failure() const;
};

/// Samples the barrier inequalities on |X| = r1, r2 and the radial
/// monotonicity of rho^k f(rho w, nu) over `samples` directions. Report only.
[[nodiscard]] ConditionReport validate_conditions(const PrescribedData& data, int n, int k, int samples,
                                                  unsigned seed = 0);

/// Raised when the homotopy regularization makes the blend non-positive.
class ConfigurationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// min over rho in [r1, r2] of 1/rho^k + eps (1/rho^k - 1).
[[nodiscard]] double homotopy_floor(double r1, double r2, int k, double epsilon);

/// f^t = t f + (1 - t) C_n^k (n-1)^k [1/|X|^k + eps (1/|X|^k - 1)].
[[nodiscard]] PrescribedData homotopy_f(const PrescribedData& data, int n, int k, double epsilon, double t);

enum class EquationForm {
  Raw,   ///< sigma_k - f = 0
  Root,  ///< sigma_k^{1/k} - f^{1/k} = 0
};

enum class JacobianMode {
  Analytic,
  FiniteDifference,
};

struct NewtonConfig {
  double tol = 1e-10;
  int max_iter = 40;
  int max_halvings = 6;
  /// Iterates must stay in [r1 (1 - margin), r2 (1 + margin)].
  double containment_margin = 0.25;
  EquationForm form = EquationForm::Raw;
  JacobianMode jacobian = JacobianMode::Analytic;
  double fd_step = 1e-7;
  std::function<void(const Eigen::VectorXd&)> on_accept;
};

/// Per-node residual of the chosen equation form; throws
/// geometry::EtaConvexityError outside Gamma_k.
[[nodiscard]] Eigen::VectorXd residual(const geometry::SphereGrid& grid, const geometry::RadialField& rho,
                                       const PrescribedData& data, int k, EquationForm form = EquationForm::Raw);

/// Jacobian of `residual` with respect to the nodal rho values.
[[nodiscard]] Eigen::SparseMatrix<double> jacobian(const geometry::SphereGrid& grid,
                                                   const geometry::RadialField& rho, const PrescribedData& data,
                                                   int k, const NewtonConfig& config);

struct SolveResult {
  geometry::RadialField rho;
  NewtonReport report;
};

/// Damped Newton with Gamma_k and containment safeguarding. Throws
/// PreconditionError for a non-convex start or f <= 0, NewtonFailure otherwise.
[[nodiscard]] SolveResult newton_solve(const geometry::SphereGrid& grid, const geometry::RadialField& rho0,
                                       const PrescribedData& data, int k, const NewtonConfig& config);

struct TSchedule {
  double dt0 = 0.1;
  double dt_min = 1e-4;
  double dt_max = 0.5;
  double grow = 1.5;
  int easy_iterations = 4;  ///< grow the step after a solve this cheap
};

struct TraceRecord {
  double t = 0.0;
  double dt = 0.0;
  int newton_iterations = 0;
  double max_residual = 0.0;
  verify::EstimateReport monitors;
};

struct HomotopyRun {
  double epsilon = 0.01;
  TSchedule schedule;
  NewtonConfig newton;
  verify::MonitorParams monitors;
  std::vector<TraceRecord> trace;
  /// Called after every accepted t.
  std::function<void(const TraceRecord&)> on_record;
};

/// Raised when the step falls below dt_min; carries the partial trace.
class ContinuationStuck : public std::runtime_error {
public:
  ContinuationStuck(double t, HomotopyRun run, geometry::RadialField last)
      : std::runtime_error("continuation stuck at t = " + std::to_string(t)),
        t_(t),
        run_(std::move(run)),
        last_(std::move(last)) {}
  [[nodiscard]] double t() const noexcept { return t_; }
  [[nodiscard]] const HomotopyRun& run() const noexcept { return run_; }
  [[nodiscard]] const geometry::RadialField& last() const noexcept { return last_; }

private:
  double t_;
  HomotopyRun run_;
  geometry::RadialField last_;
};

struct ContinuationResult {
  geometry::RadialField rho;
  HomotopyRun run;
};

/// Marches t from 0 (rho = 1) to 1 with adaptive steps, solving at each t
/// and recording monitors at every accepted t.
[[nodiscard]] ContinuationResult continue_to_target(const geometry::SphereGrid& grid, const PrescribedData& data,
                                                    HomotopyRun run, int k);

/// One JSON line per trace record.
[[nodiscard]] std::string trace_record_json(const TraceRecord& record);

}  // namespace etacurv::solver
