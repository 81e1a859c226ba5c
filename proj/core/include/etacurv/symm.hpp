#pragma once

// Elementary symmetric functions, Garding cone membership, and the derivative
// coefficients of G = sigma_k^{1/k} used by the solvers and the monitors.

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace etacurv::symm {

/// Ordered eigenvalue vector together with the order k of the equation.
class SpectrumVector {
public:
  SpectrumVector(std::vector<double> values, int k);

  [[nodiscard]] int n() const noexcept { return static_cast<int>(values_.size()); }
  [[nodiscard]] int k() const noexcept { return k_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

private:
  std::vector<double> values_;
  int k_;
};

/// Raised when an eigenvalue vector falls outside the Garding cone.
class ConeViolation : public std::domain_error {
public:
  ConeViolation(int failing_order, double failing_value);

  /// Smallest j with sigma_j <= margin.
  [[nodiscard]] int failing_order() const noexcept { return failing_order_; }
  [[nodiscard]] double failing_value() const noexcept { return failing_value_; }

private:
  int failing_order_;
  double failing_value_;
};

/// sigma_0..sigma_n of `values`, built one entry at a time.
[[nodiscard]] std::vector<double> sigma_all(std::span<const double> values);

/// sigma_m of `values`; throws std::invalid_argument when m is outside [0, size].
[[nodiscard]] double sigma(std::span<const double> values, int m);
[[nodiscard]] double sigma(const SpectrumVector& lambda, int m);

/// sigma_m of lambda with entry i removed.
[[nodiscard]] double sigma_excl(const SpectrumVector& lambda, int m, int i);

/// sigma_m of lambda with the two distinct entries i and j removed.
[[nodiscard]] double sigma_excl2(const SpectrumVector& lambda, int m, int i, int j);

/// True iff sigma_j(lambda) > margin for all j = 1..k. The default margin of
/// zero tests the open cone exactly.
[[nodiscard]] bool gamma_k_contains(const SpectrumVector& lambda, double margin = 0.0);

/// First order j in 1..k with sigma_j <= margin, or 0 when lambda is inside.
[[nodiscard]] int first_cone_failure(const SpectrumVector& lambda, double margin = 0.0);

/// Binomial coefficient C(n, m) as a double.
[[nodiscard]] double binomial(int n, int m);

/// Value and derivatives of G(lambda) = sigma_k(lambda)^{1/k}.
///
/// `gradient(i)` is G^{ii}; `hessian(i, j)` is the second partial of G with
/// respect to the eigenvalue arguments; `pair(i, j)` for i != j is the
/// off-diagonal matrix-function coefficient G^{ij,ji} = (G^{ii} - G^{jj}) /
/// (lambda_i - lambda_j), with the analytic limit at ties. `f_coeffs(i)` is
/// F^{ii} = sum_{j != i} G^{jj}.
struct OperatorCoefficients {
  double value = 0.0;
  double sigma_k = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd pair;
  Eigen::VectorXd f_coeffs;
};

/// Relative gap below which two eigenvalues are treated as tied when forming
/// pair coefficients.
inline constexpr double kTieTolerance = 1e-9;

/// Throws ConeViolation when lambda is outside Gamma_k.
[[nodiscard]] OperatorCoefficients operator_coefficients(const SpectrumVector& lambda);

/// Eta-spectrum of a principal curvature vector: lambda_i = H - kappa_i,
/// stored ascending. `permutation[p]` is the index into kappa that produced
/// lambda entry p.
struct EtaSpectrum {
  SpectrumVector lambda;
  std::vector<int> permutation;
};

[[nodiscard]] EtaSpectrum eta_spectrum_from_kappa(std::span<const double> kappa, int k);

}  // namespace etacurv::symm
