#include "etacurv/symm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace etacurv::symm {

namespace {

std::string cone_message(int order, double value) {
  return "spectrum outside Garding cone: sigma_" + std::to_string(order) + " = " +
         std::to_string(value);
}

// sigma_0..sigma_max_order of values with up to two entries skipped.
std::vector<double> sigma_prefix(std::span<const double> values, int max_order, int skip_a,
                                 int skip_b) {
  std::vector<double> esf(static_cast<std::size_t>(max_order) + 1, 0.0);
  esf[0] = 1.0;
  int used = 0;
  for (int e = 0; e < static_cast<int>(values.size()); ++e) {
    if (e == skip_a || e == skip_b) {
      continue;
    }
    ++used;
    const double v = values[static_cast<std::size_t>(e)];
    for (int j = std::min(used, max_order); j >= 1; --j) {
      esf[static_cast<std::size_t>(j)] += v * esf[static_cast<std::size_t>(j - 1)];
    }
  }
  return esf;
}

void check_index(const SpectrumVector& lambda, int i) {
  if (i < 0 || i >= lambda.n()) {
    throw std::invalid_argument("index " + std::to_string(i) + " outside [0, " +
                                std::to_string(lambda.n()) + ")");
  }
}

}  // namespace

SpectrumVector::SpectrumVector(std::vector<double> values, int k)
    : values_(std::move(values)), k_(k) {
  if (values_.size() < 2) {
    throw std::invalid_argument("spectrum needs n >= 2 entries");
  }
  if (k_ < 1 || k_ > n()) {
    throw std::invalid_argument("order k = " + std::to_string(k_) + " outside [1, " +
                                std::to_string(n()) + "]");
  }
}

ConeViolation::ConeViolation(int failing_order, double failing_value)
    : std::domain_error(cone_message(failing_order, failing_value)),
      failing_order_(failing_order),
      failing_value_(failing_value) {}

std::vector<double> sigma_all(std::span<const double> values) {
  return sigma_prefix(values, static_cast<int>(values.size()), -1, -1);
}

double sigma(std::span<const double> values, int m) {
  if (m < 0 || m > static_cast<int>(values.size())) {
    throw std::invalid_argument("sigma order " + std::to_string(m) + " outside [0, " +
                                std::to_string(values.size()) + "]");
  }
  return sigma_prefix(values, m, -1, -1)[static_cast<std::size_t>(m)];
}

double sigma(const SpectrumVector& lambda, int m) { return sigma(lambda.values(), m); }

double sigma_excl(const SpectrumVector& lambda, int m, int i) {
  check_index(lambda, i);
  if (m < 0 || m > lambda.n() - 1) {
    throw std::invalid_argument("sigma_excl order " + std::to_string(m) + " outside [0, " +
                                std::to_string(lambda.n() - 1) + "]");
  }
  return sigma_prefix(lambda.values(), m, i, -1)[static_cast<std::size_t>(m)];
}

double sigma_excl2(const SpectrumVector& lambda, int m, int i, int j) {
  check_index(lambda, i);
  check_index(lambda, j);
  if (i == j) {
    throw std::invalid_argument("sigma_excl2 needs distinct indices");
  }
  if (m < 0) {
    throw std::invalid_argument("negative sigma order");
  }
  if (m > lambda.n() - 2) {
    return 0.0;
  }
  return sigma_prefix(lambda.values(), m, i, j)[static_cast<std::size_t>(m)];
}

int first_cone_failure(const SpectrumVector& lambda, double margin) {
  const auto esf = sigma_prefix(lambda.values(), lambda.k(), -1, -1);
  for (int j = 1; j <= lambda.k(); ++j) {
    if (!(esf[static_cast<std::size_t>(j)] > margin)) {
      return j;
    }
  }
  return 0;
}

bool gamma_k_contains(const SpectrumVector& lambda, double margin) {
  return first_cone_failure(lambda, margin) == 0;
}

double binomial(int n, int m) {
  if (m < 0 || m > n) {
    return 0.0;
  }
  double c = 1.0;
  for (int i = 1; i <= m; ++i) {
    c = c * static_cast<double>(n - m + i) / static_cast<double>(i);
  }
  return std::round(c);
}

OperatorCoefficients operator_coefficients(const SpectrumVector& lambda) {
  const int n = lambda.n();
  const int k = lambda.k();
  const auto esf = sigma_prefix(lambda.values(), k, -1, -1);
  for (int j = 1; j <= k; ++j) {
    if (!(esf[static_cast<std::size_t>(j)] > 0.0)) {
      throw ConeViolation(j, esf[static_cast<std::size_t>(j)]);
    }
  }
  const double sk = esf[static_cast<std::size_t>(k)];
  const double inv_k = 1.0 / k;
  const double scale1 = inv_k * std::pow(sk, inv_k - 1.0);          // (1/k) s^{1/k-1}
  const double scale2 = inv_k * (inv_k - 1.0) * std::pow(sk, inv_k - 2.0);

  OperatorCoefficients c;
  c.sigma_k = sk;
  c.value = std::pow(sk, inv_k);

  Eigen::VectorXd excl1(n);
  for (int i = 0; i < n; ++i) {
    excl1(i) = sigma_excl(lambda, k - 1, i);
  }
  c.gradient = scale1 * excl1;

  c.hessian.resize(n, n);
  Eigen::MatrixXd excl2 = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && k >= 2) {
        excl2(i, j) = sigma_excl2(lambda, k - 2, i, j);
      }
      c.hessian(i, j) = scale2 * excl1(i) * excl1(j) + (i != j ? scale1 * excl2(i, j) : 0.0);
    }
  }

  c.pair = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        continue;
      }
      const double li = lambda[i];
      const double lj = lambda[j];
      const double gap = li - lj;
      if (std::abs(gap) < kTieTolerance * (1.0 + std::abs(li) + std::abs(lj))) {
        // Removable singularity: the divided difference tends to G_ii - G_ij.
        c.pair(i, j) = c.hessian(i, i) - c.hessian(i, j);
      } else {
        c.pair(i, j) = (c.gradient(i) - c.gradient(j)) / gap;
      }
    }
  }

  const double total = c.gradient.sum();
  c.f_coeffs = Eigen::VectorXd::Constant(n, total) - c.gradient;
  return c;
}

EtaSpectrum eta_spectrum_from_kappa(std::span<const double> kappa, int k) {
  const int n = static_cast<int>(kappa.size());
  if (n < 2) {
    throw std::invalid_argument("eta-spectrum needs n >= 2 principal curvatures");
  }
  const double mean_curvature = std::accumulate(kappa.begin(), kappa.end(), 0.0);
  std::vector<double> raw(kappa.size());
  for (std::size_t i = 0; i < kappa.size(); ++i) {
    raw[i] = mean_curvature - kappa[i];
  }
  std::vector<int> perm(kappa.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](int a, int b) { return raw[static_cast<std::size_t>(a)] < raw[static_cast<std::size_t>(b)]; });
  std::vector<double> sorted(kappa.size());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    sorted[p] = raw[static_cast<std::size_t>(perm[p])];
  }
  return EtaSpectrum{SpectrumVector(std::move(sorted), k), std::move(perm)};
}

}  // namespace etacurv::symm
