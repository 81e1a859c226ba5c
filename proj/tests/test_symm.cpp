#include "etacurv/symm.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace etacurv::symm;

namespace {

SpectrumVector sv(std::vector<double> v, int k) { return SpectrumVector(std::move(v), k); }

}  // namespace

TEST_SUITE("symm") {
  TEST_CASE("spectrum vector validates n and k") {
    CHECK_THROWS_AS(sv({1.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sv({1.0, 2.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(sv({1.0, 2.0}, 3), std::invalid_argument);
    CHECK(sv({1.0, 2.0, 3.0}, 2).n() == 3);
  }

  TEST_CASE("sigma small cases") {
    CHECK(sigma(sv({1, 1, 1}, 1), 2) == doctest::Approx(3.0));
    CHECK(sigma(sv({1, 2, 3}, 1), 3) == doctest::Approx(6.0));
    CHECK(sigma(sv({1, 2, 3}, 1), 2) == doctest::Approx(oracle::sigma_enumerate({1, 2, 3}, 2)));
    CHECK(oracle::sigma_enumerate({1, 2, 3}, 2) == 11.0);
    CHECK(sigma(sv({4, 5, 6}, 1), 0) == 1.0);
  }

  TEST_CASE("sigma rejects out-of-range order") {
    CHECK_THROWS_AS((void)sigma(sv({1, 2, 3}, 1), -1), std::invalid_argument);
    CHECK_THROWS_AS((void)sigma(sv({1, 2, 3}, 1), 4), std::invalid_argument);
  }

  TEST_CASE("sigma matches enumeration on random vectors") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + trial % 11;
      std::vector<double> v(static_cast<std::size_t>(n));
      for (auto& x : v) {
        x = gauss(rng);
      }
      for (int m = 0; m <= n; ++m) {
        const double expect = oracle::sigma_enumerate(v, m);
        double scale = 0.0;
        for (unsigned mask = 0; mask < (1U << n); ++mask) {
          if (__builtin_popcount(mask) == m) {
            double p = 1.0;
            for (int i = 0; i < n; ++i) {
              if ((mask >> i) & 1U) {
                p *= std::abs(v[static_cast<std::size_t>(i)]);
              }
            }
            scale += p;
          }
        }
        CHECK(std::abs(sigma(v, m) - expect) <= 1e-12 * std::max(scale, 1.0));
      }
    }
  }

  TEST_CASE("sigma_excl") {
    CHECK(sigma_excl(sv({1, 2, 3}, 1), 1, 1) == doctest::Approx(4.0));
    CHECK(oracle::sigma_enumerate({1, 3}, 1) == 4.0);
    CHECK(sigma_excl(sv({5, 1, 1}, 1), 2, 0) == doctest::Approx(oracle::sigma_enumerate({1, 1}, 2)));
    CHECK(sigma_excl(sv({5, 1, 1}, 1), 2, 0) == doctest::Approx(1.0));
    CHECK(sigma_excl(sv({-3, 7, 0.5, 2}, 2), 0, 2) == 1.0);
    CHECK_THROWS_AS((void)sigma_excl(sv({1, 2, 3}, 1), 1, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)sigma_excl(sv({1, 2, 3}, 1), 1, -1), std::invalid_argument);
    CHECK_THROWS_AS((void)sigma_excl(sv({1, 2, 3}, 1), 3, 0), std::invalid_argument);
  }

  TEST_CASE("sigma_excl2 matches enumeration") {
    const std::vector<double> v{1.5, -0.5, 2.0, 3.0, 0.25};
    for (int m = 0; m <= 3; ++m) {
      CHECK(sigma_excl2(sv(v, 2), m, 1, 3) == doctest::Approx(oracle::sigma_enumerate({1.5, 2.0, 0.25}, m)));
    }
  }

  TEST_CASE("gamma_k_contains") {
    CHECK(gamma_k_contains(sv({1, 1, 1}, 3)));
    CHECK_FALSE(gamma_k_contains(sv({-1, 1, 1}, 2)));
    CHECK(oracle::sigma_enumerate({-1, 1, 1}, 2) == -1.0);
    CHECK(gamma_k_contains(sv({3, 3, -1}, 2)));
    CHECK(oracle::sigma_enumerate({3, 3, -1}, 1) == 5.0);
    CHECK(oracle::sigma_enumerate({3, 3, -1}, 2) == 3.0);
    CHECK(first_cone_failure(sv({-1, 1, 1}, 2)) == 2);
    CHECK(first_cone_failure(sv({-1, -1, 1}, 2)) == 1);
    CHECK(first_cone_failure(sv({3, 3, -1}, 2)) == 0);
  }

  TEST_CASE("cone boundary is excluded and margins shrink the cone") {
    CHECK_FALSE(gamma_k_contains(sv({0, 0, 1}, 2)));
    CHECK(gamma_k_contains(sv({1, 1, 1}, 2), 2.9));
    CHECK_FALSE(gamma_k_contains(sv({1, 1, 1}, 2), 3.0));
  }

  TEST_CASE("operator coefficients at the identity vector") {
    for (int n = 2; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        const auto c = operator_coefficients(sv(std::vector<double>(static_cast<std::size_t>(n), 1.0), k));
        CHECK(c.value == doctest::Approx(std::pow(binomial(n, k), 1.0 / k)));
        for (int i = 1; i < n; ++i) {
          CHECK(c.gradient(i) == doctest::Approx(c.gradient(0)));
        }
      }
    }
  }

  TEST_CASE("operator coefficients outside the cone") {
    try {
      (void)operator_coefficients(sv({-1, 1, 1}, 2));
      FAIL("expected ConeViolation");
    } catch (const ConeViolation& e) {
      CHECK(e.failing_order() == 2);
      CHECK(e.failing_value() == doctest::Approx(-1.0));
    }
  }

  TEST_CASE("gradient, Hessian, Euler identity and F coefficients") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 120; ++trial) {
      const int n = 2 + trial % 4;
      const int k = 1 + (trial / 4) % n;
      const auto lam = oracle::random_cone_point(rng, n, k);
      const auto c = operator_coefficients(sv(lam, k));
      auto g = [k](const std::vector<long double>& v) { return oracle::g_enumerate(v, k); };
      const Eigen::VectorXd grad = oracle::fd_gradient<long double>(g, lam);
      const Eigen::MatrixXd hess = oracle::fd_hessian<long double>(g, lam);
      CHECK((c.gradient - grad).norm() <= 1e-6 * std::max(1.0, grad.norm()));
      CHECK((c.hessian - hess).norm() <= 1e-6 * std::max(1.0, hess.norm()));
      double euler = 0.0;
      for (int i = 0; i < n; ++i) {
        euler += c.gradient(i) * lam[static_cast<std::size_t>(i)];
        CHECK(c.gradient(i) > 0.0);
        CHECK(c.f_coeffs(i) == doctest::Approx(c.gradient.sum() - c.gradient(i)));
      }
      CHECK(std::abs(euler - c.value) <= 1e-10 * c.value);
    }
  }

  TEST_CASE("homogeneity and concavity") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 5;
      const int k = 1 + (trial / 5) % n;
      const auto a = oracle::random_cone_point(rng, n, k);
      const auto b = oracle::random_cone_point(rng, n, k);
      const double t = scale(rng);
      std::vector<double> ta(a.size());
      std::vector<double> mid(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        ta[i] = t * a[i];
        mid[i] = 0.5 * (a[i] + b[i]);
      }
      const double ga = operator_coefficients(sv(a, k)).value;
      const double gb = operator_coefficients(sv(b, k)).value;
      CHECK(std::abs(operator_coefficients(sv(ta, k)).value - t * ga) <= 1e-10 * t * ga);
      CHECK(operator_coefficients(sv(mid, k)).value >= 0.5 * (ga + gb) - 1e-12);
      const auto c = operator_coefficients(sv(a, k));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.hessian);
      CHECK(es.eigenvalues().maxCoeff() <= 1e-10 * std::max(1.0, c.hessian.norm()));
    }
  }

  TEST_CASE("ordering and the F lower bound on sorted vectors") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 5;
      const int k = 1 + (trial / 5) % n;
      auto lam = oracle::random_cone_point(rng, n, k);
      std::sort(lam.begin(), lam.end());
      const auto c = operator_coefficients(sv(lam, k));
      for (int i = 0; i + 1 < n; ++i) {
        CHECK(c.gradient(i) >= c.gradient(i + 1) - 1e-12 * c.gradient(i));
        CHECK(c.f_coeffs(i) <= c.f_coeffs(i + 1) + 1e-12 * c.f_coeffs(i + 1));
      }
      CHECK(c.f_coeffs(1) >= c.f_coeffs.sum() / (n * (n - 1.0)) * (1.0 - 1e-12));
    }
  }

  TEST_CASE("Maclaurin inequality") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 6;
      const int k = 2 + (trial / 6) % (n - 1);
      const auto lam = oracle::random_cone_point(rng, n, k);
      const double lhs = std::pow(sigma(lam, k) / binomial(n, k), 1.0 / k);
      const double rhs = std::pow(sigma(lam, k - 1) / binomial(n, k - 1), 1.0 / (k - 1));
      CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
  }

  TEST_CASE("pair coefficients: divided differences and the tie limit") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 3 + trial % 3;
      const int k = 2 + (trial / 3) % (n - 1);
      const auto lam = oracle::random_cone_point(rng, n, k);
      const auto c = operator_coefficients(sv(lam, k));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) {
            continue;
          }
          const double dd = (c.gradient(i) - c.gradient(j)) /
                            (lam[static_cast<std::size_t>(i)] - lam[static_cast<std::size_t>(j)]);
          CHECK(c.pair(i, j) == doctest::Approx(dd).epsilon(1e-7));
          CHECK(c.pair(i, j) <= 1e-14);
        }
      }
    }
    // Tie: the limit is G_ii - G_ij.
    const std::vector<double> tied{2.0, 2.0, 0.5, 1.0};
    const auto c = operator_coefficients(sv(tied, 3));
    CHECK(c.pair(0, 1) == doctest::Approx(c.hessian(0, 0) - c.hessian(0, 1)));
    const std::vector<double> near{2.0, 2.0 + 1e-5, 0.5, 1.0};
    const auto cn = operator_coefficients(sv(near, 3));
    CHECK(c.pair(0, 1) == doctest::Approx(cn.pair(0, 1)).epsilon(1e-4));
  }

  TEST_CASE("eta spectrum from curvatures") {
    const std::vector<double> two{1.0, 1.0};
    const auto e2 = eta_spectrum_from_kappa(two, 2);
    CHECK(e2.lambda[0] == 1.0);
    CHECK(e2.lambda[1] == 1.0);

    const std::vector<double> three{1.0, 2.0, 3.0};
    const auto e3 = eta_spectrum_from_kappa(three, 2);
    CHECK(e3.lambda[0] == 3.0);
    CHECK(e3.lambda[1] == 4.0);
    CHECK(e3.lambda[2] == 5.0);
    CHECK(e3.permutation == std::vector<int>{2, 1, 0});

    const double r = 1.7;
    const std::vector<double> round(4, 1.0 / r);
    const auto er = eta_spectrum_from_kappa(round, 3);
    for (int i = 0; i < 4; ++i) {
      CHECK(er.lambda[i] == doctest::Approx(3.0 / r));
    }
  }
}
