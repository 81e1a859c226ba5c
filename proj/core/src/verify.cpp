#include "etacurv/verify.hpp"

#include "etacurv/format.hpp"
#include "etacurv/symm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace etacurv::verify {

double curvature_bound(const geometry::SurfaceJet& jet) {
  double out = 0.0;
  for (const auto& nj : jet) {
    out = std::max(out, nj.kappa.cwiseAbs().maxCoeff());
  }
  return out;
}

GradientBound gradient_bound(const geometry::SurfaceJet& jet) {
  GradientBound b;
  b.min_u = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < jet.size(); ++i) {
    b.max_grad_rho = std::max(b.max_grad_rho, jet[i].grad_norm);
    if (jet[i].support < b.min_u) {
      b.min_u = jet[i].support;
      b.min_u_node = static_cast<int>(i);
    }
  }
  return b;
}

Extremum q_monitor(const geometry::SurfaceJet& jet, double big_a) {
  const double a = 0.5 * gradient_bound(jet).min_u;
  Extremum e;
  e.value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < jet.size(); ++i) {
    const auto& nj = jet[i];
    const double kmax = nj.kappa(0);
    if (!(kmax > 0.0)) {
      continue;
    }
    const double q = std::log(kmax) - std::log(nj.support - a) + 0.5 * big_a * nj.position.squaredNorm();
    if (q > e.value) {
      e.value = q;
      e.node = static_cast<int>(i);
    }
  }
  if (e.node < 0) {
    e.vacuous = true;
    e.value = 0.0;
  }
  return e;
}

Extremum w_monitor(const geometry::SurfaceJet& jet, double alpha) {
  Extremum e;
  e.value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < jet.size(); ++i) {
    const auto& nj = jet[i];
    if (!(nj.support > 0.0)) {
      throw std::domain_error("w monitor needs u > 0; node " + std::to_string(i) + " has u = " +
                              std::to_string(nj.support));
    }
    const double w = -std::log(nj.support) + alpha / nj.position.squaredNorm();
    if (w > e.value) {
      e.value = w;
      e.node = static_cast<int>(i);
    }
  }
  if (e.node < 0) {
    e.vacuous = true;
    e.value = 0.0;
  }
  return e;
}

double default_alpha(const geometry::SurfaceJet& jet) {
  double r2 = 0.0;
  for (const auto& nj : jet) {
    r2 = std::max(r2, nj.position.squaredNorm());
  }
  return 2.0 * r2;
}

double identity_check(const geometry::SurfaceJet& jet, const solver::SurfaceFn& f, int k) {
  double worst = 0.0;
  for (const auto& nj : jet) {
    const symm::SpectrumVector lambda(nj.eta, k);
    const auto coeffs = symm::operator_coefficients(lambda);
    double lhs = 0.0;
    for (int p = 0; p < lambda.n(); ++p) {
      // In the principal frame h_ii = kappa_i.
      lhs += coeffs.f_coeffs(p) * nj.kappa(nj.eta_perm[static_cast<std::size_t>(p)]);
    }
    const double rhs = std::pow(f(nj.position, nj.normal), 1.0 / k);
    worst = std::max(worst, std::abs(lhs - rhs) / rhs);
  }
  return worst;
}

EstimateReport estimate_report(const geometry::SurfaceJet& jet, const solver::SurfaceFn& f, int k,
                               const MonitorParams& params) {
  EstimateReport r;
  r.max_abs_kappa = curvature_bound(jet);
  const auto gb = gradient_bound(jet);
  r.max_grad_rho = gb.max_grad_rho;
  r.min_u = gb.min_u;
  r.rho_min = std::numeric_limits<double>::infinity();
  r.rho_max = -std::numeric_limits<double>::infinity();
  for (const auto& nj : jet) {
    r.rho_min = std::min(r.rho_min, nj.rho);
    r.rho_max = std::max(r.rho_max, nj.rho);
  }
  r.q = q_monitor(jet, params.big_a);
  r.w = w_monitor(jet, params.alpha < 0.0 ? default_alpha(jet) : params.alpha);
  r.identity_defect = identity_check(jet, f, k);
  return r;
}

std::string to_json(const EstimateReport& r) {
  std::ostringstream os;
  os << "{\"max_abs_kappa\":" << format_double(r.max_abs_kappa)
     << ",\"max_grad_rho\":" << format_double(r.max_grad_rho)
     << ",\"min_u\":" << format_double(r.min_u)
     << ",\"rho_min\":" << format_double(r.rho_min)
     << ",\"rho_max\":" << format_double(r.rho_max)
     << ",\"q_value\":" << (r.q.vacuous ? std::string("null") : format_double(r.q.value))
     << ",\"q_node\":" << r.q.node
     << ",\"w_value\":" << format_double(r.w.value)
     << ",\"w_node\":" << r.w.node
     << ",\"identity_defect\":" << format_double(r.identity_defect) << '}';
  return os.str();
}

}  // namespace etacurv::verify
