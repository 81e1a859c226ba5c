#pragma once

// A priori estimate monitors evaluated on solved states and continuation
// traces. All functions are read-only reductions over a surface jet.

#include "etacurv/geometry.hpp"
#include "etacurv/prescribed.hpp"

#include <string>

namespace etacurv::verify {

/// Maximum of a monitor and the node where it is attained. `vacuous` is set
/// when the admissible node set is empty.
struct Extremum {
  double value = 0.0;
  int node = -1;
  bool vacuous = false;
};

/// max over nodes and directions of |kappa_i|.
[[nodiscard]] double curvature_bound(const geometry::SurfaceJet& jet);

struct GradientBound {
  double max_grad_rho = 0.0;
  double min_u = 0.0;
  int min_u_node = -1;
};

[[nodiscard]] GradientBound gradient_bound(const geometry::SurfaceJet& jet);

/// Q = log kappa_max - log(u - a) + (A/2)|X|^2 over nodes with kappa_max > 0,
/// where a = min(u) / 2.
[[nodiscard]] Extremum q_monitor(const geometry::SurfaceJet& jet, double big_a);

/// w = -log u + alpha / |X|^2. Throws std::domain_error if some u <= 0.
[[nodiscard]] Extremum w_monitor(const geometry::SurfaceJet& jet, double alpha);

/// 2 max|X|^2, the default gamma-term weight.
[[nodiscard]] double default_alpha(const geometry::SurfaceJet& jet);

/// max over nodes of |sum_i F^{ii} h_ii - f^{1/k}| / f^{1/k}.
[[nodiscard]] double identity_check(const geometry::SurfaceJet& jet, const solver::SurfaceFn& f, int k);

struct MonitorParams {
  double big_a = 2.0;
  double alpha = -1.0;  ///< negative: use default_alpha
};

struct EstimateReport {
  double max_abs_kappa = 0.0;
  double max_grad_rho = 0.0;
  double min_u = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  Extremum q;
  Extremum w;
  double identity_defect = 0.0;
};

[[nodiscard]] EstimateReport estimate_report(const geometry::SurfaceJet& jet, const solver::SurfaceFn& f, int k,
                                             const MonitorParams& params = {});

/// Single-line JSON object with the fixed field names; a vacuous Q monitor
/// is written as null value and node -1.
[[nodiscard]] std::string to_json(const EstimateReport& report);

}  // namespace etacurv::verify
