#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace etacurv::cli {

int cmd_solve_surface(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_solve_flat(const RunConfig& cfg, std::ostream& out, std::ostream& err);
/// Recomputes the estimate report for the rho column of a surface CSV.
int cmd_verify(const RunConfig& cfg, const std::string& surface_csv, std::ostream& out, std::ostream& err);

struct OracleArgs {
  std::string what;  ///< sigma, cone or derivs
  std::vector<double> values;
  int m = -1;
  int k = -1;
};
int cmd_oracle(const OracleArgs& args, std::ostream& out, std::ostream& err);

}  // namespace etacurv::cli
