#pragma once

// Run configuration for the etacurv command: JSON parsing, dot-path
// overrides, and validation that names the offending key.

#include "etacurv/flatcase.hpp"
#include "etacurv/geometry.hpp"
#include "etacurv/solver.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace etacurv::cli {

class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

enum class Geometry { Surface, Flat };

struct FSpec {
  std::string builtin;
  double c = 1.0;
  double p = 3.0;
  double delta = 0.0;
  int axis = -1;
  double a = 1.0;
  std::vector<double> radii;
  std::vector<double> values;
};

struct NewtonSpec {
  double tol = 1e-10;
  int max_iter = 40;
  int max_halvings = 6;
  std::string form = "raw";
  std::string jacobian = "analytic";
};

struct RunConfig {
  Geometry geometry = Geometry::Surface;
  int n = 2;
  int k = 2;
  FSpec f;
  NewtonSpec newton;
  unsigned seed = 0;
  std::string output_dir = "out";
  int verbosity = 1;

  // surface
  geometry::GridMode grid_mode = geometry::GridMode::Full2d;
  geometry::GridSizes grid_sizes;
  double r1 = 0.5;
  double r2 = 2.0;
  double epsilon = 0.01;
  solver::TSchedule schedule;
  verify::MonitorParams monitors;
  int validation_samples = 256;

  // flat
  flatcase::DomainSpec domain;
  double beta = 4.0;
};

/// Reads and parses a JSON file; parse failures are ConfigErrors.
[[nodiscard]] nlohmann::json read_json_file(const std::string& path);

/// Applies "a.b.c=value"; the value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Validates every field before any compute. `expected` is the geometry
/// implied by the subcommand; a conflicting "geometry" key is an error.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc, Geometry expected);

[[nodiscard]] solver::PrescribedData surface_data(const RunConfig& cfg);
[[nodiscard]] flatcase::FlatFn flat_function(const RunConfig& cfg);
[[nodiscard]] solver::NewtonConfig surface_newton(const RunConfig& cfg);
[[nodiscard]] flatcase::FlatConfig flat_newton(const RunConfig& cfg);

}  // namespace etacurv::cli
