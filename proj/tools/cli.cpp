#include "cli.hpp"

#include "commands.hpp"
#include "config.hpp"
#include "json_writer.hpp"

#include "etacurv/newton.hpp"
#include "etacurv/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

namespace etacurv::cli {

namespace {

int report_error(std::ostream& out, std::ostream& err, std::string_view status, int code, const std::string& key,
                 const std::string& message) {
  JsonObject o;
  o.add("status", status).add("exit_code", code);
  if (!key.empty()) {
    o.add("key", key);
  }
  o.add("message", message);
  out << o.str() << '\n';
  err << "error: " << message << '\n';
  return code;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides, const std::string& out_dir,
                      Geometry geometry) {
  nlohmann::json doc = read_json_file(path);
  for (const auto& o : overrides) {
    apply_override(doc, o);
  }
  RunConfig cfg = parse_config(doc, geometry);
  if (!out_dir.empty()) {
    cfg.output_dir = out_dir;
  }
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solver and verification lab for sigma_k(lambda(eta)) = f(X, nu)", "etacurv"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int threads = 0;
  const auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--override", overrides, "Dot-path override key=value (repeatable)")->allow_extra_args(false);
    sub->add_option("--threads", threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
  };

  auto* surface = app.add_subcommand("solve-surface", "Continuation solve on a radial graph over S^n");
  add_run_flags(surface);
  auto* flat = app.add_subcommand("solve-flat", "Dirichlet solve on a Euclidean domain");
  add_run_flags(flat);

  std::string surface_csv;
  auto* verify_cmd = app.add_subcommand("verify", "Recompute estimate monitors for a surface CSV");
  verify_cmd->add_option("--config", config_path, "Run configuration used to produce the surface")->required();
  verify_cmd->add_option("--surface", surface_csv, "Surface CSV with a rho column")->required();
  verify_cmd->add_option("--override", overrides, "Dot-path override key=value (repeatable)")
      ->allow_extra_args(false);
  verify_cmd->add_option("--threads", threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force symmetric function oracles");
  oracle_cmd->add_option("what", oracle.what, "sigma, cone or derivs")
      ->required()
      ->check(CLI::IsMember({"sigma", "cone", "derivs"}));
  oracle_cmd->add_option("values", oracle.values, "Eigenvalue vector")->required();
  oracle_cmd->add_option("--m", oracle.m, "Order for sigma");
  oracle_cmd->add_option("--k", oracle.k, "Cone order for cone and derivs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(out, err, "config_error", kExitConfig, "", e.what());
  }

  try {
    set_thread_count(threads);
    if (surface->parsed()) {
      return cmd_solve_surface(load_config(config_path, overrides, out_dir, Geometry::Surface), out, err);
    }
    if (flat->parsed()) {
      return cmd_solve_flat(load_config(config_path, overrides, out_dir, Geometry::Flat), out, err);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(load_config(config_path, overrides, "", Geometry::Surface), surface_csv, out, err);
    }
    if (oracle.what == "sigma" && oracle.m < 0) {
      throw ConfigError("--m", "required for sigma");
    }
    if (oracle.what != "sigma" && oracle.k < 0) {
      throw ConfigError("--k", "required for " + oracle.what);
    }
    return cmd_oracle(oracle, out, err);
  } catch (const ConfigError& e) {
    return report_error(out, err, "config_error", kExitConfig, e.key(), e.what());
  } catch (const PreconditionError& e) {
    return report_error(out, err, "precondition_failed", kExitPrecondition, "", e.what());
  } catch (const std::exception& e) {
    return report_error(out, err, "error", kExitFailure, "", e.what());
  }
}

}  // namespace etacurv::cli
