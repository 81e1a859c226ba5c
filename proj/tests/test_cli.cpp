#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = etacurv::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("etacurv_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << cfg.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json round_config() {
  return json{{"n", 2},
              {"k", 2},
              {"grid", {{"mode", "full-2d"}, {"sizes", {32, 16}}}},
              {"f", {{"builtin", "power_decay"}, {"c", 1.25}, {"p", 3}}},
              {"r1", 0.5},
              {"r2", 2.0},
              {"epsilon", 0.01},
              {"verbosity", 0}};
}

json flat_config() {
  return json{{"geometry", "flat"},
              {"n", 2},
              {"k", 2},
              {"f", {{"builtin", "constant"}, {"c", 1.0}}},
              {"domain", {{"shape", "ball"}, {"h", 0.125}}},
              {"verbosity", 0}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("oracle subcommands") {
    auto r = invoke({"oracle", "sigma", "1", "2", "3", "--m", "2"});
    CHECK(r.code == 0);
    CHECK(r.out == "11\n");
    r = invoke({"oracle", "cone", "3", "3", "-1", "--k", "2"});
    CHECK(r.out == "inside\n");
    r = invoke({"oracle", "cone", "-1", "1", "1", "--k", "2"});
    CHECK(r.out == "outside\n");

    r = invoke({"oracle", "derivs", "1", "2", "3", "--k", "2"});
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d["sigma_k"].get<double>() == 11.0);
    CHECK(d["max_gradient_diff"].get<double>() < 1e-8);
    CHECK(d["max_hessian_diff"].get<double>() < 1e-6);

    r = invoke({"oracle", "derivs", "-1", "1", "1", "--k", "2"});
    CHECK(r.code == etacurv::cli::kExitPrecondition);
  }

  TEST_CASE("oracle argument errors") {
    CHECK(invoke({"oracle", "sigma", "1", "2"}).code == etacurv::cli::kExitConfig);
    CHECK(invoke({"oracle", "sigma", "1", "2", "--m", "3"}).code == etacurv::cli::kExitConfig);
    CHECK(invoke({"oracle", "cone", "1", "2", "--k", "0"}).code == etacurv::cli::kExitConfig);
    CHECK(invoke({"oracle", "bogus", "1", "--k", "1"}).code == etacurv::cli::kExitConfig);
    CHECK(invoke({}).code == etacurv::cli::kExitConfig);
    CHECK(invoke({"--help"}).code == 0);
  }

  TEST_CASE("config errors name the key") {
    const auto dir = scratch("config_errors");
    json cfg = round_config();
    cfg.erase("k");
    auto r = invoke({"solve-surface", "--config", write_config(dir, cfg), "--out", (dir / "o").string()});
    CHECK(r.code == etacurv::cli::kExitConfig);
    CHECK(json::parse(r.out)["key"] == "k");
    CHECK(r.out.find("missing required key") != std::string::npos);

    cfg = round_config();
    cfg["grid"].erase("sizes");
    r = invoke({"solve-surface", "--config", write_config(dir, cfg)});
    CHECK(json::parse(r.out)["key"] == "grid.sizes");

    cfg = round_config();
    cfg["f"]["typo"] = 1;
    r = invoke({"solve-surface", "--config", write_config(dir, cfg)});
    CHECK(r.code == etacurv::cli::kExitConfig);
    CHECK(json::parse(r.out)["key"] == "f.typo");

    cfg = flat_config();
    cfg["k"] = 3;
    r = invoke({"solve-flat", "--config", write_config(dir, cfg)});
    CHECK(r.code == etacurv::cli::kExitConfig);
    CHECK(json::parse(r.out)["key"] == "k");

    r = invoke({"solve-flat", "--config", write_config(dir, round_config())});
    CHECK(r.code == etacurv::cli::kExitConfig);

    r = invoke({"solve-surface", "--config", (dir / "absent.json").string()});
    CHECK(r.code == etacurv::cli::kExitConfig);

    r = invoke({"solve-surface", "--config", write_config(dir, round_config()), "--override", "epsilon=0.5"});
    CHECK(r.code == etacurv::cli::kExitConfig);
    CHECK(json::parse(r.out)["key"] == "epsilon");

    r = invoke({"solve-surface", "--config", write_config(dir, round_config()), "--override", "noequals"});
    CHECK(r.code == etacurv::cli::kExitConfig);
  }

  TEST_CASE("round sphere solve") {
    const auto dir = scratch("round");
    const auto out = dir / "o";
    const auto r = invoke({"solve-surface", "--config", write_config(dir, round_config()), "--out", out.string()});
    REQUIRE(r.code == 0);
    const json status = json::parse(r.out);
    CHECK(status["status"] == "converged");
    CHECK(json::parse(slurp(out / "status.json")) == status);

    const json report = json::parse(slurp(out / "report.json"));
    CHECK(report["round_reference"]["radius"].get<double>() == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(report["round_reference"]["max_abs_deviation"].get<double>() < 1e-6);
    CHECK(report["estimates"]["identity_defect"].get<double>() <= 1e-6);
    CHECK(report["continuation"]["final_t"].get<double>() == 1.0);

    std::istringstream trace(slurp(out / "trace.jsonl"));
    std::string line;
    int records = 0;
    double last_t = -1.0;
    while (std::getline(trace, line)) {
      const double t = json::parse(line)["t"].get<double>();
      CHECK(t >= last_t);
      last_t = t;
      ++records;
    }
    CHECK(records == report["continuation"]["accepted_steps"].get<int>());
    CHECK(last_t == 1.0);

    const std::string csv = slurp(out / "surface.csv");
    CHECK(csv.rfind("node,theta,phi,rho,", 0) == 0);

    const auto v = invoke({"verify", "--config", write_config(dir, round_config()), "--surface",
                           (out / "surface.csv").string()});
    REQUIRE(v.code == 0);
    const json est = json::parse(v.out);
    CHECK(est["rho_min"].get<double>() == doctest::Approx(1.25).epsilon(1e-6));
  }

  TEST_CASE("determinism and overrides") {
    const auto dir = scratch("determinism");
    const auto cfg = write_config(dir, round_config());
    const std::vector<std::string> base = {"solve-surface", "--config", cfg, "--override", "grid.sizes=[16,8]",
                                           "--override", "seed=7"};
    auto a = base;
    a.insert(a.end(), {"--out", (dir / "a").string()});
    auto b = base;
    b.insert(b.end(), {"--out", (dir / "b").string(), "--threads", "2"});
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    CHECK(slurp(dir / "a" / "trace.jsonl") == slurp(dir / "b" / "trace.jsonl"));
    const json report = json::parse(slurp(dir / "a" / "report.json"));
    CHECK(report["grid"]["nodes"] == 128);
    CHECK(report["seed"] == 7);
  }

  TEST_CASE("constant f is rejected before solving") {
    const auto dir = scratch("constant");
    json cfg = round_config();
    cfg["f"] = {{"builtin", "constant"}, {"c", 1.0}};
    const auto r = invoke({"solve-surface", "--config", write_config(dir, cfg), "--out", (dir / "o").string()});
    CHECK(r.code == etacurv::cli::kExitPrecondition);
    const json report = json::parse(slurp(dir / "o" / "report.json"));
    CHECK(report["status"] == "precondition_failed");
    CHECK(report["conditions"]["monotonicity_max"].get<double>() > 0.0);
    CHECK(report["conditions"]["failure"] == "radial monotonicity of rho^k f");
    CHECK_FALSE(fs::exists(dir / "o" / "surface.csv"));
  }

  TEST_CASE("zero margin is flagged") {
    const auto dir = scratch("zero_margin");
    json cfg = round_config();
    cfg["f"] = {{"builtin", "power_decay"}, {"c", 1.0}, {"p", 2}};
    cfg["grid"]["sizes"] = {16, 8};
    const auto r = invoke({"solve-surface", "--config", write_config(dir, cfg), "--out", (dir / "o").string()});
    CHECK(r.code == 0);
    const json report = json::parse(slurp(dir / "o" / "report.json"));
    CHECK(report["non_unique"] == true);
    CHECK_FALSE(report.contains("round_reference"));
  }

  TEST_CASE("continuation failure exits 4 with partial artifacts") {
    const auto dir = scratch("stuck");
    json cfg = round_config();
    cfg["grid"]["sizes"] = {16, 8};
    cfg["newton"] = {{"max_iter", 1}};
    cfg["t_schedule"] = {{"dt0", 0.5}, {"dt_min", 0.2}, {"dt_max", 0.5}};
    const auto r = invoke({"solve-surface", "--config", write_config(dir, cfg), "--out", (dir / "o").string()});
    CHECK(r.code == etacurv::cli::kExitSolveFailed);
    const json report = json::parse(slurp(dir / "o" / "report.json"));
    CHECK(report["continuation"]["completed"] == false);
    CHECK(fs::exists(dir / "o" / "surface.csv"));
  }

  TEST_CASE("flat solves") {
    const auto dir = scratch("flat");
    auto r = invoke({"solve-flat", "--config", write_config(dir, flat_config()), "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    json report = json::parse(slurp(dir / "o" / "report.json"));
    CHECK(report["quadratic_reference"]["scale"].get<double>() == 1.0);
    CHECK(report["quadratic_reference"]["max_abs_error"].get<double>() < 0.125 * 0.125);
    CHECK(report["maximum_principle"] == true);
    CHECK(report["pogorelov"]["beta"].get<double>() == 4.0);
    CHECK(slurp(dir / "o" / "flat.csv").rfind("x0,x1,phi,", 0) == 0);

    json cfg = flat_config();
    cfg["f"] = {{"builtin", "grad_quadratic"}, {"c", 1.0}, {"a", 0.5}};
    r = invoke({"solve-flat", "--config", write_config(dir, cfg), "--out", (dir / "g").string()});
    REQUIRE(r.code == 0);
    report = json::parse(slurp(dir / "g" / "report.json"));
    CHECK(report["pogorelov"]["value"].get<double>() > 0.0);
    CHECK(std::isfinite(report["max_hessian_norm"].get<double>()));
    CHECK_FALSE(report.contains("quadratic_reference"));

    cfg = flat_config();
    cfg["domain"] = {{"shape", "rectangle"}, {"h", 0.0625}, {"lower", {-1, -0.5}}, {"upper", {1, 0.5}}};
    r = invoke({"solve-flat", "--config", write_config(dir, cfg), "--out", (dir / "r").string()});
    CHECK(r.code == etacurv::cli::kExitPrecondition);
    CHECK(json::parse(slurp(dir / "r" / "report.json"))["status"] == "precondition_failed");
    cfg["k"] = 1;
    r = invoke({"solve-flat", "--config", write_config(dir, cfg), "--out", (dir / "r1").string()});
    CHECK(r.code == 0);
    CHECK(json::parse(slurp(dir / "r1" / "report.json"))["maximum_principle"] == true);
  }
}
