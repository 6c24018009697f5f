#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nhdqpt/runner.hpp"

using namespace nhdqpt;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef NHDQPT_CONFIG_DIR
#error "NHDQPT_CONFIG_DIR must point at the bundled configs"
#endif

namespace {

fs::path config_path(const char* name) { return fs::path(NHDQPT_CONFIG_DIR) / name; }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nhdqpt_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string parse_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json minimal() { return {{"model", {{"family", "ssh"}, {"t1", 0.6}, {"t2", 1.0}}}}; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const fs::path& dir, const json& doc) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST_CASE("bundled configs parse and round-trip") {
  for (const char* name : {"scenario_fig1a.json", "scenario_fig1b.json"}) {
    const ScenarioConfig c = load_config(config_path(name));
    CHECK(c.model.family == "ssh");
    CHECK(c.state.formulation == Formulation::NonBiorthogonal);
    CHECK(c.analysis.normalization == Normalization::SelfNorm);
    const json canonical = to_json(c);
    CHECK(to_json(parse_config(canonical)) == canonical);
  }
}

TEST_CASE("defaults") {
  const ScenarioConfig c = parse_config(minimal());
  CHECK(c.k_grid.count == 2001);
  CHECK(c.t_grid.count == 2000);
  CHECK(c.t_grid.t_max == 16.0);
  CHECK(c.analysis.n_max == 5);
  CHECK(c.analysis.cusp_threshold == 20.0);
  CHECK(c.state.kind == StateKind::PureGround);
}

TEST_CASE("config diagnostics") {
  CHECK(parse_error({{"model", json::object()}}) == "missing key: model.family");
  json doc = minimal();
  doc["model"]["colour"] = "red";
  CHECK(parse_error(doc) == "unknown key: model.colour");
  doc = minimal();
  doc["grids"] = {{"t_max", 0.0}};
  CHECK(parse_error(doc) == "tGrid: tMax must be > 0");
  doc = minimal();
  doc["model"]["t1"] = "big";
  CHECK(parse_error(doc) == "model.t1: expected a number");
  doc = minimal();
  doc["state"] = {{"kind", "gibbs"}};
  CHECK(parse_error(doc) == "missing key: state.beta");
  doc = minimal();
  doc["model"]["phi"] = 1.0;
  CHECK(parse_error(doc).find("lindblad_ssh") != std::string::npos);
  doc = minimal();
  doc["schema_version"] = 7;
  CHECK(parse_error(doc).find("schema_version") == 0);
  doc = minimal();
  doc["output"] = {{"formats", {"csv", "xml"}}};
  CHECK(parse_error(doc).find("output.formats") == 0);
}

TEST_CASE("syntax errors report a line") {
  const fs::path dir = scratch_dir("syntax");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\n  \"model\": {\n    \"family\": ssh\n  }\n}\n";
  try {
    load_config(dir / "bad.json");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("lindblad family builds the non-Hermitian SSH model") {
  json doc = minimal();
  doc["model"]["family"] = "lindblad_ssh";
  doc["model"]["prequench"] = {{"gamma", 1.5}};
  const QuenchScenario s = parse_config(doc).build();
  const auto ssh = make_ssh(0.6, 1.0, 1.5);
  for (double k : {-2.0, 0.0, 1.0, kPi}) {
    CHECK(std::abs(s.h0_model(k).x - ssh(k).x) < 1e-14);
    CHECK(std::abs(s.h0_model(k).y - ssh(k).y) < 1e-14);
  }
}

TEST_CASE("format_double round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(16.0) == "16");
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> dist(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = dist(gen);
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("grid scan finds exceptional points and gap closings") {
  json doc = minimal();
  doc["model"]["t1"] = 0.5;
  doc["model"]["prequench"] = {{"gamma", 0.5}};
  const auto issues = scan_grid(parse_config(doc).build());
  REQUIRE(issues.size() == 2);
  CHECK(std::abs(std::abs(issues[0].k) - kPi) < 1e-15);

  doc = minimal();
  doc["model"]["t1"] = 1.0;
  doc["model"]["prequench"] = {{"gamma", 0.3}};
  const auto gapless = scan_grid(parse_config(doc).build());
  REQUIRE(gapless.size() == 2);  // k = -pi and k = pi
  for (const auto& issue : gapless) CHECK(issue.what == "postquench gap closes");

  CHECK(scan_grid(load_config(config_path("scenario_fig1a.json")).build()).empty());
}

TEST_CASE("run writes all artifacts deterministically") {
  const fs::path a = scratch_dir("run_a");
  const fs::path b = scratch_dir("run_b");
  std::ostringstream out, err;
  REQUIRE(run_command(config_path("scenario_fig1a.json"), a, 1, out, err) == 0);
  REQUIRE(run_command(config_path("scenario_fig1a.json"), b, 3, out, err) == 0);
  for (const char* name : {"rate_function.csv", "fisher_zeros.csv", "critical_points.csv",
                           "vector_flow.csv", "orthogonality_flow.csv"}) {
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  // The echoed config differs only in the output directory.
  json sa = json::parse(slurp(a / "summary.json"));
  json sb = json::parse(slurp(b / "summary.json"));
  sa["config"]["output"].erase("directory");
  sb["config"]["output"].erase("directory");
  CHECK(sa == sb);

  CHECK(sa["nu0"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sa["nu1"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sa["delta_nu"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sa["cusps"][0]["t"].get<double>() == doctest::Approx(3.926991).epsilon(1e-2));
  CHECK(sa["excluded"]["k_points"] == 0);
  CHECK(sa["version"] == kToolVersion);

  CHECK(slurp(a / "rate_function.csv").rfind("t,lambda\n", 0) == 0);
  CHECK(slurp(a / "critical_points.csv").rfind("n,k_c,t_c\n", 0) == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cross-artifact consistency") {
  for (const char* name : {"scenario_fig1a.json", "scenario_fig1b.json"}) {
    const ScenarioConfig c = load_config(config_path(name));
    const RunArtifacts art = run_scenario(c);
    const double window = 2 * c.t_grid.step();
    for (const auto& ct : art.critical_times) {
      if (ct.t >= c.t_grid.t_max) continue;
      REQUIRE(ct.cusp_t);
      CHECK(std::abs(*ct.cusp_t - ct.t) <= window);
    }
    for (const auto& z : art.fisher_zeros) {
      for (const auto& ct : art.critical_times)
        if (z.k == ct.k && z.n == ct.n) CHECK(std::abs(z.z.real()) < 1e-8);
    }
    const json summary = summary_json(c, art);
    for (const auto& cusp : summary["cusps"]) CHECK(cusp["critical"].get<bool>());
  }
}

TEST_CASE("numerical failures exit 3 and leave no files") {
  const fs::path dir = scratch_dir("ep");
  json doc = minimal();
  doc["model"]["t1"] = 0.5;
  doc["model"]["prequench"] = {{"gamma", 0.5}};
  const fs::path cfg = write_config(dir, doc);
  std::ostringstream out, err;
  CHECK(run_command(cfg, dir / "out", 0, out, err) == 3);
  CHECK(err.str().find("k = ") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  std::ostringstream vout, verr;
  CHECK(validate_command(cfg, vout, verr) == 0);
  CHECK(vout.str().find("warning: exceptional point in prequench model at k = ") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config failures exit 2") {
  const fs::path dir = scratch_dir("cfg");
  const fs::path cfg = write_config(dir, {{"model", json::object()}});
  std::ostringstream out, err;
  CHECK(run_command(cfg, dir / "out", 0, out, err) == 2);
  CHECK(err.str().find("missing key: model.family") != std::string::npos);
  CHECK(validate_command(dir / "missing.json", out, err) == 2);
  fs::remove_all(dir);
}

TEST_CASE("validate reports a clean grid") {
  std::ostringstream out, err;
  CHECK(validate_command(config_path("scenario_fig1a.json"), out, err) == 0);
  CHECK(out.str() == "ok, 0 excluded k points\n");
}
