#include <doctest.h>

#include "roughsde/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace roughsde;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_ou() {
  return json::parse(R"({
    "scenario": "thm_multidim_convergence",
    "preset": "ou",
    "grid": {"bounds": [[-6, 6]], "cells": [512]},
    "paths": 200,
    "T": 0.5,
    "dt": 0.0078125,
    "deltas": [0.2, 0.1, 0.05, 0.025],
    "seed": 9,
    "rules": {"record_stride": 4}
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "roughsde_test_runner" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool mentions(const std::vector<std::string>& problems, const std::string& key) {
  for (const auto& p : problems)
    if (p.find(key) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("git-style blob hashes") {
  CHECK(blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("validation lists every offending field") {
  CHECK(validate_config(small_ou()).empty());

  json bad = small_ou();
  bad["scenario"] = "thm_everything";
  bad["preset"] = "no_such_field";
  bad["grid"]["cells"] = {2};
  bad["T"] = -1.0;
  bad["colour"] = "red";
  const auto problems = validate_config(bad);
  CHECK(mentions(problems, "scenario: unknown scenario"));
  CHECK(mentions(problems, "preset: unknown preset"));
  CHECK(mentions(problems, "grid.cells[0]"));
  CHECK(mentions(problems, "T:"));
  CHECK(mentions(problems, "colour: unknown field"));
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  try {
    parse_config(bad);
  } catch (const ConfigError& e) {
    CHECK(e.problems() == problems);
  }

  json few = small_ou();
  few["deltas"] = {0.2, 0.1, 0.05};
  CHECK(mentions(validate_config(few), "deltas"));
  few["deltas"] = {0.2, 0.1, 0.001, 0.0005};
  CHECK(mentions(validate_config(few), "below one grid cell"));
  few["deltas"] = {0.2, 0.3, 0.1, 0.05};
  CHECK(mentions(validate_config(few), "strictly decreasing"));

  json steps = small_ou();
  steps["dt"] = 0.3;
  CHECK(mentions(validate_config(steps), "whole number of steps"));

  json params = small_ou();
  params["params"] = {{"theta", -1.0}};
  CHECK(mentions(validate_config(params), "params"));
}

TEST_CASE("scenario specific validation") {
  json energy = json::parse(R"({"scenario": "elliptic_energy", "preset": "ou",
    "grid": {"bounds": [[-4, 4]], "cells": [64]}, "T": 0.1, "seed": 1, "rules": {"p": 1}})");
  CHECK(mentions(validate_config(energy), "p > d"));
  energy["rules"]["p"] = 2;
  energy["rules"]["q"] = 3;
  CHECK(mentions(validate_config(energy), "rules.q"));
  energy["rules"]["q"] = 4;
  CHECK(validate_config(energy).empty());
  energy["rules"]["eps"] = 0.1;
  CHECK(mentions(validate_config(energy), "rules.eps: not used"));

  json kin = json::parse(R"({"scenario": "kinetic_langevin", "preset": "ou",
    "grid": {"bounds": [[-4, 4]], "cells": [64]}, "T": 0.1, "seed": 1})");
  const auto kp = validate_config(kin);
  CHECK(mentions(kp, "2-D phase-space grid"));
  CHECK(mentions(kp, "kinetic_langevin preset"));

  json audit = json::parse(R"({"scenario": "norm_audit", "preset": "sqrt_diffusion",
    "grid": {"bounds": [[-8, 8]], "cells": [256]}, "T": 1, "seed": 0,
    "deltas": [0.5, 0.25, 0.125, 0.0625]})");
  CHECK(mentions(validate_config(audit), "periodic grid"));

  json map = small_ou();
  map["scenario"] = "ae_uniqueness_map";
  map["deltas"] = {0.1, 0.05, 0.025};
  map["rules"] = {{"dt_factors", {1}}};
  const auto mp = validate_config(map);
  CHECK(mentions(mp, "exactly two builds"));
  CHECK(mentions(mp, "rules.dt_factors"));
}

TEST_CASE("config echo round-trips") {
  const ScenarioConfig c = parse_config(small_ou());
  CHECK(c.rules["p"] == 2.0);
  CHECK(c.rules["eps"].size() == 4);
  CHECK(c.periodic == std::vector<bool>{false});
  const ScenarioConfig again = parse_config(to_json(c));
  CHECK(to_json(again) == to_json(c));
}

TEST_CASE("small run writes a complete, reproducible artifact") {
  const ScenarioConfig c = parse_config(small_ou());
  const fs::path a = scratch("a"), b = scratch("b");
  const RunArtifact ra = run_scenario(c, a);
  const RunArtifact rb = run_scenario(c, b);
  CHECK(ra.complete);
  CHECK(ra.passed());
  CHECK(ra.manifest["complete"] == true);
  CHECK(ra.manifest["input_hash"] == rb.manifest["input_hash"]);
  REQUIRE(ra.files == rb.files);
  CHECK(std::find(ra.files.begin(), ra.files.end(), "series/cauchy_matrix.csv") != ra.files.end());
  for (const auto& f : ra.files) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  const std::string q = slurp(a / "series/q_functional.csv");
  CHECK(q.rfind("epsilon,t,EQ,stderr\n", 0) == 0);

  ScenarioConfig other = c;
  other.seed = 10;
  const RunArtifact rc = run_scenario(other, scratch("c"));
  CHECK(rc.manifest["input_hash"] != ra.manifest["input_hash"]);
  // The output directory is not an input.
  ScenarioConfig moved = c;
  moved.output = "elsewhere";
  CHECK(run_scenario(moved, scratch("d")).manifest["input_hash"] == ra.manifest["input_hash"]);
}

TEST_CASE("output directory precedence") {
  ScenarioConfig c = parse_config(small_ou());
  c.paths = 20;
  const fs::path env_dir = scratch("env");
  c.output = scratch("cfg").string();
  setenv("ROUGHSDE_OUT", env_dir.c_str(), 1);
  CHECK(run_scenario(c).out == env_dir);
  const fs::path flag = scratch("flag");
  CHECK(run_scenario(c, flag).out == flag);
  unsetenv("ROUGHSDE_OUT");
  CHECK(run_scenario(c).out == fs::path(c.output));
}

TEST_CASE("a run that stops part way leaves an incomplete manifest") {
  json raw = small_ou();
  raw["dt"] = 0.0625;  // above the Euler-Maruyama stability cap for ou on this box
  const ScenarioConfig c = parse_config(raw);
  const fs::path out = scratch("broken");
  CHECK_THROWS(run_scenario(c, out));
  const json m = json::parse(slurp(out / "manifest.json"));
  CHECK(m["complete"] == false);
  CHECK(m["passed"] == false);
  CHECK(m.contains("error"));
}

TEST_CASE("plot tables have the documented columns") {
  json map = json::parse(R"({"scenario": "ae_uniqueness_map", "preset": "ou",
    "grid": {"bounds": [[-6, 6]], "cells": [512]}, "paths": 50, "T": 0.25, "dt": 0.0078125,
    "deltas": [0.1, 0.05], "seed": 2, "rules": {"points": 5}})");
  const RunArtifact m = run_scenario(parse_config(map), scratch("map"));
  CHECK(m.tables.at("uniqueness_map").columns() == std::vector<std::string>{"x", "N_eps", "M_eps"});
  CHECK(m.tables.at("uniqueness_map").rows() == 5);

  json energy = json::parse(R"({"scenario": "elliptic_energy", "preset": "ou",
    "grid": {"bounds": [[-4, 4]], "cells": [64]}, "T": 0.1, "seed": 1})");
  const RunArtifact e = run_scenario(parse_config(energy), scratch("energy"));
  CHECK(e.tables.at("energy").columns() == std::vector<std::string>{"t", "alpha", "lhs", "budget"});
  CHECK(e.passed());
}
