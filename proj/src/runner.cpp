#include "roughsde/runner.hpp"

#include "roughsde/brownian.hpp"
#include "roughsde/field.hpp"
#include "roughsde/fpe.hpp"
#include "roughsde/functionals.hpp"
#include "roughsde/law.hpp"
#include "roughsde/maxops.hpp"
#include "roughsde/norms.hpp"
#include "roughsde/sde.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#ifndef ROUGHSDE_VERSION
#define ROUGHSDE_VERSION "0.0.0"
#endif

namespace roughsde {

using nlohmann::json;

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"thm_multidim_convergence", "thm_1d_convergence", "elliptic_energy",
                                              "stationary_1d",            "kinetic_langevin",   "ae_uniqueness_map",
                                              "norm_audit"};
  return names;
}

std::string code_version() { return ROUGHSDE_VERSION; }

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

json default_rules(const std::string& scenario) {
  json r = {{"record_stride", 1}, {"initial", {{"kind", "gaussian"}, {"mean", 0.0}, {"sd", 0.5}}}};
  if (scenario == "thm_multidim_convergence" || scenario == "thm_1d_convergence") {
    r["p"] = 2.0;
    r["eps"] = {1e-1, 1e-2, 1e-3, 1e-4};
    r["max_exit_fraction"] = 1e-3;
    r["finest_max"] = nullptr;
    if (scenario == "thm_1d_convergence") {
      r["eps_min"] = 1e-12;
      r["eps_max"] = 0.5;
      r["leps_flavor"] = "plateau";
      r["block_min_run"] = 0;
    }
  } else if (scenario == "elliptic_energy") {
    r["alphas"] = {2.0, 4.0};
    r["p"] = 2.0;
    r["q"] = 4.0;
    r["heat_a0"] = 1.0;
    r["density_stride"] = 0;
  } else if (scenario == "stationary_1d") {
    r["C"] = nullptr;
    r["rel_tol"] = 1e-8;
    r["abs_tol"] = 1e-6;
    r["compare_cells"] = 128;
    r["mc_l1_max"] = 0.05;
    r["density_stride"] = 0;
  } else if (scenario == "kinetic_langevin") {
    r["initial"] = {{"kind", "gaussian"}, {"mean", {0.0, 0.0}}, {"sd", {0.4, 0.4}}};
    r["record_stride"] = 10;
    r["density_stride"] = 0;
  } else if (scenario == "ae_uniqueness_map") {
    r["points"] = 64;
    r["x_range"] = {-2.0, 2.0};
    r["eps"] = 1e-2;
    r["threshold"] = 0.02;
    r["min_fraction"] = 1.0;
    r["dt_factors"] = {1, 1};
    r["refined_deltas"] = json::array();
    r["refined_dt_factors"] = {1, 1};
  } else if (scenario == "norm_audit") {
    r["law"] = {{"kind", "uniform"}, {"lower", -2.0}, {"upper", 2.0}};
    json Ls = json::array();
    for (double l = 1.0; l <= 64.0; l *= 2.0) Ls.push_back(std::exp(l));
    r["L_grid"] = Ls;
    r["phi"] = "standard";
    r["law_deltas"] = json::array();
    r["holder"] = {{"p", 2.0}, {"q", 2.0}};
    r["periodic_field"] = false;
  }
  return r;
}

// Collects problems instead of stopping at the first one.
struct Checker {
  std::vector<std::string> problems;

  void fail(const std::string& field, const std::string& msg) { problems.push_back(field + ": " + msg); }

  bool number(const json& j, const std::string& field, bool positive = false) {
    if (!j.is_number()) {
      fail(field, "must be a number");
      return false;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v) || (positive && !(v > 0.0))) {
      fail(field, positive ? "must be positive and finite" : "must be finite");
      return false;
    }
    return true;
  }

  bool integer(const json& j, const std::string& field, long long min) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
      fail(field, "must be an integer");
      return false;
    }
    if (j.get<long long>() < min) {
      fail(field, "must be >= " + std::to_string(min));
      return false;
    }
    return true;
  }

  bool number_list(const json& j, const std::string& field, std::size_t min_size) {
    if (!j.is_array()) {
      fail(field, "must be an array of numbers");
      return false;
    }
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) ok = number(j[i], field + "[" + std::to_string(i) + "]", true) && ok;
    if (j.size() < min_size) {
      fail(field, "needs at least " + std::to_string(min_size) + " entries");
      ok = false;
    }
    return ok;
  }
};

void check_initial(Checker& c, const json& init, int dim) {
  if (!init.is_object() || !init.contains("kind") || !init["kind"].is_string()) {
    c.fail("rules.initial", "must be an object with a string 'kind'");
    return;
  }
  const std::string kind = init["kind"];
  auto coord = [&](const char* key, bool positive) {
    const std::string f = std::string("rules.initial.") + key;
    if (!init.contains(key)) return c.fail(f, "missing");
    const json& v = init[key];
    if (dim == 1) {
      c.number(v, f, positive);
    } else if (!v.is_array() || v.size() != 2) {
      c.fail(f, "must be a 2-element array on a 2-D grid");
    } else {
      c.number(v[0], f + "[0]", positive);
      c.number(v[1], f + "[1]", positive);
    }
  };
  if (kind == "point") {
    coord("x", false);
  } else if (kind == "gaussian") {
    coord("mean", false);
    coord("sd", true);
  } else {
    c.fail("rules.initial.kind", "must be 'point' or 'gaussian'");
  }
}

std::array<double, 2> pair_of(const json& v) {
  if (v.is_array()) return {v[0].get<double>(), v[1].get<double>()};
  return {v.get<double>(), 0.0};
}

InitialSpec initial_of(const json& init) {
  if (init["kind"] == "point") {
    const auto x = pair_of(init["x"]);
    return InitialSpec::at(x[0], x[1]);
  }
  return InitialSpec::gaussian(pair_of(init["mean"]), pair_of(init["sd"]));
}

Grid grid_of(const ScenarioConfig& c) {
  std::vector<bool> per = c.periodic;
  std::array<bool, 2> p{per[0], per.size() > 1 ? static_cast<bool>(per[1]) : false};
  return make_grid(static_cast<int>(c.cells.size()), std::span(c.bounds), std::span(c.cells),
                   std::span<const bool>(p.data(), c.cells.size()));
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument("invalid scenario config: " + join(problems, "; ")), problems_(std::move(problems)) {}

std::vector<std::string> validate_config(const json& raw) {
  Checker c;
  if (!raw.is_object()) return {"config: must be a JSON object"};
  static const std::vector<std::string> known{"scenario", "preset", "params", "grid", "paths", "T",
                                              "dt",       "deltas", "seed",   "output", "rules"};
  for (const auto& [k, v] : raw.items())
    if (!contains(known, k)) c.fail(k, "unknown field");

  std::string scenario;
  if (!raw.contains("scenario") || !raw["scenario"].is_string()) {
    c.fail("scenario", "missing or not a string");
  } else {
    scenario = raw["scenario"];
    if (!contains(scenario_names(), scenario)) {
      c.fail("scenario", "unknown scenario '" + scenario + "' (expected one of " + join(scenario_names(), ", ") + ")");
      scenario.clear();
    }
  }
  std::string preset;
  if (!raw.contains("preset") || !raw["preset"].is_string()) {
    c.fail("preset", "missing or not a string");
  } else {
    preset = raw["preset"];
    if (!contains(preset_names(), preset)) {
      c.fail("preset", "unknown preset '" + preset + "'");
      preset.clear();
    }
  }
  if (raw.contains("params") && !raw["params"].is_object()) c.fail("params", "must be an object");

  int dim = 0;
  double min_width = 0.0;
  bool periodic_x = false;
  if (!raw.contains("grid") || !raw["grid"].is_object()) {
    c.fail("grid", "missing or not an object");
  } else {
    const json& g = raw["grid"];
    const bool b_ok = g.contains("bounds") && g["bounds"].is_array() && !g["bounds"].empty() && g["bounds"].size() <= 2;
    const bool n_ok = g.contains("cells") && g["cells"].is_array() && !g["cells"].empty() && g["cells"].size() <= 2;
    if (!b_ok) c.fail("grid.bounds", "must be an array of 1 or 2 [lower, upper] pairs");
    if (!n_ok) c.fail("grid.cells", "must be an array of 1 or 2 cell counts");
    if (b_ok && n_ok && g["bounds"].size() != g["cells"].size()) c.fail("grid", "bounds and cells differ in length");
    if (b_ok && n_ok && g["bounds"].size() == g["cells"].size()) {
      dim = static_cast<int>(g["cells"].size());
      min_width = std::numeric_limits<double>::infinity();
      for (int k = 0; k < dim; ++k) {
        const std::string fb = "grid.bounds[" + std::to_string(k) + "]";
        const std::string fc = "grid.cells[" + std::to_string(k) + "]";
        const json& b = g["bounds"][static_cast<std::size_t>(k)];
        const bool bk = b.is_array() && b.size() == 2 && b[0].is_number() && b[1].is_number() &&
                        b[0].get<double>() < b[1].get<double>();
        if (!bk) c.fail(fb, "must be [lower, upper] with lower < upper");
        const bool ck = c.integer(g["cells"][static_cast<std::size_t>(k)], fc, 8);
        if (bk && ck)
          min_width = std::min(min_width, (b[1].get<double>() - b[0].get<double>()) /
                                              g["cells"][static_cast<std::size_t>(k)].get<double>());
      }
    }
    if (g.contains("periodic")) {
      if (!g["periodic"].is_array() || (dim && g["periodic"].size() != static_cast<std::size_t>(dim)))
        c.fail("grid.periodic", "must be an array of booleans, one per axis");
      else
        for (const auto& p : g["periodic"])
          if (!p.is_boolean()) c.fail("grid.periodic", "entries must be booleans");
      if (g["periodic"].is_array() && !g["periodic"].empty() && g["periodic"][0].is_boolean())
        periodic_x = g["periodic"][0];
    }
    for (const auto& [k, v] : g.items())
      if (!contains({"bounds", "cells", "periodic"}, k)) c.fail("grid." + k, "unknown field");
  }

  if (!raw.contains("T")) c.fail("T", "missing");
  else c.number(raw["T"], "T", true);
  if (!raw.contains("seed")) c.fail("seed", "missing");
  else c.integer(raw["seed"], "seed", 0);
  if (raw.contains("output") && !raw["output"].is_string()) c.fail("output", "must be a string");

  const bool ensembles = scenario == "thm_multidim_convergence" || scenario == "thm_1d_convergence" ||
                         scenario == "ae_uniqueness_map";
  if (ensembles || raw.contains("paths")) {
    if (!raw.contains("paths")) c.fail("paths", "missing");
    else c.integer(raw["paths"], "paths", ensembles ? 1 : 0);
  }
  const bool needs_dt = ensembles || (scenario == "stationary_1d" && raw.contains("paths") &&
                                      raw["paths"].is_number_integer() && raw["paths"].get<long long>() > 0);
  if (needs_dt || raw.contains("dt")) {
    if (!raw.contains("dt")) {
      c.fail("dt", "missing");
    } else if (c.number(raw["dt"], "dt", true) && raw.contains("T") && raw["T"].is_number() && ensembles) {
      const double steps = raw["T"].get<double>() / raw["dt"].get<double>();
      if (std::abs(steps - std::round(steps)) > 1e-9 * steps) c.fail("dt", "T / dt must be a whole number of steps");
    }
  }
  std::size_t min_deltas = 0;
  if (scenario == "thm_multidim_convergence" || scenario == "thm_1d_convergence" || scenario == "norm_audit")
    min_deltas = 4;
  if (scenario == "ae_uniqueness_map") min_deltas = 2;
  if (min_deltas || raw.contains("deltas")) {
    if (!raw.contains("deltas")) {
      c.fail("deltas", "missing");
    } else if (c.number_list(raw["deltas"], "deltas", min_deltas)) {
      const auto d = raw["deltas"].get<std::vector<double>>();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (i && !(d[i] < d[i - 1])) c.fail("deltas", "must be strictly decreasing");
        if (d[i] < min_width) c.fail("deltas[" + std::to_string(i) + "]", "below one grid cell");
      }
      if (scenario == "ae_uniqueness_map" && d.size() != 2) c.fail("deltas", "needs exactly two builds");
    }
  }

  if (!scenario.empty()) {
    if (dim) {
      const bool two_d = scenario == "kinetic_langevin";
      const bool any_d = scenario == "thm_multidim_convergence";
      if (two_d && dim != 2) c.fail("grid", "kinetic_langevin needs a 2-D phase-space grid");
      if (!two_d && !any_d && dim != 1) c.fail("grid", scenario + " needs a 1-D grid");
    }
    if (scenario == "kinetic_langevin" && !preset.empty() && preset != "kinetic_langevin")
      c.fail("preset", "kinetic_langevin scenario needs the kinetic_langevin preset");
    if (scenario == "norm_audit" && dim == 1 && !periodic_x) c.fail("grid.periodic", "norm_audit needs a periodic grid");

    const json defaults = default_rules(scenario);
    json rules = defaults;
    if (raw.contains("rules")) {
      if (!raw["rules"].is_object()) {
        c.fail("rules", "must be an object");
      } else {
        for (const auto& [k, v] : raw["rules"].items()) {
          if (!defaults.contains(k)) c.fail("rules." + k, "not used by " + scenario);
          else rules[k] = v;
        }
      }
    }
    c.integer(rules["record_stride"], "rules.record_stride", 1);
    if (scenario != "norm_audit" && scenario != "ae_uniqueness_map" && dim) check_initial(c, rules["initial"], dim);
    if (rules.contains("p") && c.number(rules["p"], "rules.p", true) && scenario == "elliptic_energy") {
      const double p = rules["p"];
      if (dim && !(p > dim)) c.fail("rules.p", "energy monitor needs p > d");
      else if (c.number(rules["q"], "rules.q", true) && dim && rules["q"].get<double>() < 2.0 / (1.0 - dim / p))
        c.fail("rules.q", "energy monitor needs q >= 2 / theta with theta = 1 - d / p");
    }
    if (rules.contains("p") && scenario != "elliptic_energy" && rules["p"].is_number() && !(rules["p"].get<double>() > 1))
      c.fail("rules.p", "Cauchy exponent must be > 1");
    if (rules.contains("eps") && rules["eps"].is_array()) c.number_list(rules["eps"], "rules.eps", 1);
    if (rules.contains("eps") && !rules["eps"].is_array()) c.number(rules["eps"], "rules.eps", true);
    if (rules.contains("alphas") && c.number_list(rules["alphas"], "rules.alphas", 1))
      for (double a : rules["alphas"].get<std::vector<double>>())
        if (!(a > 1.0)) c.fail("rules.alphas", "exponents must be > 1");
    if (rules.contains("eps_min") && c.number(rules["eps_min"], "rules.eps_min", true) &&
        c.number(rules["eps_max"], "rules.eps_max", true) &&
        !(rules["eps_min"].get<double>() < rules["eps_max"].get<double>() && rules["eps_max"].get<double>() < 1.0))
      c.fail("rules.eps_max", "need eps_min < eps_max < 1");
    if (rules.contains("leps_flavor") && rules["leps_flavor"] != "plateau" && rules["leps_flavor"] != "linear1d")
      c.fail("rules.leps_flavor", "must be 'plateau' or 'linear1d'");
    if (rules.contains("C") && !rules["C"].is_null()) c.number(rules["C"], "rules.C", true);
    if (rules.contains("points")) c.integer(rules["points"], "rules.points", 1);
    if (rules.contains("x_range") &&
        (!rules["x_range"].is_array() || rules["x_range"].size() != 2 || !rules["x_range"][0].is_number() ||
         !rules["x_range"][1].is_number() || !(rules["x_range"][0].get<double>() <= rules["x_range"][1].get<double>())))
      c.fail("rules.x_range", "must be [lo, hi] with lo <= hi");
    for (const char* k : {"dt_factors", "refined_dt_factors"})
      if (rules.contains(k)) {
        const json& f = rules[k];
        if (!f.is_array() || f.size() != 2) c.fail(std::string("rules.") + k, "must hold two integers");
        else for (const auto& x : f) c.integer(x, std::string("rules.") + k, 1);
      }
    if (rules.contains("refined_deltas") && !rules["refined_deltas"].empty() &&
        c.number_list(rules["refined_deltas"], "rules.refined_deltas", 2) && rules["refined_deltas"].size() != 2)
      c.fail("rules.refined_deltas", "needs exactly two builds");
    if (rules.contains("L_grid") && c.number_list(rules["L_grid"], "rules.L_grid", 1)) {
      const auto L = rules["L_grid"].get<std::vector<double>>();
      if (L.front() < std::exp(1.0) * (1 - 1e-12)) c.fail("rules.L_grid", "must start at L >= e");
      for (std::size_t i = 1; i < L.size(); ++i)
        if (!(L[i] > L[i - 1])) c.fail("rules.L_grid", "must be increasing");
    }
    if (rules.contains("phi") && rules["phi"] != "standard" && rules["phi"] != "appendix")
      c.fail("rules.phi", "must be 'standard' or 'appendix'");
    if (rules.contains("law_deltas") && !rules["law_deltas"].empty()) c.number_list(rules["law_deltas"], "rules.law_deltas", 4);
    if (rules.contains("law")) {
      const json& l = rules["law"];
      const std::string kind = l.is_object() && l.contains("kind") && l["kind"].is_string() ? l["kind"] : "";
      if (kind == "uniform") {
        if (!(l.contains("lower") && l.contains("upper") && l["lower"].is_number() && l["upper"].is_number() &&
              l["lower"].get<double>() < l["upper"].get<double>()))
          c.fail("rules.law", "uniform law needs lower < upper");
      } else if (kind == "gaussian") {
        if (!(l.contains("mean") && l.contains("sd")) || !c.number(l["mean"], "rules.law.mean") ||
            !c.number(l["sd"], "rules.law.sd", true))
          c.fail("rules.law", "gaussian law needs mean and sd > 0");
      } else {
        c.fail("rules.law.kind", "must be 'uniform' or 'gaussian'");
      }
    }
    if (rules.contains("holder")) {
      const json& h = rules["holder"];
      if (!h.is_object() || !h.contains("p") || !h.contains("q") || !h["p"].is_number() || !h["q"].is_number() ||
          !(h["p"].get<double>() > 1.0) || !(h["q"].get<double>() > 1.0))
        c.fail("rules.holder", "needs p > 1 and q > 1");
    }
    for (const char* k : {"threshold", "heat_a0", "rel_tol", "abs_tol", "mc_l1_max", "max_exit_fraction"})
      if (rules.contains(k)) c.number(rules[k], std::string("rules.") + k, true);
    if (rules.contains("min_fraction") &&
        (!rules["min_fraction"].is_number() || rules["min_fraction"].get<double>() < 0 ||
         rules["min_fraction"].get<double>() > 1))
      c.fail("rules.min_fraction", "must lie in [0, 1]");
    for (const char* k : {"compare_cells", "density_stride", "block_min_run"})
      if (rules.contains(k)) c.integer(rules[k], std::string("rules.") + k, 0);
    if (rules.contains("finest_max") && !rules["finest_max"].is_null()) c.number(rules["finest_max"], "rules.finest_max", true);
  }

  // Parameter ranges are checked by building the preset on a small grid.
  if (!preset.empty() && dim && c.problems.empty()) {
    try {
      ScenarioConfig probe;
      for (int k = 0; k < dim; ++k) {
        const json& b = raw["grid"]["bounds"][static_cast<std::size_t>(k)];
        probe.bounds.push_back({b[0].get<double>(), b[1].get<double>()});
        probe.cells.push_back(8);
        probe.periodic.push_back(false);
      }
      preset_field(preset, raw.value("params", json::object()), grid_of(probe));
    } catch (const std::exception& e) {
      c.fail("params", e.what());
    }
  }
  return c.problems;
}

ScenarioConfig parse_config(const json& raw) {
  auto problems = validate_config(raw);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  ScenarioConfig c;
  c.scenario = raw["scenario"];
  c.preset = raw["preset"];
  c.params = raw.value("params", json::object());
  const json& g = raw["grid"];
  for (std::size_t k = 0; k < g["cells"].size(); ++k) {
    c.bounds.push_back({g["bounds"][k][0].get<double>(), g["bounds"][k][1].get<double>()});
    c.cells.push_back(g["cells"][k].get<Index>());
    c.periodic.push_back(g.contains("periodic") ? g["periodic"][k].get<bool>() : false);
  }
  c.paths = raw.value("paths", Index{0});
  c.T = raw["T"];
  c.dt = raw.value("dt", 0.0);
  c.deltas = raw.value("deltas", std::vector<double>{});
  c.seed = raw["seed"].get<std::uint64_t>();
  c.output = raw.value("output", std::string());
  c.rules = default_rules(c.scenario);
  if (raw.contains("rules"))
    for (const auto& [k, v] : raw["rules"].items()) c.rules[k] = v;
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot read " + file.string());
  json raw;
  try {
    raw = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config: not valid JSON (") + e.what() + ")"});
  }
  return parse_config(raw);
}

json to_json(const ScenarioConfig& c) {
  json bounds = json::array();
  for (const auto& b : c.bounds) bounds.push_back({b[0], b[1]});
  return {{"scenario", c.scenario},
          {"preset", c.preset},
          {"params", c.params},
          {"grid", {{"bounds", bounds}, {"cells", c.cells}, {"periodic", c.periodic}}},
          {"paths", c.paths},
          {"T", c.T},
          {"dt", c.dt},
          {"deltas", c.deltas},
          {"seed", c.seed},
          {"output", c.output},
          {"rules", c.rules}};
}

std::string blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

bool RunArtifact::passed() const {
  return complete && std::all_of(checks.begin(), checks.end(), [](const Report& r) { return r.passed; });
}

std::vector<std::string> emit_plotdata(const RunArtifact& a) {
  std::vector<std::string> files;
  for (const auto& [stem, table] : a.tables) {
    const std::string rel = "series/" + stem + ".csv";
    table.save(a.out / rel);
    files.push_back(rel);
  }
  for (const auto& [stem, doc] : a.reports) {
    const std::string rel = "reports/" + stem + ".json";
    save_json(a.out / rel, doc);
    files.push_back(rel);
  }
  return files;
}

namespace {

json manifest_of(const ScenarioConfig& c, const RunArtifact& a, const std::string& error) {
  json echo = to_json(c);
  echo.erase("output");
  json checks = json::array();
  for (const auto& r : a.checks) checks.push_back({{"name", r.name}, {"passed", r.passed}});
  json m = {{"scenario", c.scenario},
            {"config", echo},
            {"code_version", code_version()},
            {"input_hash", blob_hash(echo.dump() + "\n" + code_version())},
            {"files", a.files},
            {"checks", checks},
            {"complete", a.complete},
            {"passed", a.passed()}};
  if (!error.empty()) m["error"] = error;
  return m;
}

Report simple_check(const std::string& name, bool ok, json details) { return {name, ok, std::move(details)}; }

CsvTable density_table(const DensityEvolution& ev, Index stride) {
  CsvTable t(ev.grid.dim() == 1 ? std::vector<std::string>{"t", "x", "u"} : std::vector<std::string>{"t", "x", "v", "u"});
  for (std::size_t k = 0; k < ev.times.size(); k += static_cast<std::size_t>(stride))
    for (Index n = 0; n < ev.grid.size(); ++n) {
      const auto x = ev.grid.node(n);
      if (ev.grid.dim() == 1)
        t.add_row(std::vector<double>{ev.times[k], x[0], ev.density[k][n]});
      else
        t.add_row(std::vector<double>{ev.times[k], x[0], x[1], ev.density[k][n]});
    }
  return t;
}

Report mass_check(const DensityEvolution& ev) {
  double drift = 0.0, low = 0.0;
  for (std::size_t k = 0; k < ev.mass.size(); ++k) {
    drift = std::max(drift, std::abs(ev.mass[k] - ev.mass[0]));
    low = std::min(low, ev.density[k].minCoeff());
  }
  return simple_check("mass_conservation", drift <= 1e-10 && low >= 0.0,
                      {{"max_mass_drift", drift}, {"min_density", low}, {"tolerance", 1e-10}});
}

Array initial_density(const Grid& g, const json& init) {
  if (init["kind"] == "gaussian") {
    const auto m = pair_of(init["mean"]), s = pair_of(init["sd"]);
    return g.dim() == 1 ? gaussian_density(g, m[0], s[0]) : gaussian_density(g, m, s);
  }
  if (g.dim() != 1) throw std::invalid_argument("point initial densities are 1-D");
  const Axis& ax = g.axis(0);
  Array u = Array::Zero(ax.cells);
  const double x = pair_of(init["x"])[0];
  u[ax.extend(static_cast<Index>(std::floor((x - ax.lower) / ax.width())))] = 1.0 / ax.width();
  return u;
}

// Family of coupled ensembles for the convergence scenarios.
struct Family {
  CoefficientField base;
  std::vector<CoefficientField> fields;
  std::vector<PathEnsemble> runs;
};

Family simulate_family(const ScenarioConfig& c, const Grid& g) {
  Family f{preset_field(c.preset, c.params, g), {}, {}};
  const auto steps = static_cast<Index>(std::llround(c.T / c.dt));
  const BrownianStore store(c.seed, c.paths, steps, c.dt, f.base.noise_dim());
  SimOptions o;
  o.T = c.T;
  o.paths = c.paths;
  o.record_stride = c.rules["record_stride"].get<Index>();
  const InitialSpec init = initial_of(c.rules["initial"]);
  for (double d : c.deltas) {
    f.fields.push_back(mollify(f.base, d));
    f.runs.push_back(simulate_ensemble(f.fields.back(), init, store, o));
  }
  return f;
}

void convergence(const ScenarioConfig& c, const Grid& g, RunArtifact& a, bool one_d) {
  const Family fam = simulate_family(c, g);
  const auto n = fam.runs.size();

  Index exits = 0;
  for (const auto& r : fam.runs) exits = std::max(exits, r.exits);
  const double exit_frac = static_cast<double>(exits) / static_cast<double>(c.paths);
  a.checks.push_back(simple_check("exit_fraction", exit_frac < c.rules["max_exit_fraction"].get<double>(),
                                  {{"worst_exits", exits}, {"fraction", exit_frac},
                                   {"limit", c.rules["max_exit_fraction"]}}));

  CauchyOptions co;
  co.p = c.rules["p"];
  const CauchyResult cr = cauchy_diagnostic(fam.runs, fam.fields, co);
  a.checks.push_back(cr.report);
  a.reports["cauchy"] = to_json(cr.report);
  CsvTable ct({"n", "m", "delta_n", "delta_m", "value", "stderr", "eta", "eps", "K", "L"});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto I = static_cast<Index>(i), J = static_cast<Index>(j);
      ct.add_row(std::vector<double>{static_cast<double>(i), static_cast<double>(j), c.deltas[i], c.deltas[j],
                                     cr.value(I, J), cr.std_error(I, J), cr.eta(I, J), cr.eps(I, J), cr.K(I, J),
                                     cr.L(I, J)});
    }
  a.tables.insert_or_assign("cauchy_matrix", ct);
  if (!c.rules["finest_max"].is_null()) {
    const double lim = c.rules["finest_max"];
    a.checks.push_back(simple_check("cauchy_finest", cr.finest < lim, {{"finest", cr.finest}, {"limit", lim}}));
  }

  // Functional sweeps on the two finest builds.
  const PathEnsemble& A = fam.runs[n - 2];
  const PathEnsemble& B = fam.runs[n - 1];
  const auto eps = c.rules["eps"].get<std::vector<double>>();
  CsvTable qt({"epsilon", "t", "EQ", "stderr"});
  std::vector<double> ratio, ratio_se;
  json sweep = json::array();
  for (double e : eps) {
    const FunctionalSeries q = q_functional(A, B, e);
    for (std::size_t k = 0; k < q.times.size(); ++k)
      qt.add_row(std::vector<double>{e, q.times[k], q.value[k], q.std_error[k]});
    const std::size_t s = q.argsup();
    ratio.push_back(q.value[s] / std::abs(std::log(e)));
    ratio_se.push_back(q.std_error[s] / std::abs(std::log(e)));
    sweep.push_back({{"epsilon", e}, {"sup", q.value[s]}, {"stderr", q.std_error[s]}, {"ratio", ratio.back()}});
  }
  a.tables.insert_or_assign("q_functional", qt);
  // Builds that agree to round-off give Q at round-off level for every eps.
  double scale = 0.0;
  for (const auto& x : A.X) scale = std::max(scale, x.abs().maxCoeff());
  const double r0 = co.round_off * (1.0 + scale);
  bool sublinear = true;
  for (std::size_t k = 0; k + 1 < ratio.size(); ++k) {
    const double floor = std::log1p(r0 * r0 / (eps[k + 1] * eps[k + 1])) / std::abs(std::log(eps[k + 1]));
    if (ratio[k + 1] > ratio[k] + 2.0 * std::hypot(ratio_se[k], ratio_se[k + 1]) + floor) sublinear = false;
  }
  a.checks.push_back(simple_check("q_sublinear_in_log_eps", sublinear, {{"sweep", sweep}, {"round_off", r0}}));

  if (!one_d) return;

  const ScalarField h = maximal(gradient_magnitude(fam.fields[n - 1].drift(0)), RadiusSchedule::for_grid(g));
  CsvTable qtt({"epsilon", "t", "EQ", "stderr"});
  for (double e : eps) {
    const FunctionalSeries q = q_tilde_functional(A, B, e, h);
    for (std::size_t k = 0; k < q.times.size(); ++k)
      qtt.add_row(std::vector<double>{e, q.times[k], q.value[k], q.std_error[k]});
  }
  a.tables.insert_or_assign("q_tilde_functional", qtt);

  const LepsFlavor fl = c.rules["leps_flavor"] == "linear1d" ? LepsFlavor::linear1d : LepsFlavor::plateau;
  CsvTable lt({"epsilon", "t", "EL", "stderr", "P", "P_stderr"});
  Index violations = 0;
  for (double e : eps) {
    const FunctionalSeries L = l_eps_functional(A, B, e, fl);
    const FunctionalSeries P = tail_probability(A, B, e);
    for (std::size_t k = 0; k < L.times.size(); ++k) {
      lt.add_row(std::vector<double>{e, L.times[k], L.value[k], L.std_error[k], P.value[k], P.std_error[k]});
      if (L.value[k] < P.value[k]) ++violations;
    }
  }
  a.tables.insert_or_assign("l_eps", lt);
  // Only the plateau cut-off sits above the indicator of |x| > eps.
  if (fl == LepsFlavor::plateau)
    a.checks.push_back(simple_check("l_eps_dominates_tail", violations == 0, {{"violations", violations}}));

  const BlockAverages ba =
      block_averages(A, B, fam.fields[n - 2].drift(0),
                     dyadic_eps_schedule(c.rules["eps_min"].get<double>(), c.rules["eps_max"].get<double>()));
  CsvTable bt({"block", "a", "b", "shells", "beta", "l_eps"});
  for (std::size_t i = 0; i < ba.blocks.size(); ++i)
    bt.add_row(std::vector<double>{static_cast<double>(i), ba.blocks[i].a, ba.blocks[i].b,
                                   static_cast<double>(ba.shells[i]), ba.beta[i], ba.l_eps[i]});
  a.tables.insert_or_assign("block_averages", bt);
  const int need = c.rules["block_min_run"];
  if (need > 0)
    a.checks.push_back(simple_check("block_averages_decrease", ba.decreasing_run >= need,
                                    {{"decreasing_run", ba.decreasing_run}, {"required", need}}));
}

void elliptic_energy(const ScenarioConfig& c, const Grid& g, RunArtifact& a) {
  const CoefficientField field = preset_field(c.preset, c.params, g);
  const CoefficientField heat = preset_field("heat", {{"a0", c.rules["heat_a0"]}}, g);
  const Array u0 = initial_density(g, c.rules["initial"]);
  const auto alphas = c.rules["alphas"].get<std::vector<double>>();
  const double p = c.rules["p"], q = c.rules["q"];
  const Index stride = c.rules["record_stride"];

  const DensityEvolution hev = solve_fp_1d(heat, u0, c.T, 0.9 * fp_max_dt(heat), stride);
  const double K = calibrate_energy_constant(hev, heat, alphas, p, q);
  const DensityEvolution ev = solve_fp_1d(field, u0, c.T, c.dt > 0 ? c.dt : 0.9 * fp_max_dt(field), stride);
  const EnergyReport heat_r = energy_monitor(hev, heat, alphas, p, q, K);
  const EnergyReport r = energy_monitor(ev, field, alphas, p, q, K);
  a.reports["energy"] = to_json(r);
  a.reports["energy_heat"] = to_json(heat_r);
  a.tables.insert_or_assign("energy", r.table());
  a.tables.insert_or_assign("energy_heat", heat_r.table());
  a.checks.push_back(simple_check("energy_heat", heat_r.violations == 0, {{"violations", heat_r.violations}, {"K", K}}));
  a.checks.push_back(simple_check("energy_monitor", r.violations == 0, {{"violations", r.violations}, {"K", K}}));
  a.checks.push_back(mass_check(ev));
  const Index ds = c.rules["density_stride"];
  if (ds > 0) a.tables.insert_or_assign("density", density_table(ev, ds));
}

void stationary(const ScenarioConfig& c, const Grid& g, RunArtifact& a) {
  const CoefficientField field = preset_field(c.preset, c.params, g);
  const Array u0 = initial_density(g, c.rules["initial"]);
  const Array B1 = stationary_bound(field, 1.0);
  const double C = c.rules["C"].is_null() ? (u0 / (u0.sum() * g.width(0)) / B1).maxCoeff() * (1.0 + 1e-9)
                                          : c.rules["C"].get<double>();
  const DensityEvolution ev =
      solve_fp_1d(field, u0, c.T, 0.9 * fp_max_dt(field), c.rules["record_stride"].get<Index>());
  const Report r = stationary_bound_check(field, ev, C, c.rules["rel_tol"].get<double>(), c.rules["abs_tol"].get<double>());
  a.checks.push_back(r);
  a.reports["stationary_bound"] = to_json(r);
  a.checks.push_back(mass_check(ev));

  CsvTable bt({"x", "bound", "u_final"});
  for (Index i = 0; i < g.size(); ++i)
    bt.add_row(std::vector<double>{g.axis(0).center(i), C * B1[i], ev.density.back()[i]});
  a.tables.insert_or_assign("stationary_bound", bt);
  const Index ds = c.rules["density_stride"];
  if (ds > 0) a.tables.insert_or_assign("density", density_table(ev, ds));

  if (c.paths > 0) {
    const auto steps = static_cast<Index>(std::llround(c.T / c.dt));
    SimOptions o;
    o.T = c.T;
    o.paths = c.paths;
    o.record_stride = steps;
    const PathEnsemble e = simulate_ensemble(field, InitialSpec::from_density(g, u0),
                                             BrownianStore(c.seed, c.paths, steps, c.dt, field.noise_dim()), o);
    const Index want = c.rules["compare_cells"];
    const Index factor = want > 0 && g.size() % want == 0 ? g.size() / want : 1;
    const Law mc = coarsen(ensemble_law(e, g), factor);
    const Distances d = law_compare(mc, coarsen(ev.law(), factor));
    const double lim = c.rules["mc_l1_max"];
    a.checks.push_back(simple_check("mc_vs_pde", d.l1 < lim,
                                    {{"l1", d.l1}, {"w1", d.w1}, {"limit", lim}, {"cells", g.size() / factor},
                                     {"paths", c.paths}, {"exits", e.exits}}));
  }
}

void kinetic(const ScenarioConfig& c, const Grid& g, RunArtifact& a) {
  const CoefficientField field = preset_field(c.preset, c.params, g);
  const Array u0 = initial_density(g, c.rules["initial"]);
  const double dt = c.dt > 0 ? c.dt : 0.9 * kinetic_max_dt(field);
  const DensityEvolution ev = solve_kinetic(field, u0, c.T, dt, c.rules["record_stride"].get<Index>());
  const Report mp = max_principle_check(ev);
  a.checks.push_back(mp);
  a.reports["max_principle"] = to_json(mp);
  a.checks.push_back(mass_check(ev));
  CsvTable mt({"t", "mass", "max", "v_mean", "v_var"});
  for (std::size_t k = 0; k < ev.times.size(); ++k) {
    double m1 = 0.0, m2 = 0.0;
    for (Index n = 0; n < g.size(); ++n) {
      const double v = g.node(n)[1];
      m1 += v * ev.density[k][n] * g.cell_volume();
      m2 += v * v * ev.density[k][n] * g.cell_volume();
    }
    mt.add_row(std::vector<double>{ev.times[k], ev.mass[k], ev.density[k].maxCoeff(), m1, m2 - m1 * m1});
  }
  a.tables.insert_or_assign("kinetic_moments", mt);
  const Index ds = c.rules["density_stride"];
  if (ds > 0) a.tables.insert_or_assign("density", density_table(ev, ds));
}

void uniqueness(const ScenarioConfig& c, const Grid& g, RunArtifact& a) {
  const CoefficientField base = preset_field(c.preset, c.params, g);
  const Index points = c.rules["points"];
  const double lo = c.rules["x_range"][0], hi = c.rules["x_range"][1];
  std::vector<double> xs;
  for (Index i = 0; i < points; ++i)
    xs.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  const auto steps = static_cast<Index>(std::llround(c.T / c.dt));
  const BrownianStore store(c.seed, c.paths * points, steps, c.dt, base.noise_dim());
  UniquenessOptions o;
  o.paths = c.paths;
  o.T = c.T;
  o.eps = c.rules["eps"];
  o.threshold = c.rules["threshold"];
  o.record_stride = c.rules["record_stride"];

  auto run = [&](const std::vector<double>& d, const json& f) {
    return uniqueness_map(xs, Build{mollify(base, d[0]), f[0].get<Index>()}, Build{mollify(base, d[1]), f[1].get<Index>()},
                          store, o);
  };
  const UniquenessMap m = run(c.deltas, c.rules["dt_factors"]);
  a.tables.insert_or_assign("uniqueness_map", m.table());
  const double need = c.rules["min_fraction"];
  a.checks.push_back(simple_check("uniqueness_fraction", m.fraction_below >= need,
                                  {{"fraction_below", m.fraction_below}, {"threshold", o.threshold}, {"required", need}}));
  const auto refined = c.rules["refined_deltas"].get<std::vector<double>>();
  if (!refined.empty()) {
    const UniquenessMap r = run(refined, c.rules["refined_dt_factors"]);
    a.tables.insert_or_assign("uniqueness_map_refined", r.table());
    Index bad = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (r.n_eps[i] > m.n_eps[i] + 2.0 * std::hypot(r.n_se[i], m.n_se[i])) ++bad;
    a.checks.push_back(simple_check("uniqueness_refinement_decrease", bad == 0,
                                    {{"points", xs.size()}, {"increases_beyond_2se", bad}}));
  }
}

void norm_audit(const ScenarioConfig& c, const Grid& g, RunArtifact& a) {
  const CoefficientField field = preset_field(c.preset, c.params, g);
  const ScalarField sigma = field.diffusion(0, 0);
  const ScalarField F = field.drift(0);
  const json& lr = c.rules["law"];
  const Array density = lr["kind"] == "uniform" ? uniform_density(g, lr["lower"], lr["upper"])
                                                : gaussian_density(g, lr["mean"].get<double>(), lr["sd"].get<double>());
  const Law u = constant_law(g, density);
  NormOptions opt;
  opt.periodic_field = c.rules["periodic_field"];
  const auto L = c.rules["L_grid"].get<std::vector<double>>();
  const PhiWeight phi = c.rules["phi"] == "appendix" ? PhiWeight::appendix() : PhiWeight::standard();

  const std::vector<NormValue> values{h1_norm(sigma, u, c.T, opt), w11_norm(F, u, c.T, opt),
                                      wphi_weak_norm(F, u, c.T, phi, L), h_half_norm(sigma, u, c.T, opt)};
  CsvTable nt({"kind", "value", "method", "argmax_L"});
  bool finite = true;
  for (const auto& v : values) {
    a.reports["norm_" + to_string(v.kind)] = to_json(v);
    nt.add_row(std::vector<std::string>{to_string(v.kind), format_double(v.value), to_string(v.method),
                                        format_double(v.argmax_L)});
    finite = finite && std::isfinite(v.value);
  }
  a.tables.insert_or_assign("norms", nt);
  a.checks.push_back(simple_check("norms_finite", finite, json::object()));

  ProbeOptions po;
  po.norm = opt;
  po.L_grid = L;
  const Report s = semicontinuity_probe(sigma, u, c.T, NormKind::H1, c.deltas,
                                        c.rules["law_deltas"].get<std::vector<double>>(), po);
  a.checks.push_back(s);
  a.reports["semicontinuity"] = to_json(s);
  const Report h = holder_domination_check(sigma, u, c.T, c.rules["holder"]["p"], c.rules["holder"]["q"], opt);
  a.checks.push_back(h);
  a.reports["holder"] = to_json(h);
}

}  // namespace

RunArtifact run_scenario(const ScenarioConfig& c, const std::filesystem::path& out) {
  RunArtifact a;
  if (!out.empty()) {
    a.out = out;
  } else if (const char* env = std::getenv("ROUGHSDE_OUT"); env && *env) {
    a.out = env;
  } else {
    a.out = c.output.empty() ? std::filesystem::path("roughsde_out") / c.scenario : std::filesystem::path(c.output);
  }
  std::filesystem::create_directories(a.out);
  save_json(a.out / "manifest.json", manifest_of(c, a, "run in progress"));

  try {
    const Grid g = grid_of(c);
    if (c.scenario == "thm_multidim_convergence") convergence(c, g, a, false);
    else if (c.scenario == "thm_1d_convergence") convergence(c, g, a, true);
    else if (c.scenario == "elliptic_energy") elliptic_energy(c, g, a);
    else if (c.scenario == "stationary_1d") stationary(c, g, a);
    else if (c.scenario == "kinetic_langevin") kinetic(c, g, a);
    else if (c.scenario == "ae_uniqueness_map") uniqueness(c, g, a);
    else if (c.scenario == "norm_audit") norm_audit(c, g, a);
    else throw ConfigError({"scenario: unknown scenario '" + c.scenario + "'"});

    json checks = json::array();
    for (const auto& r : a.checks) checks.push_back(to_json(r));
    a.reports["checks"] = checks;
    a.files = emit_plotdata(a);
    a.complete = true;
  } catch (const std::exception& e) {
    a.complete = false;
    a.manifest = manifest_of(c, a, e.what());
    save_json(a.out / "manifest.json", a.manifest);
    throw;
  }
  a.manifest = manifest_of(c, a, "");
  save_json(a.out / "manifest.json", a.manifest);
  return a;
}

}  // namespace roughsde
