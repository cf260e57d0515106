#ifndef ROUGHSDE_RUNNER_HPP
#define ROUGHSDE_RUNNER_HPP

#include "roughsde/grid.hpp"
#include "roughsde/report.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughsde {

/// Names accepted in the "scenario" field.
const std::vector<std::string>& scenario_names();

/// Code version folded into the manifest hash.
std::string code_version();

/// Configuration error carrying every offending field.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parsed scenario configuration. `rules` keeps the scenario specific knobs
/// (eps list, L grid, bound constant, ...) with defaults filled in.
struct ScenarioConfig {
  std::string scenario;
  std::string preset;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::array<double, 2>> bounds;
  std::vector<Index> cells;
  std::vector<bool> periodic;
  Index paths = 0;
  double T = 1.0;
  double dt = 0.0;
  std::vector<double> deltas;
  std::uint64_t seed = 0;
  std::string output;
  nlohmann::json rules = nlohmann::json::object();
};

/// Every problem found in a raw config; empty means valid.
std::vector<std::string> validate_config(const nlohmann::json& raw);

/// Validates and fills defaults; throws ConfigError.
ScenarioConfig parse_config(const nlohmann::json& raw);
ScenarioConfig load_config(const std::filesystem::path& file);

/// Echo of a parsed config as JSON (defaults included).
nlohmann::json to_json(const ScenarioConfig& c);

/// Outcome of a scenario run.
struct RunArtifact {
  std::filesystem::path out;
  nlohmann::json manifest;
  std::vector<Report> checks;
  /// Tidy tables written under series/, keyed by file stem.
  std::map<std::string, CsvTable> tables;
  /// JSON documents written under reports/, keyed by file stem.
  std::map<std::string, nlohmann::json> reports;
  std::vector<std::string> files;
  bool complete = false;

  bool passed() const;
};

/// Runs the scenario graph and writes manifest.json, reports/ and series/
/// under `out` (ROUGHSDE_OUT overrides the config when `out` is empty). A
/// failure part way leaves the manifest flagged incomplete and rethrows.
RunArtifact run_scenario(const ScenarioConfig& config, const std::filesystem::path& out = {});

/// Writes the artifact's tables and reports and returns the relative paths.
std::vector<std::string> emit_plotdata(const RunArtifact& artifact);

/// Git-style SHA-1 of a blob: sha1("blob <size>\0" + content), hex encoded.
std::string blob_hash(const std::string& content);

}  // namespace roughsde

#endif  // ROUGHSDE_RUNNER_HPP
