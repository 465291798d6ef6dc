#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdgnn/datagen.hpp"
#include "sdgnn/delay_model.hpp"
#include "sdgnn/engine.hpp"
#include "sdgnn/hin.hpp"
#include "sdgnn/model.hpp"
#include "sdgnn/partition.hpp"

namespace sdgnn {

enum class Experiment { sweep, single, generalization };

struct TripsSource {
  std::filesystem::path path;
  TripIngestConfig ingest;
  std::optional<int> slot;  ///< current slot; busiest fitting slot when absent
};

/// Everything a run needs. Defaults are the effective values echoed back in
/// summary.json.
struct ScenarioFile {
  std::string name = "scenario";
  Experiment experiment = Experiment::sweep;
  std::uint64_t seed = 1;
  int trials = 1;
  std::vector<int> layers = {3};
  GraphConfig graph;
  std::string road_network = "street_grid";  ///< none | street_grid | explicit
  DelayModel delay;
  ModelConfig model;
  bool model_dims_explicit = false;
  std::optional<FleetGenConfig> fleet;
  std::optional<TripsSource> trips;
  int history = 1;  ///< P
  std::vector<int> cln_counts = {10, 20};
  std::vector<CLNRegion> regions;  ///< explicit layout, overrides cln_counts for single runs
  std::vector<Setting> settings = {Setting::centralized, Setting::decentralized, Setting::semidecentralized};
  std::vector<AssignmentPolicy> policies = {AssignmentPolicy::uniform, AssignmentPolicy::adaptive};
  std::optional<int> band_hops;
  bool multi_pass = false;
  bool include_assignment_cost = false;
  ExchangeMode exchange = ExchangeMode::adjacent;
  double comm_range = 100.0;
  bool predictions = false;
  bool bounds = true;
  std::vector<std::uint64_t> weight_seeds;  ///< generalization sweep
  int test_taxis = 1916;                    ///< generalization test graph size
  std::string output = "out";
  int threads = 0;
};

struct ParsedScenario {
  ScenarioFile file;
  std::vector<std::string> diagnostics;  ///< "field: message"; empty when valid
};

ParsedScenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ParsedScenario load_scenario(const std::filesystem::path& path);
std::filesystem::path preset_path(const std::string& name);

/// Effective configuration, defaults included.
nlohmann::json to_json(const ScenarioFile& file);

/// Git-style object hash of the canonical config: sha1("blob <len>\0<json>").
std::string provenance_hash(const nlohmann::json& config);

/// Scenario for one trial: generated or ingested window, weights, regions.
Scenario build_trial(const ScenarioFile& file, int trial);

struct RunArtifacts {
  std::vector<std::filesystem::path> written;
  nlohmann::json summary;
};

/// Executes the experiment matrix and writes delays.csv, bounds.csv,
/// assignment.json, summary.json and, when enabled, predictions.bin.
RunArtifacts run_scenario(const ScenarioFile& file, const std::filesystem::path& out_dir);

/// Tensor dump: "SDT1", then three little-endian uint64 dims, then doubles.
void write_tensor(const Tensor3& t, const std::filesystem::path& path);
Tensor3 read_tensor(const std::filesystem::path& path);

}  // namespace sdgnn
