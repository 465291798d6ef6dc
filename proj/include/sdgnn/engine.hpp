#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdgnn/delay_model.hpp"
#include "sdgnn/hin.hpp"
#include "sdgnn/model.hpp"
#include "sdgnn/netdelay.hpp"
#include "sdgnn/partition.hpp"

namespace sdgnn {

enum class Setting { centralized, decentralized, semidecentralized };
enum class AssignmentPolicy { uniform, adaptive };
/// Which cloudlets trade boundary states each layer.
enum class ExchangeMode { adjacent, all_pairs };

std::string to_string(Setting s);

struct Scenario {
  std::vector<HinSnapshot> window;  ///< P slots, last one is the current slot
  ModelConfig model;
  WeightSet weights;
  DelayModel delay;
  Rect area;
  std::vector<CLNRegion> regions;
  AssignmentPolicy policy = AssignmentPolicy::uniform;
  ExchangeMode exchange = ExchangeMode::adjacent;
  AdaptiveOptions adaptive;
  bool include_assignment_cost = false;
  double comm_range = 100.0;
  std::uint64_t seed = 1;
  /// Skip the forward pass and report latency only.
  bool compute_predictions = true;

  void validate() const;
};

struct NodeLatency {
  NodeId id = 0;
  double total_ms = 0.0;
  LatencyBreakdown breakdown;
};

struct InferenceReport {
  Setting setting = Setting::centralized;
  std::vector<NodeId> node_ids;
  Tensor3 predictions;  ///< (Q, N, output_dim), empty when predictions are skipped
  double total_ms = 0.0;
  LatencyBreakdown breakdown;

  // Decentralized
  std::vector<NodeLatency> per_node;
  double max_node_ms = 0.0;
  std::vector<NodeId> truncated_nodes;  ///< radio limits cut into the node's L-hop ball

  // Semi-decentralized
  std::optional<Assignment> assignment;
  std::map<int, LatencyBreakdown> per_cln;
  double boundary_fraction = 0.0;
  std::vector<std::size_t> inter_cln_messages_per_layer;
  std::size_t dropped_messages_per_layer = 0;
  std::vector<NodeId> dropped_dependency_nodes;  ///< embeddings missing a non-adjacent contribution
};

InferenceReport run_centralized(const Scenario& scenario);
InferenceReport run_decentralized(const Scenario& scenario);
InferenceReport run_semidecentralized(const Scenario& scenario);
InferenceReport run(const Scenario& scenario, Setting setting);

/// The assignment the scenario's policy yields on the current slot.
Assignment assign(const Scenario& scenario);

struct SweepOptions {
  std::vector<int> layers = {1, 2, 3, 4, 5};
  int trials = 10;
  std::vector<int> cln_grids = {10, 20};  ///< CLN counts, laid out by cln_grid_shape
  bool predictions = false;
  bool bounds = true;
  int threads = 0;  ///< 0 picks the hardware concurrency
  std::optional<int> band_hops;  ///< adaptive band width; 2L when absent
};

/// Columns x rows for a CLN count: 10 -> 5x2, 20 -> 5x4, otherwise the most
/// square factorisation.
std::pair<int, int> cln_grid_shape(int count);

struct SweepRow {
  std::string curve;
  int layers = 0;
  int trial = 0;
  double total_ms = 0.0;
  LatencyBreakdown breakdown;
  std::size_t inter_cln_edges = 0;
};

struct BoundsRow {
  int layers = 0;
  int trial = 0;
  double lower = 0.0;   ///< mean over roots
  double actual = 0.0;  ///< mean simulated makespan over roots
  double upper = 0.0;
  std::size_t roots = 0;
  std::size_t violations = 0;
};

struct SweepReport {
  std::vector<SweepRow> delays;
  std::vector<BoundsRow> bounds;
};

/// Runs every curve for each (L, trial). `make(trial)` supplies the base
/// scenario; its regions are replaced by the CLN grids of the sweep.
SweepReport compare_settings(const std::function<Scenario(int trial)>& make, const SweepOptions& options);

/// Per-root bound check over the radio-constrained topology of one snapshot.
BoundsRow bounds_for(const HinSnapshot& radio, int layers, const DelayModel& model);

/// Runs fn(0..count-1) on a small worker pool; results keep index order.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace sdgnn
