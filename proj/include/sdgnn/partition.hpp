#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdgnn/delay_model.hpp"
#include "sdgnn/geometry.hpp"
#include "sdgnn/hin.hpp"

namespace sdgnn {

/// Coverage area of one cloudlet network (CLN).
struct CLNRegion {
  int id = 0;
  Rect bounds;
  Point base_station;
};

/// cols x rows grid tiling of `area`, ids row-major from the bottom-left cell,
/// base stations at cell centres.
std::vector<CLNRegion> grid_regions(const Rect& area, int cols, int rows);

/// True when the two rectangles share a boundary segment of positive length.
bool regions_adjacent(const CLNRegion& a, const CLNRegion& b);

/// Empty when the regions tile `area` exactly with disjoint interiors.
std::vector<std::string> tiling_diagnostics(std::span<const CLNRegion> regions, const Rect& area);

/// Lowest-id region containing `p`, or -1.
int home_region(std::span<const CLNRegion> regions, Point p);

struct InterClnEdge {
  NodeId a = 0;  ///< a < b
  NodeId b = 0;
  int cln_a = 0;
  int cln_b = 0;
  auto operator<=>(const InterClnEdge&) const = default;
};

struct Assignment {
  std::map<NodeId, int> node_to_cln;
  std::vector<int> cln_ids;
  /// Per CLN, the owned nodes with at least one edge into another CLN.
  std::map<int, std::vector<NodeId>> boundary_nodes;
  std::vector<InterClnEdge> inter_cln_edges;
  /// Cost of the protocol that produced this assignment (0 for coverage-based).
  double protocol_cost_ms = 0.0;

  int cln_of(NodeId id) const;
  std::vector<NodeId> members(int cln) const;
  /// Edges between owned nodes of `cln` and any other CLN.
  int boundary_edge_count(int cln) const;
};

/// Inter-CLN edges of `node_to_cln` over `topology`, recomputed from scratch.
std::vector<InterClnEdge> inter_cln_edges(const std::map<NodeId, int>& node_to_cln, const Topology& topology);

/// Derives boundary nodes and inter-CLN edges. Every topology node must be mapped.
Assignment make_assignment(std::map<NodeId, int> node_to_cln, std::vector<int> cln_ids, const Topology& topology);

/// Coverage-based assignment: each node goes to the region containing its
/// position, ties to the lowest region id.
Assignment uniform_assign(const HinSnapshot& snapshot, std::span<const CLNRegion> regions);

/// Shared boundary band of an adjacent CLN pair.
struct BoundarySubgraph {
  int u = 0;
  int v = 0;
  Point base_u;
  Point base_v;
  std::vector<NodeId> nodes;
  std::vector<Point> positions;
  std::vector<int> current_cln;
  std::vector<std::pair<NodeId, NodeId>> edges;

  bool empty() const { return nodes.empty(); }
};

/// Nodes of u and v within `band_hops` hops (moving only through u and v) of
/// an endpoint of an edge between them, with their induced edges.
BoundarySubgraph extract_boundary_subgraph(const Assignment& assignment, const HinSnapshot& snapshot,
                                           std::span<const CLNRegion> regions, int u, int v, int band_hops);

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;
  int restarts = 10;
};

struct Bipartition {
  std::vector<NodeId> side_u;  ///< attaches to CLN u
  std::vector<NodeId> side_v;
  int cut_edges = 0;
  bool degenerate = false;  ///< all positions coincide; everything stays on one side
  int iterations = 0;       ///< Lloyd iterations summed over restarts
  double inertia = 0.0;
};

/// Two-means split of the band by position, seeded k-means++ with restarts.
Bipartition kmeans_bipartition(const BoundarySubgraph& subgraph, std::uint64_t seed, const KMeansOptions& options = {});

/// Cut size of an arbitrary two-way labelling of the subgraph nodes.
int bipartition_cut(const BoundarySubgraph& subgraph, const std::vector<bool>& on_u_side);

struct AdaptiveOptions {
  int band_hops = 6;  ///< 2L for the default three-layer model
  bool multi_pass = false;
  int max_passes = 5;
  KMeansOptions kmeans;
};

struct PairStep {
  int u = 0;
  int v = 0;
  int band_nodes = 0;
  int band_cut_before = 0;
  int band_cut_after = 0;
  int total_before = 0;
  int total_after = 0;
  bool adopted = false;
  double start_ms = 0.0;
  double cost_ms = 0.0;
};

struct AdaptiveResult {
  Assignment assignment;
  double protocol_cost_ms = 0.0;
  std::vector<PairStep> steps;
};

/// Distributed pairwise repartitioning: for each adjacent pair in ascending id
/// order the lower-id cloudlet ships its boundary topology, the higher-id one
/// splits the band and returns the result. A split is adopted only when it
/// lowers the global inter-CLN edge count without growing the band cut.
AdaptiveResult adaptive_assign(const Assignment& assignment, const HinSnapshot& snapshot,
                               std::span<const CLNRegion> regions, const DelayModel& model, std::uint64_t seed,
                               const AdaptiveOptions& options = {});

nlohmann::json to_json(const Assignment& assignment);
nlohmann::json to_json(std::span<const CLNRegion> regions);
std::vector<CLNRegion> regions_from_json(const nlohmann::json& j);

}  // namespace sdgnn
