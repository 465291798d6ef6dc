#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdgnn/geometry.hpp"
#include "sdgnn/matrix.hpp"

namespace sdgnn {

using NodeId = std::int64_t;

/// The three edge types of the taxi HIN.
enum class Relation { connectivity = 0, proximity = 1, destination = 2 };
inline constexpr std::array<Relation, 3> kRelations = {Relation::connectivity, Relation::proximity,
                                                       Relation::destination};
std::string_view to_string(Relation r);

struct TaxiNode {
  NodeId id = 0;
  Point position;
  Point destination;
  /// Flattened per-slot observation (demand grid followed by supply grid).
  std::vector<double> features;
};

struct GridCell {
  int ix = 0;
  int iy = 0;
  auto operator<=>(const GridCell&) const = default;
};

/// Road connectivity between taxis. Two taxis are connected when the grid cells
/// holding their positions form a listed road pair, or when their ids are listed
/// directly (synthetic fixtures).
struct RoadNetwork {
  double cell_size = 100.0;
  std::set<std::pair<GridCell, GridCell>> cell_pairs;
  std::set<std::pair<NodeId, NodeId>> node_pairs;

  GridCell cell_of(Point p) const;
  void connect_cells(GridCell a, GridCell b);
  void connect_nodes(NodeId a, NodeId b);
  bool connects(const TaxiNode& a, const TaxiNode& b) const;
  bool empty() const { return cell_pairs.empty() && node_pairs.empty(); }

  /// Manhattan street grid: every cell is linked to itself and to its east and
  /// north neighbours.
  static RoadNetwork street_grid(double cell_size, int cols, int rows);
};

enum class WeightFunction { gaussian, binary };

struct GraphConfig {
  double proximity_threshold = 100.0;    ///< th_p, meters
  double destination_threshold = 100.0;  ///< th_d, meters
  /// gaussian: exp(-dist^2 / th^2) for dist < th; binary: 1 for dist < th.
  WeightFunction weight = WeightFunction::gaussian;
  std::optional<RoadNetwork> road_network;

  void validate() const;
};

double relation_weight(double dist, double threshold, WeightFunction fn);

struct Neighbor {
  int index = 0;
  double weight = 0.0;
};

struct WeightedEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

/// Symmetric sparse adjacency with zero diagonal. Rows are sorted by index.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;
  explicit SparseAdjacency(int n) : rows_(static_cast<std::size_t>(n)) {}

  /// Builds from undirected edges; rejects self-loops, duplicates, zero or
  /// non-finite weights and out-of-range indices.
  static SparseAdjacency from_edges(int n, std::span<const WeightedEdge> edges);

  int size() const { return static_cast<int>(rows_.size()); }
  std::span<const Neighbor> neighbors(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(rows_[static_cast<std::size_t>(i)].size()); }
  /// 0 when the pair is not linked.
  double weight(int i, int j) const;
  std::size_t edge_count() const;
  /// Undirected edges with a < b, ordered by (a, b).
  std::vector<WeightedEdge> edges() const;

  friend bool operator==(const SparseAdjacency&, const SparseAdjacency&);

 private:
  std::vector<std::vector<Neighbor>> rows_;
};

/// Unweighted symmetric topology keyed by node id; used for hop structure and
/// message-passing delay.
struct Topology {
  std::vector<NodeId> ids;
  std::vector<std::vector<int>> adj;  ///< sorted neighbour indices

  int size() const { return static_cast<int>(ids.size()); }
  int degree(int i) const { return static_cast<int>(adj[static_cast<std::size_t>(i)].size()); }
  std::optional<int> index_of(NodeId id) const;
  std::size_t edge_count() const;
  bool linked(int i, int j) const;

  static Topology from_pairs(std::vector<NodeId> ids, std::span<const std::pair<int, int>> edges);
};

/// One time-slot heterogeneous graph. Immutable once assembled.
class HinSnapshot {
 public:
  HinSnapshot() = default;

  /// Validates node ids, coordinates, feature widths and the three adjacency
  /// structures (size, symmetry, zero diagonal, binary connectivity).
  static HinSnapshot assemble(std::int64_t time_slot, std::vector<TaxiNode> nodes, GraphConfig config,
                              std::array<SparseAdjacency, 3> adjacency);

  std::int64_t time_slot() const { return time_slot_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  std::span<const TaxiNode> nodes() const { return nodes_; }
  const TaxiNode& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
  const GraphConfig& config() const { return config_; }
  const SparseAdjacency& adjacency(Relation r) const { return adjacency_[static_cast<std::size_t>(r)]; }
  /// N x d feature matrix X_t.
  const Matrix& features() const { return features_; }
  std::size_t feature_width() const { return features_.cols(); }

  std::optional<int> index_of(NodeId id) const;
  int require_index(NodeId id) const;

 private:
  std::int64_t time_slot_ = 0;
  std::vector<TaxiNode> nodes_;
  GraphConfig config_;
  std::array<SparseAdjacency, 3> adjacency_;
  Matrix features_;
  std::unordered_map<NodeId, int> index_;
};

/// Builds A_c, A_p, A_d from node positions, destinations and the road network.
HinSnapshot build_snapshot(std::vector<TaxiNode> nodes, const GraphConfig& config, std::int64_t time_slot);

/// Pairs linked by any relation.
Topology union_topology(const HinSnapshot& snapshot);

struct Evolution {
  std::vector<TaxiNode> arrivals;
  std::vector<NodeId> departures;
  std::map<NodeId, Point> moves;
};

/// Next-slot snapshot rebuilt from the updated node set. The input is untouched.
HinSnapshot evolve(const HinSnapshot& snapshot, const Evolution& change, const GraphConfig& config);

/// Snapshot restricted to a subset of relation edges, e.g. the radio-reachable
/// part of each relation. Nodes and features are kept.
HinSnapshot filter_edges(const HinSnapshot& snapshot, double max_link_distance);

nlohmann::json to_json(const GraphConfig& config);
GraphConfig graph_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HinSnapshot& snapshot);
HinSnapshot snapshot_from_json(const nlohmann::json& j);

}  // namespace sdgnn
