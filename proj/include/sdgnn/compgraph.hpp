#pragma once

#include <utility>
#include <vector>

#include "sdgnn/hin.hpp"

namespace sdgnn {

/// L-hop neighbourhood of a root node, layered by exact shortest-path distance.
struct ComputationalGraph {
  NodeId root = 0;
  int hops = 0;
  /// hop_sets[l - 1] = N_l(root), ascending ids.
  std::vector<std::vector<NodeId>> hop_sets;
  /// hop_degrees[l - 1][k] = degree of hop_sets[l - 1][k] in the full topology.
  std::vector<std::vector<int>> hop_degrees;
  int root_degree = 0;
  /// Edges with both endpoints inside the ball of radius `hops`.
  std::vector<std::pair<NodeId, NodeId>> edges;
  /// Edges from the outermost shell to nodes at distance hops + 1.
  std::vector<std::pair<NodeId, NodeId>> outer_edges;

  /// Root followed by every hop set, ascending distance.
  std::vector<NodeId> ball() const;
};

ComputationalGraph extract(const Topology& topology, NodeId root, int hops);

struct HopDegreeStats {
  int max_degree = 0;
  long sum_degree = 0;
};

HopDegreeStats hop_degree_stats(const ComputationalGraph& cg, int hop);

/// Exact BFS distances from `source` (-1 for unreachable).
std::vector<int> bfs_distances(const Topology& topology, int source);

}  // namespace sdgnn
