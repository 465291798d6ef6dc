#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "sdgnn/hin.hpp"

namespace sdgnn::testing {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Random taxis in a square with random features.
inline std::vector<TaxiNode> random_nodes(int n, std::uint64_t seed, double side, int feature_width) {
  std::mt19937_64 rng(seed);
  std::vector<TaxiNode> nodes;
  for (int i = 0; i < n; ++i) {
    TaxiNode t;
    t.id = i;
    t.position = {uniform01(rng) * side, uniform01(rng) * side};
    t.destination = {uniform01(rng) * side, uniform01(rng) * side};
    for (int k = 0; k < feature_width; ++k) t.features.push_back(std::floor(uniform01(rng) * 6.0));
    nodes.push_back(std::move(t));
  }
  return nodes;
}

inline HinSnapshot random_snapshot(int n, std::uint64_t seed, double side, int feature_width,
                                   GraphConfig config = {}) {
  if (!config.road_network) config.road_network = RoadNetwork::street_grid(100.0, static_cast<int>(side / 100.0) + 1,
                                                                            static_cast<int>(side / 100.0) + 1);
  return build_snapshot(random_nodes(n, seed, side, feature_width), config, 0);
}

/// Snapshot with explicit per-relation edge lists over nodes 0..n-1 placed on a line.
inline HinSnapshot explicit_snapshot(int n, const std::vector<std::pair<int, int>>& connectivity,
                                     const std::vector<WeightedEdge>& proximity = {},
                                     const std::vector<WeightedEdge>& destination = {}, int feature_width = 2) {
  std::vector<TaxiNode> nodes;
  for (int i = 0; i < n; ++i) {
    TaxiNode t;
    t.id = i;
    t.position = {10.0 * i, 0.0};
    t.destination = t.position;
    for (int k = 0; k < feature_width; ++k) t.features.push_back(1.0 + i + 0.5 * k);
    nodes.push_back(std::move(t));
  }
  std::vector<WeightedEdge> conn;
  for (auto [a, b] : connectivity) conn.push_back({a, b, 1.0});
  std::array<SparseAdjacency, 3> adj = {SparseAdjacency::from_edges(n, conn), SparseAdjacency::from_edges(n, proximity),
                                        SparseAdjacency::from_edges(n, destination)};
  return HinSnapshot::assemble(0, std::move(nodes), GraphConfig{}, std::move(adj));
}

inline Topology topology_of(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<NodeId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(i);
  return Topology::from_pairs(std::move(ids), edges);
}

}  // namespace sdgnn::testing
