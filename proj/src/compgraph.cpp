#include "sdgnn/compgraph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

namespace sdgnn {

std::vector<NodeId> ComputationalGraph::ball() const {
  std::vector<NodeId> out{root};
  for (const auto& shell : hop_sets) out.insert(out.end(), shell.begin(), shell.end());
  return out;
}

std::vector<int> bfs_distances(const Topology& topology, int source) {
  std::vector<int> dist(static_cast<std::size_t>(topology.size()), -1);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : topology.adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

ComputationalGraph extract(const Topology& topology, NodeId root, int hops) {
  if (hops < 1) throw std::invalid_argument("hop count must be >= 1");
  auto root_index = topology.index_of(root);
  if (!root_index) throw std::invalid_argument("root " + std::to_string(root) + " not in topology");

  // Layered BFS, stopping one shell past `hops` so the frontier edges are known.
  std::vector<int> dist(static_cast<std::size_t>(topology.size()), -1);
  std::vector<std::vector<int>> shells(static_cast<std::size_t>(hops) + 1);
  dist[static_cast<std::size_t>(*root_index)] = 0;
  shells[0].push_back(*root_index);
  for (int l = 1; l <= hops; ++l) {
    for (int u : shells[static_cast<std::size_t>(l) - 1]) {
      for (int v : topology.adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = l;
          shells[static_cast<std::size_t>(l)].push_back(v);
        }
      }
    }
  }

  ComputationalGraph cg;
  cg.root = root;
  cg.hops = hops;
  cg.root_degree = topology.degree(*root_index);
  for (int l = 1; l <= hops; ++l) {
    auto shell = shells[static_cast<std::size_t>(l)];
    std::sort(shell.begin(), shell.end(), [&](int a, int b) {
      return topology.ids[static_cast<std::size_t>(a)] < topology.ids[static_cast<std::size_t>(b)];
    });
    std::vector<NodeId> ids;
    std::vector<int> degrees;
    for (int v : shell) {
      ids.push_back(topology.ids[static_cast<std::size_t>(v)]);
      degrees.push_back(topology.degree(v));
    }
    cg.hop_sets.push_back(std::move(ids));
    cg.hop_degrees.push_back(std::move(degrees));
  }

  for (int d = 0; d <= hops; ++d) {
    for (int u : shells[static_cast<std::size_t>(d)]) {
      for (int v : topology.adj[static_cast<std::size_t>(u)]) {
        int dv = dist[static_cast<std::size_t>(v)];
        NodeId a = topology.ids[static_cast<std::size_t>(u)];
        NodeId b = topology.ids[static_cast<std::size_t>(v)];
        if (dv >= 0) {
          if (a < b) cg.edges.emplace_back(a, b);
        } else {
          cg.outer_edges.emplace_back(a, b);
        }
      }
    }
  }
  std::sort(cg.edges.begin(), cg.edges.end());
  std::sort(cg.outer_edges.begin(), cg.outer_edges.end());
  return cg;
}

HopDegreeStats hop_degree_stats(const ComputationalGraph& cg, int hop) {
  if (hop < 1 || hop > cg.hops) {
    throw std::invalid_argument("hop index " + std::to_string(hop) + " outside [1, " + std::to_string(cg.hops) + "]");
  }
  HopDegreeStats s;
  for (int d : cg.hop_degrees[static_cast<std::size_t>(hop) - 1]) {
    s.max_degree = std::max(s.max_degree, d);
    s.sum_degree += d;
  }
  return s;
}

}  // namespace sdgnn
