#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <deque>

#include "sdgnn/compgraph.hpp"
#include "support.hpp"

using namespace sdgnn;

namespace {

// Root i = 0; j = 1, k = 2; j1..j3 = 3..5; k1..k4 = 6..9.
Topology two_hop_tree() {
  return testing::topology_of(10, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 6}, {2, 7}, {2, 8}, {2, 9}});
}

}  // namespace

TEST_CASE("star centre sees its leaves at one hop") {
  auto t = testing::topology_of(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  auto cg = extract(t, 0, 1);
  CHECK(cg.hop_sets.at(0) == std::vector<NodeId>{1, 2, 3, 4});
  CHECK(cg.root_degree == 4);
}

TEST_CASE("path layering") {
  auto t = testing::topology_of(3, {{0, 1}, {1, 2}});
  auto cg = extract(t, 0, 2);
  CHECK(cg.hop_sets.at(0) == std::vector<NodeId>{1});
  CHECK(cg.hop_sets.at(1) == std::vector<NodeId>{2});
}

TEST_CASE("sample computational graph") {
  auto cg = extract(two_hop_tree(), 0, 2);
  CHECK(cg.root_degree == 2);
  CHECK(cg.hop_sets.at(0).size() == 2);
  CHECK(cg.hop_sets.at(1).size() == 7);
}

TEST_CASE("hop degree statistics") {
  auto cg = extract(two_hop_tree(), 0, 2);
  auto s = hop_degree_stats(cg, 1);
  // j has j1..j3 plus the root, k has k1..k4 plus the root
  CHECK(s.max_degree == 5);
  CHECK(s.sum_degree == 9);

  auto iso = extract(testing::topology_of(3, {}), 0, 2);
  auto e = hop_degree_stats(iso, 1);
  CHECK(e.max_degree == 0);
  CHECK(e.sum_degree == 0);

  std::vector<std::pair<int, int>> k5;
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b) k5.emplace_back(a, b);
  auto kc = extract(testing::topology_of(5, k5), 2, 1);
  auto ks = hop_degree_stats(kc, 1);
  CHECK(ks.max_degree == 4);
  CHECK(ks.sum_degree == 16);
}

TEST_CASE("hop sets match an independent BFS on random graphs") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30;
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (testing::uniform01(rng) < 0.08) edges.emplace_back(a, b);
    auto t = testing::topology_of(n, edges);
    const int root = static_cast<int>(rng() % n);
    // oracle: queue BFS over an adjacency matrix
    std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
    for (auto [a, b] : edges) m[a][b] = m[b][a] = true;
    std::vector<int> dist(n, -1);
    std::deque<int> q{root};
    dist[root] = 0;
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      for (int y = 0; y < n; ++y)
        if (m[x][y] && dist[y] < 0) {
          dist[y] = dist[x] + 1;
          q.push_back(y);
        }
    }
    auto cg = extract(t, root, 3);
    for (int l = 1; l <= 3; ++l) {
      std::vector<NodeId> expect;
      for (int v = 0; v < n; ++v)
        if (dist[v] == l) expect.push_back(v);
      CHECK(cg.hop_sets[l - 1] == expect);
    }
    CHECK(bfs_distances(t, root) == dist);
  }
}

TEST_CASE("ball edges and outer edges") {
  auto t = testing::topology_of(4, {{0, 1}, {1, 2}, {2, 3}});
  auto cg = extract(t, 0, 1);
  CHECK(cg.edges.size() == 1);
  CHECK(cg.outer_edges.size() == 1);
  CHECK(cg.ball() == std::vector<NodeId>{0, 1});
}

TEST_CASE("bad arguments are rejected") {
  auto t = testing::topology_of(3, {{0, 1}});
  CHECK_THROWS_AS(extract(t, 7, 1), std::invalid_argument);
  CHECK_THROWS_AS(extract(t, 0, -1), std::invalid_argument);
}
