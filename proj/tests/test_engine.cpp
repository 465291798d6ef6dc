#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "engine_support.hpp"
#include "sdgnn/compgraph.hpp"
#include "support.hpp"

using namespace sdgnn;
using testing::fleet_scenario;

TEST_CASE("centralized predictions are the reference forward pass") {
  auto s = fleet_scenario(40, 1, 2, 2, 2, 500.0, 2);
  auto r = run_centralized(s);
  CHECK(r.predictions == forward(s.window, s.model, s.weights));
  CHECK(r.total_ms == r.breakdown.total());
}

TEST_CASE("centralized latency of one taxi") {
  auto s = fleet_scenario(1, 2, 1, 1, 1, 300.0);
  auto r = run_centralized(s);
  CHECK(r.total_ms == doctest::Approx(2 * 3.3 + s.delay.tau).epsilon(1e-14));
}

TEST_CASE("decentralized with full range and deep layers equals the reference") {
  auto s = fleet_scenario(30, 3, 1, 1, 1, 300.0);
  auto topo = union_topology(s.window.back());
  int diameter = 1;
  for (int i = 0; i < topo.size(); ++i)
    for (int d : bfs_distances(topo, i)) diameter = std::max(diameter, d);
  s.model.gnn_layers = diameter;
  s.weights = init_weights(s.model);
  s.comm_range = std::numeric_limits<double>::infinity();
  auto ref = run_centralized(s);
  auto dec = run_decentralized(s);
  CHECK(testing::max_relative_gap(ref.predictions, dec.predictions) <= 1e-9);
  CHECK(dec.truncated_nodes.empty());
}

TEST_CASE("isolated taxi pays only processing") {
  auto s = fleet_scenario(2, 4, 2, 1, 1, 5000.0);
  s.window = {testing::explicit_snapshot(2, {}, {}, {}, 18)};
  auto r = run_decentralized(s);
  double floor = 0.0;
  for (int l = 1; l <= 2; ++l) floor += (2 - l + 1) * (l + 1) * s.delay.t_p;
  CHECK(r.per_node[0].total_ms == floor);
  CHECK(r.total_ms == floor);
  auto ref = run_centralized(s);
  CHECK(r.predictions == ref.predictions);
}

TEST_CASE("radio range truncates information and is flagged") {
  auto s = fleet_scenario(120, 5, 2, 2, 2);
  auto ref = run_centralized(s);
  auto dec = run_decentralized(s);
  std::set<NodeId> flagged(dec.truncated_nodes.begin(), dec.truncated_nodes.end());
  int differing = 0;
  for (std::size_t i = 0; i < dec.node_ids.size(); ++i) {
    double gap = testing::row_gap(ref.predictions, dec.predictions, i);
    if (gap > 0.0) {
      ++differing;
      CHECK(flagged.contains(dec.node_ids[i]));
    }
  }
  CHECK(differing > 0);
  CHECK(dec.max_node_ms >= dec.total_ms);
  CHECK(dec.total_ms == dec.breakdown.total());
}

TEST_CASE("one cloudlet reproduces the reference exactly") {
  auto s = fleet_scenario(60, 6, 3, 1, 1, 1000.0, 2);
  auto semi = run_semidecentralized(s);
  CHECK(semi.predictions == run_centralized(s).predictions);
  CHECK(semi.dropped_dependency_nodes.empty());
}

TEST_CASE("all-pairs exchange reproduces the reference") {
  auto s = fleet_scenario(80, 7, 3, 5, 2);
  s.exchange = ExchangeMode::all_pairs;
  auto semi = run_semidecentralized(s);
  CHECK(testing::max_relative_gap(semi.predictions, run_centralized(s).predictions) <= 1e-9);
  CHECK(semi.dropped_messages_per_layer == 0);
}

TEST_CASE("adjacent-only exchange is exact away from dropped dependencies") {
  auto s = fleet_scenario(150, 8, 3, 5, 2);
  s.model.lstm_layers = 1;
  s.weights = init_weights(s.model);
  auto semi = run_semidecentralized(s);
  auto ref = run_centralized(s);
  std::set<NodeId> dropped(semi.dropped_dependency_nodes.begin(), semi.dropped_dependency_nodes.end());
  for (std::size_t i = 0; i < semi.node_ids.size(); ++i) {
    if (!dropped.contains(semi.node_ids[i])) CHECK(testing::row_gap(ref.predictions, semi.predictions, i) <= 1e-9);
  }
  MESSAGE(dropped.size() << " of " << semi.node_ids.size() << " nodes miss a non-adjacent contribution");
}

TEST_CASE("adaptive assignment lowers inter-CLN traffic") {
  auto s = fleet_scenario(255, 9, 3, 5, 2);
  s.compute_predictions = false;
  auto uniform = run_semidecentralized(s);
  s.policy = AssignmentPolicy::adaptive;
  auto adaptive = run_semidecentralized(s);
  CHECK(adaptive.assignment->inter_cln_edges.size() <= uniform.assignment->inter_cln_edges.size());
  CHECK(adaptive.inter_cln_messages_per_layer.at(0) + adaptive.dropped_messages_per_layer <=
        uniform.inter_cln_messages_per_layer.at(0) + uniform.dropped_messages_per_layer);
}

TEST_CASE("adaptive and uniform agree where both are complete") {
  auto s = fleet_scenario(120, 10, 2, 2, 2);
  s.model.lstm_layers = 1;
  s.weights = init_weights(s.model);
  auto uniform = run_semidecentralized(s);
  s.policy = AssignmentPolicy::adaptive;
  auto adaptive = run_semidecentralized(s);
  std::set<NodeId> dropped(uniform.dropped_dependency_nodes.begin(), uniform.dropped_dependency_nodes.end());
  dropped.insert(adaptive.dropped_dependency_nodes.begin(), adaptive.dropped_dependency_nodes.end());
  for (std::size_t i = 0; i < uniform.node_ids.size(); ++i) {
    if (!dropped.contains(uniform.node_ids[i]))
      CHECK(testing::row_gap(uniform.predictions, adaptive.predictions, i) == 0.0);
  }
}

TEST_CASE("semi-decentralized accounting") {
  auto s = fleet_scenario(100, 11, 2, 2, 2);
  s.compute_predictions = false;
  s.policy = AssignmentPolicy::adaptive;
  s.include_assignment_cost = true;
  auto r = run_semidecentralized(s);
  CHECK(r.total_ms == r.breakdown.total());
  CHECK(r.breakdown.get("assignment") == r.assignment->protocol_cost_ms);
  CHECK(r.inter_cln_messages_per_layer.size() == 2);
  CHECK(r.boundary_fraction >= 0.0);
  CHECK(r.boundary_fraction <= 1.0);
}

TEST_CASE("settings sweep layout") {
  SweepOptions opt;
  opt.layers = {1, 2};
  opt.trials = 2;
  opt.cln_grids = {4};
  opt.threads = 2;
  auto rep = compare_settings([](int trial) {
    auto s = fleet_scenario(60, 100 + trial, 1, 1, 1);
    s.compute_predictions = false;
    return s;
  }, opt);
  CHECK(rep.delays.size() == 2 * 2 * 4);
  std::set<std::string> curves;
  for (const auto& r : rep.delays) curves.insert(r.curve);
  CHECK(curves == std::set<std::string>{"centralized", "decentralized", "semi_adaptive_4", "semi_uniform_4"});
  CHECK(rep.bounds.size() == 4);
  for (const auto& b : rep.bounds) {
    CHECK(b.violations == 0);
    CHECK(b.lower <= b.actual);
    CHECK(b.actual <= b.upper);
  }
}

TEST_CASE("cln grid shapes") {
  CHECK(cln_grid_shape(10) == std::pair{5, 2});
  CHECK(cln_grid_shape(20) == std::pair{5, 4});
  CHECK(cln_grid_shape(1) == std::pair{1, 1});
  CHECK(cln_grid_shape(6) == std::pair{3, 2});
}

TEST_CASE("parallel_for keeps results in order and forwards errors") {
  std::vector<int> out(100, -1);
  parallel_for(100, 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (int i = 0; i < 100; ++i) CHECK(out[i] == 2 * i);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 5) throw std::runtime_error("boom");
  }));
}

TEST_CASE("scenario validation") {
  auto s = fleet_scenario(10, 12, 1, 1, 1);
  s.comm_range = 0.0;
  CHECK_THROWS_AS(run_decentralized(s), std::invalid_argument);
  s = fleet_scenario(10, 12, 1, 1, 1);
  s.window.clear();
  CHECK_THROWS_AS(run_centralized(s), std::invalid_argument);
}
