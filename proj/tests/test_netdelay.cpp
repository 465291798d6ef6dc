#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdgnn/datagen.hpp"
#include "sdgnn/netdelay.hpp"
#include "support.hpp"

using namespace sdgnn;

namespace {

DelayModel small_model() {
  DelayModel m;
  m.t_r = 7.0;
  m.t_s = 7.0;
  m.t_p = 1.0;
  return m;
}

double processing_floor(int L, double t_p) {
  double s = 0.0;
  for (int l = 1; l <= L; ++l) s += (L - l + 1) * (l + 1) * t_p;
  return s;
}

Topology two_hop_tree() {
  return testing::topology_of(10, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 6}, {2, 7}, {2, 8}, {2, 9}});
}

}  // namespace

TEST_CASE("bounds for a root with two leaf neighbours") {
  auto cg = extract(testing::topology_of(3, {{0, 1}, {0, 2}}), 0, 1);
  auto b = delay_bounds(cg, small_model());
  CHECK(b.lower == doctest::Approx(2 * 7 * (2 + 1) + 2 * 1).epsilon(1e-15));
  CHECK(b.upper == doctest::Approx(2 * 7 * (2 + 2) + 2 * 1).epsilon(1e-15));
  CHECK(b.lower == 44.0);
  CHECK(b.upper == 58.0);
}

TEST_CASE("isolated root pays only the processing floor") {
  auto cg = extract(testing::topology_of(2, {}), 0, 3);
  auto m = small_model();
  auto b = delay_bounds(cg, m);
  CHECK(b.lower == processing_floor(3, m.t_p));
  CHECK(b.upper == processing_floor(3, m.t_p));
  auto sim = simulate_decentralized(cg, m);
  CHECK(sim.delay_ms == processing_floor(3, m.t_p));
  for (const auto& e : sim.trace.events) CHECK(e.kind == EventKind::process);
}

TEST_CASE("bound gap at the outer hop of the sample graph") {
  auto cg = extract(two_hop_tree(), 0, 2);
  auto m = small_model();
  auto b = delay_bounds(cg, m);
  REQUIRE(b.per_hop_terms.size() == 2);
  const int L = 2;
  // hop-2 nodes are the seven leaves, degree 1 each
  const double sum_dx = 7.0;
  const double max_dx = 1.0;
  const auto& t2 = b.per_hop_terms[1];
  CHECK(t2.upper - t2.lower == doctest::Approx(2 * m.t_r * (L - 1) * (sum_dx - max_dx)).epsilon(1e-12));
  const auto& t1 = b.per_hop_terms[0];
  CHECK(t1.upper - t1.lower == doctest::Approx(2 * m.t_r * L * (9.0 - 5.0)).epsilon(1e-12));
}

TEST_CASE("t_s enters the link factor alongside t_r") {
  auto cg = extract(testing::topology_of(3, {{0, 1}, {0, 2}}), 0, 1);
  auto m = small_model();
  m.t_s = 3.0;
  auto b = delay_bounds(cg, m);
  CHECK(b.lower == (7.0 + 3.0) * 3 + 2.0);
}

TEST_CASE("processing inside the link bracket") {
  auto cg = extract(testing::topology_of(3, {{0, 1}, {0, 2}}), 0, 1);
  auto m = small_model();
  m.processing_in_link_bracket = true;
  auto b = delay_bounds(cg, m);
  CHECK(b.lower == (7.0 + 7.0) * (2 + 1 + 2 * 1.0));
}

TEST_CASE("two-leaf star schedule") {
  auto cg = extract(testing::topology_of(3, {{0, 1}, {0, 2}}), 0, 1);
  auto m = small_model();
  auto sim = simulate_decentralized(cg, m);
  // two serial gathers, one processing step, two serial sends, one processing step
  CHECK(sim.delay_ms == 8 * m.t_r + 2 * m.t_p);
  CHECK(sim.trace.feasible());
  auto b = delay_bounds(cg, m);
  CHECK(sim.delay_ms >= b.lower);
  CHECK(sim.delay_ms <= b.upper);
  int exchanges = 0;
  for (const auto& e : sim.trace.events) exchanges += e.kind == EventKind::exchange;
  CHECK(exchanges == 4);
}

TEST_CASE("simulated delay stays within bounds on random geometric graphs") {
  DelayModel m;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    FleetGenConfig c;
    c.seed = seed;
    auto series = generate(c, 2);
    GraphConfig g;
    g.road_network = RoadNetwork::street_grid(100.0, 10, 10);
    auto w = make_window(series, 0, 1, 1, g);
    auto radio = filter_edges(w.history.back(), 100.0);
    auto topo = union_topology(radio);
    for (int L = 1; L <= 4; ++L) {
      for (int i = 0; i < topo.size(); i += 17) {
        auto cg = extract(topo, topo.ids[i], L);
        auto b = delay_bounds(cg, m);
        auto sim = simulate_decentralized(cg, m);
        CHECK(sim.delay_ms >= b.lower * (1 - 1e-12));
        CHECK(sim.delay_ms <= b.upper * (1 + 1e-12));
        CHECK(sim.trace.feasible());
      }
    }
  }
}

TEST_CASE("centralized delay of a single taxi") {
  auto s = testing::explicit_snapshot(1, {});
  DelayModel m;
  auto c = centralized_delay(s, 1, m);
  CHECK(c.total_ms == doctest::Approx(2 * 3.3 + m.tau).epsilon(1e-15));
}

TEST_CASE("centralized radio phases for 255 taxis") {
  auto s = testing::random_snapshot(255, 2, 1000.0, 1);
  auto c = centralized_delay(s, 3, DelayModel{});
  CHECK(c.breakdown.get("uplink") + c.breakdown.get("downlink") == doctest::Approx(1683.0).epsilon(1e-12));
  CHECK(c.total_ms == c.breakdown.total());
}

TEST_CASE("centralized communication scales with N") {
  DelayModel m;
  auto a = centralized_delay(testing::explicit_snapshot(10, {}), 2, m);
  auto b = centralized_delay(testing::explicit_snapshot(20, {}), 2, m);
  CHECK(b.breakdown.get("uplink") == doctest::Approx(2 * a.breakdown.get("uplink")));
  CHECK(b.breakdown.get("compute") == doctest::Approx(2 * a.breakdown.get("compute")));
}

TEST_CASE("single cloudlet at server speed reduces to the centralized delay") {
  auto s = testing::random_snapshot(60, 5, 500.0, 1);
  DelayModel m;
  m.cloudlet_slowdown = 1.0;
  std::map<NodeId, int> map;
  for (const auto& n : s.nodes()) map[n.id] = 0;
  auto a = make_assignment(map, {0}, union_topology(s));
  auto semi = semidecentralized_delay(a, s, 3, m, false);
  auto cent = centralized_delay(s, 3, m);
  CHECK(semi.total_ms == cent.total_ms);
}

TEST_CASE("disconnected cloudlets are independent") {
  auto s = testing::explicit_snapshot(5, {{0, 1}, {2, 3}, {3, 4}, {2, 4}});
  std::map<NodeId, int> map{{0, 1}, {1, 1}, {2, 2}, {3, 2}, {4, 2}};
  auto a = make_assignment(map, {1, 2}, union_topology(s));
  CHECK(a.inter_cln_edges.empty());
  DelayModel m;
  auto semi = semidecentralized_delay(a, s, 2, m, false);
  const double c1 = semi.per_cln.at(1).total();
  const double c2 = semi.per_cln.at(2).total();
  CHECK(semi.total_ms == std::max(c1, c2));
  CHECK(semi.slowest_cln == 2);
  CHECK(semi.per_cln.at(1).get("uplink") == 2 * 3.3);
}

TEST_CASE("assignment cost is added only on request") {
  auto s = testing::explicit_snapshot(2, {{0, 1}});
  auto a = make_assignment({{0, 0}, {1, 1}}, {0, 1}, union_topology(s));
  a.protocol_cost_ms = 12.5;
  DelayModel m;
  auto off = semidecentralized_delay(a, s, 1, m, false);
  auto on = semidecentralized_delay(a, s, 1, m, true);
  CHECK(on.total_ms == doctest::Approx(off.total_ms + 12.5));
  CHECK(off.per_cln.at(0).get("compute") == doctest::Approx(m.t_cln + m.tau * m.cloudlet_slowdown));
}

TEST_CASE("analytic cost structure") {
  CostModelInputs in;
  in.gamma = 0.0;
  auto c = analytic_costs(in);
  CHECK(c.boundary_term == 0.0);

  in.gamma = 0.2;
  auto a = analytic_costs(in);
  in.L *= 2;
  auto b = analytic_costs(in);
  CHECK(b.boundary_term == doctest::Approx(4 * a.boundary_term));
  CHECK(b.processing_term == doctest::Approx(2 * a.processing_term));

  CostModelInputs k1;
  k1.K = 1;
  k1.N = 200;
  auto d = analytic_costs(k1);
  CHECK(d.processing_term == doctest::Approx(k1.m * k1.n * k1.P * k1.Q * k1.N * k1.L * k1.delay.tau).epsilon(1e-15));

  CostModelInputs bad;
  bad.K = 0;
  CHECK_THROWS_AS(analytic_costs(bad), std::invalid_argument);
}

TEST_CASE("delay model json rejects unknown keys") {
  CHECK_THROWS_AS(delay_model_from_json({{"t_x", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(delay_model_from_json({{"t_r", -1}}), std::invalid_argument);
  auto m = delay_model_from_json({{"t_r", 7}});
  CHECK(m.t_r == 7.0);
  CHECK(m.t_s == DelayModel{}.t_s);
}
