// Acceptance suite: one PASS/FAIL line per criterion, with the measured values
// underneath. Exit status is non-zero when any criterion fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "engine_support.hpp"
#include "sdgnn/compgraph.hpp"
#include "sdgnn/netdelay.hpp"
#include "sdgnn/scenario.hpp"
#include "support.hpp"

using namespace sdgnn;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::vector<std::string>& details) {
  std::printf("%s %d %s\n", pass ? "PASS" : "FAIL", id, title.c_str());
  for (const auto& d : details) std::printf("    %s\n", d.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

ScenarioFile preset(const std::string& name) {
  auto p = load_scenario(preset_path(name));
  if (!p.diagnostics.empty()) throw std::runtime_error(name + " preset: " + p.diagnostics.front());
  return p.file;
}

// Least-squares y = a L^2 + b L + c by normal equations and Gaussian elimination.
std::array<double, 4> quadratic_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double m[3][4] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    double basis[3] = {x[i] * x[i], x[i], 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
      m[r][3] += basis[r] * y[i];
    }
  }
  for (int p = 0; p < 3; ++p) {
    int best = p;
    for (int r = p + 1; r < 3; ++r)
      if (std::abs(m[r][p]) > std::abs(m[best][p])) best = r;
    for (int c = 0; c < 4; ++c) std::swap(m[p][c], m[best][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == p) continue;
      double f = m[r][p] / m[p][p];
      for (int c = p; c < 4; ++c) m[r][c] -= f * m[p][c];
    }
  }
  double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1], c = m[2][3] / m[2][2];
  double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = a * x[i] * x[i] + b * x[i] + c;
    ss_res += (y[i] - f) * (y[i] - f);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return {a, b, c, 1.0 - ss_res / ss_tot};
}

struct BoundsData {
  std::map<int, double> mean_actual;
};

BoundsData criterion_bounds() {
  auto file = preset("fig4");
  auto start = std::chrono::steady_clock::now();
  std::size_t roots = 0, violations = 0, rows = 0, row_outside = 0;
  BoundsData data;
  for (int trial = 0; trial < file.trials; ++trial) {
    Scenario s = build_trial(file, trial);
    auto radio = filter_edges(s.window.back(), s.comm_range);
    for (int L : file.layers) {
      BoundsRow b = bounds_for(radio, L, s.delay);
      roots += b.roots;
      violations += b.violations;
      ++rows;
      if (b.actual < b.lower || b.actual > b.upper) ++row_outside;
      data.mean_actual[L] += b.actual / file.trials;
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool layers_ok = file.layers == std::vector<int>{1, 2, 3, 4, 5} && file.trials == 10;
  const bool nodes_ok = file.fleet && file.fleet->taxis == 255;
  report(1, "bound containment on 255-node graphs, L 1..5, 10 trials",
         layers_ok && nodes_ok && violations == 0 && row_outside == 0 && secs < 60.0,
         {"roots checked " + std::to_string(roots) + ", per-root violations " + std::to_string(violations),
          "trial rows " + std::to_string(rows) + ", rows with mean outside bounds " + std::to_string(row_outside),
          "elapsed " + num(secs) + " s"});
  return data;
}

void criterion_quadratic(const BoundsData& data) {
  std::vector<double> x, y;
  std::string series;
  for (const auto& [L, v] : data.mean_actual) {
    x.push_back(L);
    y.push_back(v);
    series += "L=" + std::to_string(L) + ":" + num(v) + " ";
  }
  auto fit = quadratic_fit(x, y);
  report(2, "quadratic growth of mean simulated delay with L", fit[0] > 0.0 && fit[3] >= 0.95,
         {"mean delay ms " + series, "fit a=" + num(fit[0]) + " b=" + num(fit[1]) + " c=" + num(fit[2]) +
                                         " R^2=" + std::to_string(fit[3])});
}

using MeanTable = std::map<std::string, std::map<int, double>>;

MeanTable preset_means() {
  auto file = preset("fig6");
  SweepOptions opt;
  opt.layers = file.layers;
  opt.trials = file.trials;
  opt.cln_grids = file.cln_counts;
  opt.bounds = false;
  opt.threads = file.threads;
  opt.band_hops = file.band_hops;
  auto rep = compare_settings([&](int t) { return build_trial(file, t); }, opt);
  MeanTable m;
  for (const auto& r : rep.delays) m[r.curve][r.layers] += r.total_ms / file.trials;
  return m;
}

void criterion_speedup(const MeanTable& m) {
  std::vector<std::string> details;
  bool ok = true;
  const double cent3 = m.at("centralized").at(3), dec3 = m.at("decentralized").at(3), semi3 = m.at("semi_uniform_10").at(3);
  bool c1 = semi3 <= cent3 / 5.0, c2 = semi3 <= dec3 / 5.0;
  details.push_back("L=3: semi_uniform_10 " + num(semi3) + " ms, centralized " + num(cent3) + " (ratio " +
                    num(cent3 / semi3) + "x) " + (c1 ? "ok" : "short") + ", decentralized " + num(dec3) + " (ratio " +
                    num(dec3 / semi3) + "x) " + (c2 ? "ok" : "short"));
  ok = c1 && c2;
  for (const auto& [L, cent] : m.at("centralized")) {
    double dec = m.at("decentralized").at(L);
    double semi_worst = 0.0;
    for (const char* curve : {"semi_uniform_10", "semi_uniform_20", "semi_adaptive_10", "semi_adaptive_20"})
      semi_worst = std::max(semi_worst, m.at(curve).at(L));
    bool order = semi_worst < dec && dec < cent;
    ok = ok && order;
    details.push_back("L=" + std::to_string(L) + ": slowest semi " + num(semi_worst) + " < decentralized " + num(dec) +
                      " < centralized " + num(cent) + " : " + (order ? "holds" : "violated"));
  }
  report(3, "semi-decentralized speedup and ordering on fig6", ok, details);
}

void criterion_adaptive(const MeanTable& m) {
  std::vector<std::string> details;
  int strictly_fewer = 0;
  const int scenarios = 50;
  long uniform_edges = 0, adaptive_edges = 0;
  for (int seed = 0; seed < scenarios; ++seed) {
    FleetGenConfig c;
    c.seed = 9000 + static_cast<std::uint64_t>(seed);
    auto series = generate(c, 2);
    GraphConfig g;
    g.road_network = RoadNetwork::street_grid(100.0, 10, 10);
    auto w = make_window(series, 0, 1, 1, g);
    auto regions = grid_regions({0, 0, c.width, c.height}, 5, 2);
    auto u = uniform_assign(w.history.back(), regions);
    AdaptiveOptions opt;
    opt.band_hops = 6;
    auto a = adaptive_assign(u, w.history.back(), regions, DelayModel{}, c.seed, opt);
    uniform_edges += static_cast<long>(u.inter_cln_edges.size());
    adaptive_edges += static_cast<long>(a.assignment.inter_cln_edges.size());
    strictly_fewer += a.assignment.inter_cln_edges.size() < u.inter_cln_edges.size();
  }
  bool edges_ok = strictly_fewer * 10 >= scenarios * 9;
  details.push_back("adaptive strictly fewer inter-CLN edges in " + std::to_string(strictly_fewer) + "/" +
                    std::to_string(scenarios) + " scenarios (mean " + num(static_cast<double>(uniform_edges) / scenarios) +
                    " -> " + num(static_cast<double>(adaptive_edges) / scenarios) + ")");
  bool delay_ok = true;
  for (const char* k : {"10", "20"}) {
    double u = 0.0, a = 0.0;
    for (const auto& [L, v] : m.at(std::string("semi_uniform_") + k)) u += v;
    for (const auto& [L, v] : m.at(std::string("semi_adaptive_") + k)) a += v;
    bool ok = a <= 0.8 * u;
    delay_ok = delay_ok && ok;
    details.push_back(std::string(k) + " CLNs: mean adaptive/uniform delay ratio " + num(a / u) + " (needs <= 0.800)");
  }
  report(4, "adaptive assignment gain", edges_ok && delay_ok, details);
}

void criterion_fixture() {
  std::ifstream in(SDGNN_TEST_DATA "/two_cloudlets.json");
  auto j = nlohmann::json::parse(in);
  auto regions = regions_from_json(j.at("regions"));
  auto snap = snapshot_from_json(j.at("snapshot"));
  auto u = uniform_assign(snap, regions);
  auto a = adaptive_assign(u, snap, regions, DelayModel{}, 1).assignment;
  bool moved = a.cln_of(7) == 1 && a.cln_of(8) == 1 && a.cln_of(9) == 1;
  bool cut = a.inter_cln_edges.size() == 1 && a.inter_cln_edges[0].a == 8 && a.inter_cln_edges[0].b == 10;
  report(5, "two-cloudlet fixture: 3 inter-CLN edges uniform, 1 adaptive",
         u.inter_cln_edges.size() == 3 && a.inter_cln_edges.size() == 1 && moved && cut,
         {"uniform " + std::to_string(u.inter_cln_edges.size()) + ", adaptive " +
              std::to_string(a.inter_cln_edges.size()) + ", v7-v9 moved to CLN 1: " + (moved ? "yes" : "no") +
              ", surviving edge (v8, v10): " + (cut ? "yes" : "no")});
}

void criterion_equivalence() {
  std::vector<std::string> details;
  bool a_ok = true;
  for (int k = 0; k < 5; ++k) {
    auto s = testing::fleet_scenario(80, 300 + k, 3, 1, 1, 1000.0, 2);
    a_ok = a_ok && run_semidecentralized(s).predictions == run_centralized(s).predictions;
  }
  details.push_back(std::string("(a) single CLN bitwise equal on 5 windows: ") + (a_ok ? "yes" : "no"));

  double worst_b = 0.0;
  for (int k = 0; k < 20; ++k) {
    auto s = testing::fleet_scenario(60 + 5 * k, 400 + k, 1 + k % 3, 5, 2);
    s.exchange = ExchangeMode::all_pairs;
    worst_b = std::max(worst_b, testing::max_relative_gap(run_semidecentralized(s).predictions,
                                                          run_centralized(s).predictions));
  }
  bool b_ok = worst_b <= 1e-9;
  details.push_back("(b) all-pairs exchange, 20 snapshots, worst relative gap " + sci(worst_b));

  double worst_c = 0.0;
  for (int k = 0; k < 5; ++k) {
    auto s = testing::fleet_scenario(30, 500 + k, 1, 1, 1, 300.0);
    auto topo = union_topology(s.window.back());
    int diameter = 1;
    for (int i = 0; i < topo.size(); ++i)
      for (int d : bfs_distances(topo, i)) diameter = std::max(diameter, d);
    s.model.gnn_layers = diameter;
    s.weights = init_weights(s.model);
    s.comm_range = std::numeric_limits<double>::infinity();
    worst_c = std::max(worst_c, testing::max_relative_gap(run_decentralized(s).predictions, run_centralized(s).predictions));
  }
  bool c_ok = worst_c <= 1e-9;
  details.push_back("(c) unbounded range with L >= diameter, worst relative gap " + sci(worst_c));
  report(6, "equivalence of the three settings", a_ok && b_ok && c_ok, details);
}

void criterion_metrics() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = (rng() % 4 == 0) ? 0.0 : testing::uniform01(rng) * 20.0 - 5.0;
      y[i] = testing::uniform01(rng) * 20.0 - 5.0;
    }
    double se = 0.0, ae = 0.0, pe = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      se += (x[i] - y[i]) * (x[i] - y[i]);
      ae += std::fabs(x[i] - y[i]);
      if (x[i] != 0.0) {
        pe += std::fabs((x[i] - y[i]) / x[i]);
        ++cnt;
      }
    }
    double rmse = std::sqrt(se / n), mae = ae / n, mape = cnt ? 100.0 * pe / cnt : 0.0;
    auto m = metrics(x, y);
    for (auto [got, want] : {std::pair{m.rmse, rmse}, std::pair{m.mae, mae}, std::pair{m.mape, mape}})
      worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  std::vector<double> t = {1, 1}, p = {0, 2};
  auto h = metrics(t, p);
  bool hand = h.rmse == 1.0 && h.mae == 1.0 && h.mape == 100.0;
  report(7, "metric formulas", worst <= 1e-12 && hand,
         {"worst relative deviation over 100 pairs " + sci(worst),
          "hand case (1,1) vs (0,2): " + num(h.rmse) + ", " + num(h.mae) + ", " + num(h.mape) + "%"});
}

void criterion_finer(const MeanTable& m) {
  std::vector<std::string> details;
  bool ok = true;
  for (const char* policy : {"semi_uniform_", "semi_adaptive_"}) {
    for (const auto& [L, coarse] : m.at(std::string(policy) + "10")) {
      double fine = m.at(std::string(policy) + "20").at(L);
      bool lower = fine < coarse;
      ok = ok && lower;
      details.push_back(std::string(policy) + "K L=" + std::to_string(L) + ": 20 CLNs " + num(fine) + " vs 10 CLNs " +
                        num(coarse) + (lower ? "" : "  <-- not lower"));
    }
  }
  report(8, "20 CLNs faster than 10 CLNs at every L", ok, details);
}

HinSnapshot relabel(const HinSnapshot& s, const std::vector<int>& perm) {
  // node i of s becomes node perm[i]
  const int n = s.size();
  std::vector<TaxiNode> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) nodes[perm[i]] = s.node(i);
  std::array<SparseAdjacency, 3> adj;
  for (auto r : kRelations) {
    std::vector<WeightedEdge> e;
    for (const auto& w : s.adjacency(r).edges()) e.push_back({perm[w.a], perm[w.b], w.weight});
    adj[static_cast<std::size_t>(r)] = SparseAdjacency::from_edges(n, e);
  }
  return HinSnapshot::assemble(s.time_slot(), std::move(nodes), s.config(), std::move(adj));
}

void criterion_invariants() {
  std::vector<std::string> details;
  std::mt19937_64 rng(8);
  int graphs = 0, checks = 0, mismatches = 0;
  for (std::uint64_t wseed : {11u, 22u, 33u}) {
    ModelConfig c;
    c.input_dim = 4;
    c.output_dim = 4;
    c.hidden_dim = 6;
    c.lstm_layers = 2;
    c.weight_seed = wseed;
    auto weights = init_weights(c);
    std::vector<std::vector<std::pair<int, int>>> families;
    families.push_back({});
    std::vector<std::pair<int, int>> path, cycle, star, complete;
    for (int i = 0; i < 7; ++i) path.emplace_back(i, i + 1);
    cycle = path;
    cycle.emplace_back(0, 7);
    for (int i = 1; i < 8; ++i) star.emplace_back(0, i);
    for (int a = 0; a < 8; ++a)
      for (int b = a + 1; b < 8; ++b) complete.emplace_back(a, b);
    families.insert(families.end(), {path, cycle, star, complete});
    for (double p : {0.2, 0.4, 0.6})
      for (int rep = 0; rep < 2; ++rep) {
        std::vector<std::pair<int, int>> g;
        for (int a = 0; a < 8; ++a)
          for (int b = a + 1; b < 8; ++b)
            if (testing::uniform01(rng) < p) g.emplace_back(a, b);
        families.push_back(g);
      }
    for (const auto& edges : families) {
      std::vector<WeightedEdge> prox, dest;
      for (int a = 0; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b) {
          if (testing::uniform01(rng) < 0.3) prox.push_back({a, b, 0.1 + testing::uniform01(rng)});
          if (testing::uniform01(rng) < 0.3) dest.push_back({a, b, 0.1 + testing::uniform01(rng)});
        }
      auto base = testing::explicit_snapshot(8, edges, prox, dest, 4);
      std::vector<HinSnapshot> w0 = {base};
      auto ref = forward(w0, c, weights);
      ++graphs;
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<int> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<HinSnapshot> w1 = {relabel(base, perm)};
        auto out = forward(w1, c, weights);
        for (int i = 0; i < 8; ++i) {
          ++checks;
          for (std::size_t k = 0; k < 4; ++k)
            if (out(0, static_cast<std::size_t>(perm[i]), k) != ref(0, static_cast<std::size_t>(i), k)) {
              ++mismatches;
              break;
            }
        }
      }
    }
  }
  details.push_back("permutation: " + std::to_string(graphs) + " graph/seed pairs, " + std::to_string(checks) +
                    " node rows, " + std::to_string(mismatches) + " not bitwise equal");

  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    ModelConfig c;
    c.input_dim = 3;
    c.output_dim = 3;
    c.hidden_dim = 5;
    c.lstm_layers = 1;
    c.gnn_layers = 1 + k % 3;
    auto weights = init_weights(c);
    auto s = testing::random_snapshot(30, 600 + k, 400.0, 3);
    const int root = k % 30;
    auto dist = bfs_distances(union_topology(s), root);
    std::vector<TaxiNode> nodes(s.nodes().begin(), s.nodes().end());
    for (int i = 0; i < 30; ++i)
      if (dist[i] < 0 || dist[i] > c.gnn_layers) std::fill(nodes[i].features.begin(), nodes[i].features.end(), 0.0);
    std::array<SparseAdjacency, 3> adj = {s.adjacency(Relation::connectivity), s.adjacency(Relation::proximity),
                                          s.adjacency(Relation::destination)};
    auto zeroed = HinSnapshot::assemble(0, nodes, s.config(), adj);
    std::vector<HinSnapshot> a = {s}, b = {zeroed};
    auto pa = forward(a, c, weights), pb = forward(b, c, weights);
    for (std::size_t q = 0; q < 3; ++q)
      worst = std::max(worst, std::abs(pa(0, root, q) - pb(0, root, q)));
  }
  details.push_back("locality: 20 snapshots of 30 nodes, worst deviation " + sci(worst));
  report(9, "model invariants", mismatches == 0 && worst <= 1e-12, details);
}

}  // namespace

int main() {
  try {
    auto data = criterion_bounds();
    criterion_quadratic(data);
    auto means = preset_means();
    criterion_speedup(means);
    criterion_adaptive(means);
    criterion_fixture();
    criterion_equivalence();
    criterion_metrics();
    criterion_finer(means);
    criterion_invariants();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance suite aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
