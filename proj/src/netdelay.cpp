#include "sdgnn/netdelay.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace sdgnn {

DelayBounds delay_bounds(const ComputationalGraph& cg, const DelayModel& model) {
  DelayBounds b;
  const int L = cg.hops;
  const double link = model.t_s + model.t_r;
  const double di = cg.root_degree;
  for (int l = 1; l <= L; ++l) {
    HopDegreeStats s = hop_degree_stats(cg, l);
    const double reps = L - l + 1;
    const double proc = (l + 1) * model.t_p;
    double lo, hi;
    if (model.processing_in_link_bracket) {
      lo = reps * link * (l * di + s.max_degree + proc);
      hi = reps * link * (l * di + static_cast<double>(s.sum_degree) + proc);
    } else {
      lo = reps * (link * (l * di + s.max_degree) + proc);
      hi = reps * (link * (l * di + static_cast<double>(s.sum_degree)) + proc);
    }
    b.per_hop_terms.push_back({l, lo, hi});
    b.lower += lo;
    b.upper += hi;
  }
  return b;
}

bool ScheduleTrace::feasible() const {
  std::unordered_map<NodeId, std::vector<std::pair<double, double>>> busy;
  for (const auto& e : events) {
    if (e.end < e.start) return false;
    if (e.end == e.start) continue;
    busy[e.src].emplace_back(e.start, e.end);
    if (e.dst != e.src) busy[e.dst].emplace_back(e.start, e.end);
  }
  for (auto& [node, spans] : busy) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first < spans[i - 1].second) return false;
    }
  }
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].start < events[i - 1].start) return false;
  }
  return true;
}

SimulationResult simulate_decentralized(const ComputationalGraph& cg, const DelayModel& model) {
  const int L = cg.hops;
  const double link = model.t_s + model.t_r;

  // Local indices over the ball plus the shell just outside it.
  std::vector<NodeId> local = cg.ball();
  for (auto [a, b] : cg.outer_edges) local.push_back(b);
  std::sort(local.begin(), local.end());
  local.erase(std::unique(local.begin(), local.end()), local.end());
  auto idx = [&](NodeId id) {
    return static_cast<std::size_t>(std::lower_bound(local.begin(), local.end(), id) - local.begin());
  };
  std::vector<std::vector<std::size_t>> nbrs(local.size());
  for (const auto* list : {&cg.edges, &cg.outer_edges}) {
    for (auto [a, b] : *list) {
      nbrs[idx(a)].push_back(idx(b));
      nbrs[idx(b)].push_back(idx(a));
    }
  }
  for (auto& row : nbrs) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  std::vector<int> level(local.size(), -1);
  level[idx(cg.root)] = 0;
  for (int l = 1; l <= L; ++l) {
    for (NodeId id : cg.hop_sets[static_cast<std::size_t>(l) - 1]) level[idx(id)] = l;
  }
  const std::vector<NodeId>& root_nbrs = cg.hop_sets.front();

  SimulationResult out;
  auto& events = out.trace.events;
  std::vector<double> free_at(local.size(), 0.0);
  double t = 0.0;
  int round = 0;
  std::int64_t payload = 0;

  auto process = [&](int hop) {
    events.push_back({t, t + model.t_p, cg.root, cg.root, hop, round, payload++, EventKind::process});
    t += model.t_p;
  };

  for (int r = 1; r <= L; ++r) {
    for (int l = L - r + 1; l >= 1; --l) {
      ++round;
      // Collection: every hop-l node exchanges with each of its neighbours,
      // greedy earliest start in (node id, neighbour id) order. A link between
      // two hop-l nodes is used once.
      const double phase_start = t;
      double phase_end = t;
      for (NodeId xid : cg.hop_sets[static_cast<std::size_t>(l) - 1]) {
        const std::size_t x = idx(xid);
        for (std::size_t y : nbrs[x]) {
          if (level[y] == l && y < x) continue;
          double s = std::max({phase_start, free_at[x], free_at[y]});
          double e = s + link;
          free_at[x] = free_at[y] = e;
          events.push_back({s, e, local[y], xid, l, round, payload++, EventKind::exchange});
          phase_end = std::max(phase_end, e);
        }
      }
      t = phase_end;
      process(l);
      // Inward relay: l stages, the root trading with each direct neighbour
      // in turn, then a processing step.
      for (int stage = 0; stage < l; ++stage) {
        for (NodeId y : root_nbrs) {
          events.push_back({t, t + link, y, cg.root, l, round, payload++, EventKind::exchange});
          t += link;
        }
        process(l);
      }
      std::fill(free_at.begin(), free_at.end(), t);
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const ScheduleEvent& a, const ScheduleEvent& b) {
    return std::tie(a.start, a.end, a.src, a.dst) < std::tie(b.start, b.end, b.src, b.dst);
  });
  out.trace.makespan = t;
  out.delay_ms = t;
  return out;
}

CentralizedDelay centralized_delay(const HinSnapshot& snapshot, int layers, const DelayModel& model) {
  if (layers < 1) throw std::invalid_argument("layers must be >= 1");
  const double n = snapshot.size();
  Topology topo = union_topology(snapshot);
  CentralizedDelay out;
  out.messages_per_layer = 2 * topo.edge_count();
  const double m = static_cast<double>(out.messages_per_layer);
  const double uplink = n * model.its_g5_packet_delay;
  const double compute = layers * (model.t_c * m + model.tau * n);
  out.breakdown.add("uplink", uplink);
  out.breakdown.add("compute", compute);
  out.breakdown.add("downlink", uplink);
  out.total_ms = out.breakdown.total();
  return out;
}

SemiDelay semidecentralized_delay(const Assignment& assignment, const HinSnapshot& snapshot, int layers,
                                  const DelayModel& model, bool include_assignment_cost) {
  if (layers < 1) throw std::invalid_argument("layers must be >= 1");
  if (assignment.node_to_cln.size() != static_cast<std::size_t>(snapshot.size())) {
    throw std::invalid_argument("assignment and snapshot node sets differ");
  }
  for (const auto& node : snapshot.nodes()) {
    if (!assignment.node_to_cln.contains(node.id)) {
      throw std::invalid_argument("node " + std::to_string(node.id) + " missing from assignment");
    }
  }
  Topology topo = union_topology(snapshot);
  std::map<int, double> nodes, intra, inter;
  for (int c : assignment.cln_ids) nodes[c] = intra[c] = inter[c] = 0.0;
  for (const auto& [id, c] : assignment.node_to_cln) nodes[c] += 1.0;
  for (int i = 0; i < topo.size(); ++i) {
    int ci = assignment.cln_of(topo.ids[static_cast<std::size_t>(i)]);
    for (int j : topo.adj[static_cast<std::size_t>(i)]) {
      int cj = assignment.cln_of(topo.ids[static_cast<std::size_t>(j)]);
      if (ci == cj) intra[ci] += 1.0;
      else if (topo.ids[static_cast<std::size_t>(i)] < topo.ids[static_cast<std::size_t>(j)]) {
        inter[ci] += 1.0;
        inter[cj] += 1.0;
      }
    }
  }

  SemiDelay out;
  for (int c : assignment.cln_ids) {
    LatencyBreakdown b;
    const double uplink = nodes[c] * model.its_g5_packet_delay;
    b.add("uplink", uplink);
    b.add("compute", layers * (model.t_c * intra[c] + inter[c] * model.t_cln +
                               model.tau * model.cloudlet_slowdown * nodes[c]));
    b.add("downlink", uplink);
    double total = b.total();
    if (out.slowest_cln < 0 || total > out.slowest_cln_ms) {
      out.slowest_cln_ms = total;
      out.slowest_cln = c;
    }
    out.per_cln.emplace(c, std::move(b));
  }
  if (out.slowest_cln >= 0) out.breakdown = out.per_cln.at(out.slowest_cln);
  if (include_assignment_cost) {
    out.assignment_ms = assignment.protocol_cost_ms;
    out.breakdown.add("assignment", out.assignment_ms);
  }
  out.total_ms = out.breakdown.total();
  return out;
}

void CostModelInputs::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(K >= 1.0)) throw std::invalid_argument("K must be >= 1");
  if (!(N >= K)) throw std::invalid_argument("N must be >= K");
  if (!(P >= 1 && Q >= 1 && m >= 1 && n >= 1 && L >= 1)) throw std::invalid_argument("P, Q, m, n, L must be >= 1");
  delay.validate();
}

AnalyticCosts analytic_costs(const CostModelInputs& in) {
  in.validate();
  AnalyticCosts c;
  const auto& d = in.delay;
  c.existing_region_cost = in.K * in.P * in.Q * (in.L * in.L * d.t_r + in.L * d.tau);
  const double mnpq = in.m * in.n * in.P * in.Q;
  const double per = in.N / in.K;
  c.messaging_term = mnpq * d.t_c * per;
  c.processing_term = mnpq * per * in.L * d.tau;
  c.boundary_term = in.gamma * per * in.L * in.L * d.t_cln;
  c.per_cloudlet_cost = c.messaging_term + c.processing_term + c.boundary_term;
  return c;
}

}  // namespace sdgnn
