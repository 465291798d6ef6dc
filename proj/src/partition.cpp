#include "sdgnn/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace sdgnn {

namespace {

using nlohmann::json;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double sq_dist(Point a, Point b) {
  double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

const CLNRegion& region_by_id(std::span<const CLNRegion> regions, int id) {
  for (const auto& r : regions) {
    if (r.id == id) return r;
  }
  throw std::invalid_argument("unknown CLN " + std::to_string(id));
}

int count_band_cut(const BoundarySubgraph& sub, const std::map<NodeId, int>& node_to_cln) {
  int cut = 0;
  for (auto [a, b] : sub.edges) {
    if (node_to_cln.at(a) != node_to_cln.at(b)) ++cut;
  }
  return cut;
}

struct Clustering {
  std::vector<int> label;
  double inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool degenerate = false;
};

Clustering lloyd_two_means(const std::vector<Point>& pts, std::mt19937_64& rng, const KMeansOptions& opt) {
  const std::size_t n = pts.size();
  Clustering out;
  out.label.assign(n, 0);

  // k-means++ seeding
  std::array<Point, 2> c{};
  c[0] = pts[static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)) % n];
  std::vector<double> d2(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = sq_dist(pts[i], c[0]);
    total += d2[i];
  }
  if (total == 0.0) {
    out.degenerate = true;
    out.inertia = 0.0;
    return out;
  }
  double target = unit_uniform(rng) * total;
  std::size_t pick = n - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += d2[i];
    if (d2[i] > 0.0 && acc > target) {
      pick = i;
      break;
    }
  }
  if (d2[pick] == 0.0) {
    for (std::size_t i = n; i-- > 0;) {
      if (d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  c[1] = pts[pick];

  for (int it = 0; it < opt.max_iterations; ++it) {
    ++out.iterations;
    for (std::size_t i = 0; i < n; ++i) out.label[i] = sq_dist(pts[i], c[1]) < sq_dist(pts[i], c[0]) ? 1 : 0;
    std::array<Point, 2> sum{};
    std::array<int, 2> cnt{};
    for (std::size_t i = 0; i < n; ++i) {
      auto k = static_cast<std::size_t>(out.label[i]);
      sum[k].x += pts[i].x;
      sum[k].y += pts[i].y;
      ++cnt[k];
    }
    double moved = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      if (cnt[k] == 0) continue;
      Point next{sum[k].x / cnt[k], sum[k].y / cnt[k]};
      moved = std::max(moved, distance(next, c[k]));
      c[k] = next;
    }
    if (moved <= opt.tolerance) break;
  }
  for (std::size_t i = 0; i < n; ++i) out.label[i] = sq_dist(pts[i], c[1]) < sq_dist(pts[i], c[0]) ? 1 : 0;
  out.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.inertia += sq_dist(pts[i], c[static_cast<std::size_t>(out.label[i])]);
  return out;
}

}  // namespace

std::vector<CLNRegion> grid_regions(const Rect& area, int cols, int rows) {
  if (cols < 1 || rows < 1) throw std::invalid_argument("grid must have at least one column and row");
  if (!(area.width() > 0.0) || !(area.height() > 0.0)) throw std::invalid_argument("area must be non-empty");
  std::vector<CLNRegion> out;
  double w = area.width() / cols, h = area.height() / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      CLNRegion reg;
      reg.id = r * cols + c;
      reg.bounds = {area.x0 + c * w, area.y0 + r * h, c + 1 == cols ? area.x1 : area.x0 + (c + 1) * w,
                    r + 1 == rows ? area.y1 : area.y0 + (r + 1) * h};
      reg.base_station = reg.bounds.center();
      out.push_back(reg);
    }
  }
  return out;
}

bool regions_adjacent(const CLNRegion& a, const CLNRegion& b) {
  const Rect& p = a.bounds;
  const Rect& q = b.bounds;
  double ox = std::min(p.x1, q.x1) - std::max(p.x0, q.x0);
  double oy = std::min(p.y1, q.y1) - std::max(p.y0, q.y0);
  bool share_vertical = (p.x1 == q.x0 || q.x1 == p.x0) && oy > 0.0;
  bool share_horizontal = (p.y1 == q.y0 || q.y1 == p.y0) && ox > 0.0;
  return share_vertical || share_horizontal;
}

std::vector<std::string> tiling_diagnostics(std::span<const CLNRegion> regions, const Rect& area) {
  std::vector<std::string> out;
  if (regions.empty()) {
    out.push_back("regions: at least one region required");
    return out;
  }
  std::set<int> ids;
  double covered = 0.0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    const std::string tag = "regions[" + std::to_string(i) + "]";
    if (!ids.insert(r.id).second) out.push_back(tag + ": duplicate id " + std::to_string(r.id));
    if (!(r.bounds.width() > 0.0) || !(r.bounds.height() > 0.0)) out.push_back(tag + ": empty rectangle");
    if (r.bounds.x0 < area.x0 || r.bounds.y0 < area.y0 || r.bounds.x1 > area.x1 || r.bounds.y1 > area.y1) {
      out.push_back(tag + ": extends outside the area");
    }
    covered += std::max(0.0, r.bounds.area());
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (overlap_area(r.bounds, regions[j].bounds) > 0.0) {
        out.push_back("regions: " + std::to_string(r.id) + " and " + std::to_string(regions[j].id) + " overlap");
      }
    }
  }
  if (out.empty() && std::abs(covered - area.area()) > 1e-9 * area.area()) {
    out.push_back("regions: do not cover the whole area");
  }
  return out;
}

int home_region(std::span<const CLNRegion> regions, Point p) {
  int best = -1;
  for (const auto& r : regions) {
    if (r.bounds.contains(p) && (best < 0 || r.id < best)) best = r.id;
  }
  return best;
}

int Assignment::cln_of(NodeId id) const {
  auto it = node_to_cln.find(id);
  if (it == node_to_cln.end()) throw std::invalid_argument("node " + std::to_string(id) + " is not assigned");
  return it->second;
}

std::vector<NodeId> Assignment::members(int cln) const {
  std::vector<NodeId> out;
  for (const auto& [id, c] : node_to_cln) {
    if (c == cln) out.push_back(id);
  }
  return out;
}

int Assignment::boundary_edge_count(int cln) const {
  int n = 0;
  for (const auto& e : inter_cln_edges) {
    if (e.cln_a == cln || e.cln_b == cln) ++n;
  }
  return n;
}

std::vector<InterClnEdge> inter_cln_edges(const std::map<NodeId, int>& node_to_cln, const Topology& topology) {
  std::vector<InterClnEdge> out;
  for (int i = 0; i < topology.size(); ++i) {
    for (int j : topology.adj[static_cast<std::size_t>(i)]) {
      NodeId a = topology.ids[static_cast<std::size_t>(i)];
      NodeId b = topology.ids[static_cast<std::size_t>(j)];
      if (a >= b) continue;
      int ca = node_to_cln.at(a), cb = node_to_cln.at(b);
      if (ca != cb) out.push_back({a, b, ca, cb});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Assignment make_assignment(std::map<NodeId, int> node_to_cln, std::vector<int> cln_ids, const Topology& topology) {
  std::sort(cln_ids.begin(), cln_ids.end());
  cln_ids.erase(std::unique(cln_ids.begin(), cln_ids.end()), cln_ids.end());
  if (node_to_cln.size() != topology.ids.size()) throw std::invalid_argument("assignment does not match node set");
  for (NodeId id : topology.ids) {
    auto it = node_to_cln.find(id);
    if (it == node_to_cln.end()) throw std::invalid_argument("node " + std::to_string(id) + " is not assigned");
    if (!std::binary_search(cln_ids.begin(), cln_ids.end(), it->second)) {
      throw std::invalid_argument("node " + std::to_string(id) + " assigned to unknown CLN");
    }
  }
  Assignment a;
  a.node_to_cln = std::move(node_to_cln);
  a.cln_ids = std::move(cln_ids);
  a.inter_cln_edges = inter_cln_edges(a.node_to_cln, topology);
  std::map<int, std::set<NodeId>> boundary;
  for (const auto& e : a.inter_cln_edges) {
    boundary[e.cln_a].insert(e.a);
    boundary[e.cln_b].insert(e.b);
  }
  for (int c : a.cln_ids) a.boundary_nodes[c] = {boundary[c].begin(), boundary[c].end()};
  return a;
}

Assignment uniform_assign(const HinSnapshot& snapshot, std::span<const CLNRegion> regions) {
  std::map<NodeId, int> map;
  std::vector<int> ids;
  for (const auto& r : regions) ids.push_back(r.id);
  for (const auto& node : snapshot.nodes()) {
    int r = home_region(regions, node.position);
    if (r < 0) throw std::invalid_argument("node " + std::to_string(node.id) + " lies outside every CLN region");
    map[node.id] = r;
  }
  return make_assignment(std::move(map), std::move(ids), union_topology(snapshot));
}

BoundarySubgraph extract_boundary_subgraph(const Assignment& assignment, const HinSnapshot& snapshot,
                                           std::span<const CLNRegion> regions, int u, int v, int band_hops) {
  const CLNRegion& ru = region_by_id(regions, u);
  const CLNRegion& rv = region_by_id(regions, v);
  if (u == v || !regions_adjacent(ru, rv)) {
    throw std::invalid_argument("CLNs " + std::to_string(u) + " and " + std::to_string(v) + " are not adjacent");
  }
  if (band_hops < 0) throw std::invalid_argument("band_hops must be >= 0");

  BoundarySubgraph sub;
  sub.u = u;
  sub.v = v;
  sub.base_u = ru.base_station;
  sub.base_v = rv.base_station;

  Topology topo = union_topology(snapshot);
  // A node may only move between its own region and an adjacent one, so the
  // band is limited to nodes whose home region is u or v.
  std::vector<char> eligible(static_cast<std::size_t>(topo.size()), 0);
  for (int i = 0; i < topo.size(); ++i) {
    NodeId id = topo.ids[static_cast<std::size_t>(i)];
    int c = assignment.cln_of(id);
    int home = home_region(regions, snapshot.node(snapshot.require_index(id)).position);
    if ((c == u || c == v) && (home == u || home == v)) eligible[static_cast<std::size_t>(i)] = 1;
  }

  std::vector<int> dist(static_cast<std::size_t>(topo.size()), -1);
  std::deque<int> queue;
  for (const auto& e : assignment.inter_cln_edges) {
    bool pair = (e.cln_a == u && e.cln_b == v) || (e.cln_a == v && e.cln_b == u);
    if (!pair) continue;
    for (NodeId id : {e.a, e.b}) {
      int i = *topo.index_of(id);
      if (eligible[static_cast<std::size_t>(i)] && dist[static_cast<std::size_t>(i)] < 0) {
        dist[static_cast<std::size_t>(i)] = 0;
        queue.push_back(i);
      }
    }
  }
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    if (dist[static_cast<std::size_t>(x)] == band_hops) continue;
    for (int y : topo.adj[static_cast<std::size_t>(x)]) {
      if (eligible[static_cast<std::size_t>(y)] && dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
        queue.push_back(y);
      }
    }
  }

  std::vector<int> members;
  for (int i = 0; i < topo.size(); ++i) {
    if (dist[static_cast<std::size_t>(i)] >= 0) members.push_back(i);
  }
  std::sort(members.begin(), members.end(),
            [&](int a, int b) { return topo.ids[static_cast<std::size_t>(a)] < topo.ids[static_cast<std::size_t>(b)]; });
  for (int i : members) {
    NodeId id = topo.ids[static_cast<std::size_t>(i)];
    sub.nodes.push_back(id);
    sub.positions.push_back(snapshot.node(snapshot.require_index(id)).position);
    sub.current_cln.push_back(assignment.cln_of(id));
    for (int j : topo.adj[static_cast<std::size_t>(i)]) {
      NodeId other = topo.ids[static_cast<std::size_t>(j)];
      if (id < other && dist[static_cast<std::size_t>(j)] >= 0) sub.edges.emplace_back(id, other);
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  return sub;
}

int bipartition_cut(const BoundarySubgraph& subgraph, const std::vector<bool>& on_u_side) {
  if (on_u_side.size() != subgraph.nodes.size()) throw std::invalid_argument("labelling size mismatch");
  std::map<NodeId, bool> side;
  for (std::size_t i = 0; i < subgraph.nodes.size(); ++i) side[subgraph.nodes[i]] = on_u_side[i];
  int cut = 0;
  for (auto [a, b] : subgraph.edges) {
    if (side.at(a) != side.at(b)) ++cut;
  }
  return cut;
}

Bipartition kmeans_bipartition(const BoundarySubgraph& subgraph, std::uint64_t seed, const KMeansOptions& options) {
  if (subgraph.empty()) throw std::invalid_argument("k-means needs a non-empty boundary subgraph");
  if (options.restarts < 1 || options.max_iterations < 1) throw std::invalid_argument("invalid k-means options");
  std::mt19937_64 rng(seed);
  const auto& pts = subgraph.positions;
  const std::size_t n = pts.size();

  Bipartition out;
  Clustering best;
  for (int r = 0; r < options.restarts; ++r) {
    Clustering c = lloyd_two_means(pts, rng, options);
    out.iterations += c.iterations;
    if (c.degenerate) {
      best = c;
      break;
    }
    if (c.inertia < best.inertia) best = std::move(c);
  }
  out.degenerate = best.degenerate;
  out.inertia = best.inertia;

  std::vector<bool> on_u(n);
  if (best.degenerate) {
    std::size_t u_count = 0;
    for (int c : subgraph.current_cln) u_count += (c == subgraph.u);
    bool all_u = 2 * u_count >= n;
    std::fill(on_u.begin(), on_u.end(), all_u);
  } else {
    // The cluster holding more of u's current nodes attaches to u; ties go to
    // the cluster whose centroid is nearer u's base station.
    std::array<int, 2> u_votes{};
    std::array<Point, 2> centroid{};
    std::array<int, 2> cnt{};
    for (std::size_t i = 0; i < n; ++i) {
      auto k = static_cast<std::size_t>(best.label[i]);
      if (subgraph.current_cln[i] == subgraph.u) ++u_votes[k];
      else --u_votes[k];
      centroid[k].x += pts[i].x;
      centroid[k].y += pts[i].y;
      ++cnt[k];
    }
    int u_cluster;
    if (u_votes[0] != u_votes[1]) {
      u_cluster = u_votes[0] > u_votes[1] ? 0 : 1;
    } else {
      auto mean = [&](std::size_t k) { return Point{centroid[k].x / cnt[k], centroid[k].y / cnt[k]}; };
      double d0 = cnt[0] ? sq_dist(mean(0), subgraph.base_u) : std::numeric_limits<double>::infinity();
      double d1 = cnt[1] ? sq_dist(mean(1), subgraph.base_u) : std::numeric_limits<double>::infinity();
      u_cluster = d1 < d0 ? 1 : 0;
    }
    for (std::size_t i = 0; i < n; ++i) on_u[i] = best.label[i] == u_cluster;
  }
  for (std::size_t i = 0; i < n; ++i) (on_u[i] ? out.side_u : out.side_v).push_back(subgraph.nodes[i]);
  out.cut_edges = bipartition_cut(subgraph, on_u);
  return out;
}

AdaptiveResult adaptive_assign(const Assignment& assignment, const HinSnapshot& snapshot,
                               std::span<const CLNRegion> regions, const DelayModel& model, std::uint64_t seed,
                               const AdaptiveOptions& options) {
  Topology topo = union_topology(snapshot);
  std::vector<std::pair<int, int>> pairs;
  std::vector<CLNRegion> sorted(regions.begin(), regions.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      if (regions_adjacent(sorted[i], sorted[j])) pairs.emplace_back(sorted[i].id, sorted[j].id);
    }
  }

  AdaptiveResult result;
  std::map<NodeId, int> current = assignment.node_to_cln;
  int total = static_cast<int>(inter_cln_edges(current, topo).size());
  std::map<int, double> free_at;
  double makespan = 0.0;

  int passes = options.multi_pass ? std::max(1, options.max_passes) : 1;
  for (int pass = 0; pass < passes; ++pass) {
    bool changed = false;
    for (auto [u, v] : pairs) {
      Assignment view = make_assignment(current, assignment.cln_ids, topo);
      BoundarySubgraph sub = extract_boundary_subgraph(view, snapshot, regions, u, v, options.band_hops);

      PairStep step;
      step.u = u;
      step.v = v;
      step.band_nodes = static_cast<int>(sub.nodes.size());
      step.total_before = total;
      step.total_after = total;
      // Boundary topology to the higher-id cloudlet and the split back.
      step.cost_ms = 2.0 * model.t_cln;
      if (!sub.empty()) {
        step.band_cut_before = count_band_cut(sub, current);
        std::uint64_t pair_seed = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(u * 1000003 + v + 1));
        Bipartition split = kmeans_bipartition(sub, pair_seed, options.kmeans);
        step.cost_ms += static_cast<double>(split.iterations) * static_cast<double>(sub.nodes.size()) * 2.0 *
                        model.t_c * model.cloudlet_slowdown;
        std::map<NodeId, int> candidate = current;
        for (NodeId id : split.side_u) candidate[id] = u;
        for (NodeId id : split.side_v) candidate[id] = v;
        step.band_cut_after = count_band_cut(sub, candidate);
        int cand_total = static_cast<int>(inter_cln_edges(candidate, topo).size());
        if (cand_total < total && step.band_cut_after <= step.band_cut_before) {
          step.adopted = candidate != current;
          changed = changed || step.adopted;
          current = std::move(candidate);
          total = cand_total;
        } else {
          step.band_cut_after = step.band_cut_before;
        }
        step.total_after = total;
      }
      step.start_ms = std::max(free_at[u], free_at[v]);
      double end = step.start_ms + step.cost_ms;
      free_at[u] = free_at[v] = end;
      makespan = std::max(makespan, end);
      result.steps.push_back(step);
    }
    if (!changed) break;
  }

  result.assignment = make_assignment(std::move(current), assignment.cln_ids, topo);
  result.protocol_cost_ms = makespan;
  result.assignment.protocol_cost_ms = makespan;
  return result;
}

json to_json(const Assignment& a) {
  json nodes = json::object();
  for (const auto& [id, c] : a.node_to_cln) nodes[std::to_string(id)] = c;
  json edges = json::array();
  for (const auto& e : a.inter_cln_edges) edges.push_back({e.a, e.b, e.cln_a, e.cln_b});
  json boundary = json::object();
  for (const auto& [c, ids] : a.boundary_nodes) boundary[std::to_string(c)] = ids;
  return {{"cln_ids", a.cln_ids},
          {"node_to_cln", nodes},
          {"boundary_nodes", boundary},
          {"inter_cln_edges", edges},
          {"protocol_cost_ms", a.protocol_cost_ms}};
}

json to_json(std::span<const CLNRegion> regions) {
  json out = json::array();
  for (const auto& r : regions) {
    out.push_back({{"id", r.id},
                   {"rect", {r.bounds.x0, r.bounds.y0, r.bounds.x1, r.bounds.y1}},
                   {"base_station", {r.base_station.x, r.base_station.y}}});
  }
  return out;
}

std::vector<CLNRegion> regions_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("regions: expected an array");
  std::vector<CLNRegion> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string tag = "regions[" + std::to_string(i) + "]";
    for (const auto& [key, value] : r.items()) {
      if (key != "id" && key != "rect" && key != "base_station") throw std::invalid_argument(tag + "." + key + ": unknown key");
    }
    if (!r.contains("id") || !r.contains("rect")) throw std::invalid_argument(tag + ": id and rect are required");
    const auto& rect = r.at("rect");
    if (!rect.is_array() || rect.size() != 4) throw std::invalid_argument(tag + ".rect: expected [x0, y0, x1, y1]");
    CLNRegion reg;
    reg.id = r.at("id").get<int>();
    reg.bounds = {rect[0].get<double>(), rect[1].get<double>(), rect[2].get<double>(), rect[3].get<double>()};
    reg.base_station = reg.bounds.center();
    if (r.contains("base_station")) {
      const auto& b = r.at("base_station");
      if (!b.is_array() || b.size() != 2) throw std::invalid_argument(tag + ".base_station: expected [x, y]");
      reg.base_station = {b[0].get<double>(), b[1].get<double>()};
    }
    out.push_back(reg);
  }
  return out;
}

}  // namespace sdgnn
