#include "sdgnn/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "sdgnn/compgraph.hpp"

namespace sdgnn {

namespace {

int layer_count(const Scenario& s) { return s.model.gnn_layers; }

std::vector<int> ball_distances(const Topology& topo, int root, int radius) {
  std::vector<int> dist(static_cast<std::size_t>(topo.size()), -1);
  std::deque<int> queue{root};
  dist[static_cast<std::size_t>(root)] = 0;
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    if (dist[static_cast<std::size_t>(x)] == radius) continue;
    for (int y : topo.adj[static_cast<std::size_t>(x)]) {
      if (dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

Tensor3 assemble_predictions(const std::vector<std::vector<std::vector<double>>>& sequences, const Scenario& s) {
  const auto Q = static_cast<std::size_t>(s.model.horizon);
  const auto D = static_cast<std::size_t>(s.model.output_dim);
  Tensor3 out(Q, sequences.size(), D);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    auto y = lstm_head(sequences[i], s.weights, s.model);
    for (std::size_t q = 0; q < Q; ++q) {
      for (std::size_t k = 0; k < D; ++k) out(q, i, k) = y[q * D + k];
    }
  }
  return out;
}

std::map<int, const CLNRegion*> region_index(const Scenario& s) {
  std::map<int, const CLNRegion*> out;
  for (const auto& r : s.regions) out[r.id] = &r;
  return out;
}

}  // namespace

std::string to_string(Setting s) {
  switch (s) {
    case Setting::centralized: return "centralized";
    case Setting::decentralized: return "decentralized";
    case Setting::semidecentralized: return "semidecentralized";
  }
  return "?";
}

void Scenario::validate() const {
  if (window.empty()) throw std::invalid_argument("scenario: empty snapshot window");
  model.validate();
  delay.validate();
  if (!(comm_range > 0.0)) throw std::invalid_argument("comm_range must be > 0");
  if (compute_predictions) {
    check_shapes(weights, model);
    window_node_ids(window);
  }
}

InferenceReport run_centralized(const Scenario& s) {
  s.validate();
  InferenceReport r;
  r.setting = Setting::centralized;
  r.node_ids = window_node_ids(s.window);
  if (s.compute_predictions) r.predictions = forward(s.window, s.model, s.weights);
  auto c = centralized_delay(s.window.back(), layer_count(s), s.delay);
  r.breakdown = c.breakdown;
  r.total_ms = r.breakdown.total();
  return r;
}

InferenceReport run_decentralized(const Scenario& s) {
  s.validate();
  const int L = layer_count(s);
  InferenceReport r;
  r.setting = Setting::decentralized;
  r.node_ids = window_node_ids(s.window);
  const std::size_t n = r.node_ids.size();

  std::vector<HinSnapshot> radio;
  for (const auto& snap : s.window) radio.push_back(filter_edges(snap, s.comm_range));

  // Latency on the current slot's radio topology.
  Topology topo = union_topology(radio.back());
  double mp_sum = 0.0, src_sum = 0.0;
  for (NodeId id : r.node_ids) {
    ComputationalGraph cg = extract(topo, id, L);
    NodeLatency nl;
    nl.id = id;
    nl.breakdown.add("message_passing", simulate_decentralized(cg, s.delay).delay_ms);
    nl.breakdown.add("source_processing", cg.root_degree > 0 ? s.delay.source_surcharge() : 0.0);
    nl.total_ms = nl.breakdown.total();
    mp_sum += nl.breakdown.get("message_passing");
    src_sum += nl.breakdown.get("source_processing");
    r.max_node_ms = std::max(r.max_node_ms, nl.total_ms);
    r.per_node.push_back(std::move(nl));
  }
  if (n > 0) {
    r.breakdown.add("message_passing", mp_sum / static_cast<double>(n));
    r.breakdown.add("source_processing", src_sum / static_cast<double>(n));
  }
  r.total_ms = r.breakdown.total();

  // Nodes whose full-graph L-hop ball touches an edge the radio range removed.
  std::set<NodeId> truncated;
  for (std::size_t slot = 0; slot < s.window.size(); ++slot) {
    const auto& full = s.window[slot];
    Topology ft = union_topology(full);
    Topology rt = union_topology(radio[slot]);
    std::vector<char> touched(static_cast<std::size_t>(full.size()), 0);
    for (int i = 0; i < full.size(); ++i) {
      for (auto rel : kRelations) {
        if (full.adjacency(rel).degree(i) != radio[slot].adjacency(rel).degree(i)) touched[static_cast<std::size_t>(i)] = 1;
      }
    }
    for (int i = 0; i < full.size(); ++i) {
      auto dist = ball_distances(ft, i, L);
      for (int j = 0; j < full.size(); ++j) {
        if (dist[static_cast<std::size_t>(j)] >= 0 && touched[static_cast<std::size_t>(j)]) {
          truncated.insert(full.node(i).id);
          break;
        }
      }
    }
  }
  r.truncated_nodes.assign(truncated.begin(), truncated.end());

  if (s.compute_predictions) {
    std::vector<std::vector<std::vector<double>>> seq(n);
    for (const auto& snap : radio) {
      NormalizedHin g = normalize(snap, s.model.weighted_edges);
      for (std::size_t i = 0; i < n; ++i) {
        seq[i].push_back(local_embedding(g, snap.features(), s.weights, s.model, snap.require_index(r.node_ids[i])));
      }
    }
    r.predictions = assemble_predictions(seq, s);
  }
  return r;
}

Assignment assign(const Scenario& s) {
  if (s.regions.empty()) throw std::invalid_argument("scenario: no CLN regions");
  Assignment base = uniform_assign(s.window.back(), s.regions);
  if (s.policy == AssignmentPolicy::uniform) return base;
  return adaptive_assign(base, s.window.back(), s.regions, s.delay, s.seed, s.adaptive).assignment;
}

InferenceReport run_semidecentralized(const Scenario& s) {
  s.validate();
  const int L = layer_count(s);
  InferenceReport r;
  r.setting = Setting::semidecentralized;
  r.node_ids = window_node_ids(s.window);
  const std::size_t n = r.node_ids.size();

  Assignment a = assign(s);
  auto regions = region_index(s);
  auto allowed = [&](int u, int v) {
    if (u == v || s.exchange == ExchangeMode::all_pairs) return true;
    return regions_adjacent(*regions.at(u), *regions.at(v));
  };

  auto delay = semidecentralized_delay(a, s.window.back(), L, s.delay, s.include_assignment_cost);
  r.breakdown = delay.breakdown;
  r.total_ms = r.breakdown.total();
  r.per_cln = delay.per_cln;

  std::size_t boundary = 0;
  for (const auto& [c, ids] : a.boundary_nodes) boundary += ids.size();
  r.boundary_fraction = n ? static_cast<double>(boundary) / static_cast<double>(n) : 0.0;
  std::size_t ok = 0, dropped = 0;
  for (const auto& e : a.inter_cln_edges) (allowed(e.cln_a, e.cln_b) ? ok : dropped) += 1;
  r.inter_cln_messages_per_layer.assign(static_cast<std::size_t>(L), 2 * ok);
  r.dropped_messages_per_layer = 2 * dropped;

  if (s.compute_predictions) {
    std::vector<std::vector<std::vector<double>>> seq(n);
    std::set<NodeId> tainted_any;
    for (const auto& snap : s.window) {
      const int m = snap.size();
      NormalizedHin g = normalize(snap, s.model.weighted_edges);
      Topology topo = union_topology(snap);
      std::vector<int> cln(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) cln[static_cast<std::size_t>(i)] = a.cln_of(snap.node(i).id);
      std::map<int, std::vector<int>> owned;
      for (int i = 0; i < m; ++i) owned[cln[static_cast<std::size_t>(i)]].push_back(i);

      Matrix h = snap.features();
      std::vector<char> tainted(static_cast<std::size_t>(m), 0);
      for (const auto& layer : s.weights.gnn) {
        Matrix next(h.rows(), layer[0].cols());
        std::vector<char> next_taint(static_cast<std::size_t>(m), 0);
        for (const auto& [u, rows] : owned) {
          // Own rows plus halo states received from permitted cloudlets.
          Matrix local(h.rows(), h.cols());
          std::set<int> present(rows.begin(), rows.end());
          for (int i : rows) {
            for (int j : topo.adj[static_cast<std::size_t>(i)]) {
              if (allowed(u, cln[static_cast<std::size_t>(j)])) present.insert(j);
              else next_taint[static_cast<std::size_t>(i)] = 1;
            }
          }
          for (int j : present) {
            auto src = h.row(static_cast<std::size_t>(j));
            std::copy(src.begin(), src.end(), local.row(static_cast<std::size_t>(j)).begin());
          }
          for (int i : rows) {
            if (tainted[static_cast<std::size_t>(i)]) next_taint[static_cast<std::size_t>(i)] = 1;
            for (int j : topo.adj[static_cast<std::size_t>(i)]) {
              if (present.contains(j) && tainted[static_cast<std::size_t>(j)]) next_taint[static_cast<std::size_t>(i)] = 1;
            }
          }
          Matrix out;
          layer_rows(g, local, layer, s.model, rows, out);
          for (int i : rows) {
            auto src = out.row(static_cast<std::size_t>(i));
            std::copy(src.begin(), src.end(), next.row(static_cast<std::size_t>(i)).begin());
          }
        }
        h = std::move(next);
        tainted = std::move(next_taint);
      }
      for (int i = 0; i < m; ++i) {
        if (tainted[static_cast<std::size_t>(i)]) tainted_any.insert(snap.node(i).id);
      }
      for (std::size_t i = 0; i < n; ++i) {
        auto row = h.row(static_cast<std::size_t>(snap.require_index(r.node_ids[i])));
        seq[i].emplace_back(row.begin(), row.end());
      }
    }
    r.dropped_dependency_nodes.assign(tainted_any.begin(), tainted_any.end());
    r.predictions = assemble_predictions(seq, s);
  }
  r.assignment = std::move(a);
  return r;
}

InferenceReport run(const Scenario& scenario, Setting setting) {
  switch (setting) {
    case Setting::centralized: return run_centralized(scenario);
    case Setting::decentralized: return run_decentralized(scenario);
    case Setting::semidecentralized: return run_semidecentralized(scenario);
  }
  throw std::invalid_argument("unknown setting");
}

std::pair<int, int> cln_grid_shape(int count) {
  if (count < 1) throw std::invalid_argument("CLN count must be >= 1");
  if (count == 10) return {5, 2};
  if (count == 20) return {5, 4};
  int rows = static_cast<int>(std::sqrt(static_cast<double>(count)));
  while (count % rows != 0) --rows;
  return {count / rows, rows};
}

BoundsRow bounds_for(const HinSnapshot& radio, int layers, const DelayModel& model) {
  BoundsRow row;
  row.layers = layers;
  Topology topo = union_topology(radio);
  for (NodeId id : topo.ids) {
    ComputationalGraph cg = extract(topo, id, layers);
    DelayBounds b = delay_bounds(cg, model);
    double actual = simulate_decentralized(cg, model).delay_ms;
    const double eps = 1e-9 * std::max(1.0, b.upper);
    if (actual < b.lower - eps || actual > b.upper + eps) ++row.violations;
    row.lower += b.lower;
    row.actual += actual;
    row.upper += b.upper;
    ++row.roots;
  }
  if (row.roots > 0) {
    const double k = static_cast<double>(row.roots);
    row.lower /= k;
    row.actual /= k;
    row.upper /= k;
  }
  return row;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SweepReport compare_settings(const std::function<Scenario(int trial)>& make, const SweepOptions& options) {
  if (options.layers.empty()) throw std::invalid_argument("layer sweep must be non-empty");
  if (options.trials < 1) throw std::invalid_argument("trials must be >= 1");

  struct Cell {
    std::vector<SweepRow> delays;
    std::optional<BoundsRow> bounds;
  };
  const std::size_t nl = options.layers.size();
  std::vector<Cell> cells(static_cast<std::size_t>(options.trials) * nl);

  std::vector<Scenario> bases;
  for (int t = 0; t < options.trials; ++t) bases.push_back(make(t));

  parallel_for(cells.size(), options.threads, [&](std::size_t k) {
    const int trial = static_cast<int>(k / nl);
    const int L = options.layers[k % nl];
    Scenario s = bases[static_cast<std::size_t>(trial)];
    s.model.gnn_layers = L;
    s.compute_predictions = options.predictions;
    if (options.predictions) s.weights = init_weights(s.model);
    s.adaptive.band_hops = options.band_hops ? *options.band_hops : 2 * L;
    Cell& cell = cells[k];
    auto push = [&](std::string curve, const InferenceReport& r, std::size_t edges) {
      cell.delays.push_back({std::move(curve), L, trial, r.total_ms, r.breakdown, edges});
    };
    push("centralized", run_centralized(s), 0);
    push("decentralized", run_decentralized(s), 0);
    for (int count : options.cln_grids) {
      auto [cols, rows] = cln_grid_shape(count);
      s.regions = grid_regions(s.area, cols, rows);
      for (auto policy : {AssignmentPolicy::uniform, AssignmentPolicy::adaptive}) {
        s.policy = policy;
        auto r = run_semidecentralized(s);
        std::string name = std::string(policy == AssignmentPolicy::uniform ? "semi_uniform_" : "semi_adaptive_") +
                           std::to_string(count);
        push(name, r, r.assignment->inter_cln_edges.size());
      }
    }
    if (options.bounds) {
      BoundsRow b = bounds_for(filter_edges(s.window.back(), s.comm_range), L, s.delay);
      b.trial = trial;
      cell.bounds = b;
    }
  });

  SweepReport report;
  // Row order: L, then trial, then curve.
  for (std::size_t li = 0; li < nl; ++li) {
    for (int t = 0; t < options.trials; ++t) {
      const Cell& c = cells[static_cast<std::size_t>(t) * nl + li];
      report.delays.insert(report.delays.end(), c.delays.begin(), c.delays.end());
      if (c.bounds) report.bounds.push_back(*c.bounds);
    }
  }
  return report;
}

}  // namespace sdgnn
