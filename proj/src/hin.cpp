#include "sdgnn/hin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sdgnn {

namespace {

using nlohmann::json;

json encode_threshold(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double decode_threshold(const json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

Point point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y] coordinate pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::connectivity: return "connectivity";
    case Relation::proximity: return "proximity";
    case Relation::destination: return "destination";
  }
  return "?";
}

GridCell RoadNetwork::cell_of(Point p) const {
  return {static_cast<int>(std::floor(p.x / cell_size)), static_cast<int>(std::floor(p.y / cell_size))};
}

void RoadNetwork::connect_cells(GridCell a, GridCell b) {
  if (b < a) std::swap(a, b);
  cell_pairs.emplace(a, b);
}

void RoadNetwork::connect_nodes(NodeId a, NodeId b) {
  if (a == b) return;
  if (b < a) std::swap(a, b);
  node_pairs.emplace(a, b);
}

bool RoadNetwork::connects(const TaxiNode& a, const TaxiNode& b) const {
  if (a.id == b.id) return false;
  NodeId lo = std::min(a.id, b.id), hi = std::max(a.id, b.id);
  if (node_pairs.contains({lo, hi})) return true;
  GridCell ca = cell_of(a.position), cb = cell_of(b.position);
  if (cb < ca) std::swap(ca, cb);
  return cell_pairs.contains({ca, cb});
}

RoadNetwork RoadNetwork::street_grid(double cell_size, int cols, int rows) {
  RoadNetwork net;
  net.cell_size = cell_size;
  for (int x = 0; x < cols; ++x) {
    for (int y = 0; y < rows; ++y) {
      net.connect_cells({x, y}, {x, y});
      if (x + 1 < cols) net.connect_cells({x, y}, {x + 1, y});
      if (y + 1 < rows) net.connect_cells({x, y}, {x, y + 1});
    }
  }
  return net;
}

void GraphConfig::validate() const {
  if (!(proximity_threshold > 0.0)) throw std::invalid_argument("proximity_threshold must be > 0");
  if (!(destination_threshold > 0.0)) throw std::invalid_argument("destination_threshold must be > 0");
  if (road_network && !(road_network->cell_size > 0.0 && std::isfinite(road_network->cell_size))) {
    throw std::invalid_argument("road_network.cell_size must be a positive finite number");
  }
}

double relation_weight(double dist, double threshold, WeightFunction fn) {
  if (!(dist < threshold)) return 0.0;
  if (fn == WeightFunction::binary) return 1.0;
  double ratio = dist / threshold;
  return std::exp(-ratio * ratio);
}

// ---------------------------------------------------------------------------
// SparseAdjacency

SparseAdjacency SparseAdjacency::from_edges(int n, std::span<const WeightedEdge> edges) {
  SparseAdjacency adj(n);
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) throw std::invalid_argument("edge index out of range");
    if (e.a == e.b) throw std::invalid_argument("self-loops are not allowed");
    if (!(e.weight != 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("edge weights must be finite and nonzero");
    }
    adj.rows_[static_cast<std::size_t>(e.a)].push_back({e.b, e.weight});
    adj.rows_[static_cast<std::size_t>(e.b)].push_back({e.a, e.weight});
  }
  for (auto& row : adj.rows_) {
    std::sort(row.begin(), row.end(), [](const Neighbor& x, const Neighbor& y) { return x.index < y.index; });
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k].index == row[k - 1].index) throw std::invalid_argument("duplicate edge");
    }
  }
  return adj;
}

double SparseAdjacency::weight(int i, int j) const {
  auto row = neighbors(i);
  auto it = std::lower_bound(row.begin(), row.end(), j, [](const Neighbor& n, int v) { return n.index < v; });
  return (it != row.end() && it->index == j) ? it->weight : 0.0;
}

std::size_t SparseAdjacency::edge_count() const {
  std::size_t total = 0;
  for (const auto& row : rows_) total += row.size();
  return total / 2;
}

std::vector<WeightedEdge> SparseAdjacency::edges() const {
  std::vector<WeightedEdge> out;
  for (int i = 0; i < size(); ++i) {
    for (const auto& nb : neighbors(i)) {
      if (nb.index > i) out.push_back({i, nb.index, nb.weight});
    }
  }
  return out;
}

bool operator==(const SparseAdjacency& a, const SparseAdjacency& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    auto ra = a.neighbors(i), rb = b.neighbors(i);
    if (ra.size() != rb.size()) return false;
    for (std::size_t k = 0; k < ra.size(); ++k) {
      if (ra[k].index != rb[k].index || ra[k].weight != rb[k].weight) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Topology

std::optional<int> Topology::index_of(NodeId id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<int>(it - ids.begin());
}

std::size_t Topology::edge_count() const {
  std::size_t total = 0;
  for (const auto& row : adj) total += row.size();
  return total / 2;
}

bool Topology::linked(int i, int j) const {
  const auto& row = adj[static_cast<std::size_t>(i)];
  return std::binary_search(row.begin(), row.end(), j);
}

Topology Topology::from_pairs(std::vector<NodeId> ids, std::span<const std::pair<int, int>> edges) {
  Topology t;
  t.adj.resize(ids.size());
  t.ids = std::move(ids);
  for (auto [a, b] : edges) {
    if (a == b) throw std::invalid_argument("self-loop in topology");
    t.adj[static_cast<std::size_t>(a)].push_back(b);
    t.adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& row : t.adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return t;
}

// ---------------------------------------------------------------------------
// HinSnapshot

HinSnapshot HinSnapshot::assemble(std::int64_t time_slot, std::vector<TaxiNode> nodes, GraphConfig config,
                                  std::array<SparseAdjacency, 3> adjacency) {
  config.validate();
  HinSnapshot s;
  s.time_slot_ = time_slot;
  const int n = static_cast<int>(nodes.size());
  const std::size_t width = nodes.empty() ? 0 : nodes.front().features.size();
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (!is_finite(node.position) || !is_finite(node.destination)) {
      throw std::invalid_argument("node " + std::to_string(node.id) + " has a non-finite coordinate");
    }
    if (node.features.size() != width) {
      throw std::invalid_argument("node " + std::to_string(node.id) + " has a mismatched feature width");
    }
    if (!s.index_.emplace(node.id, i).second) {
      throw std::invalid_argument("duplicate node id " + std::to_string(node.id));
    }
  }
  for (auto r : kRelations) {
    const auto& adj = adjacency[static_cast<std::size_t>(r)];
    if (adj.size() != n) throw std::invalid_argument(std::string(to_string(r)) + " adjacency has wrong size");
    for (int i = 0; i < n; ++i) {
      for (const auto& nb : adj.neighbors(i)) {
        if (nb.index == i) throw std::invalid_argument("adjacency diagonal must be zero");
        if (adj.weight(nb.index, i) != nb.weight) throw std::invalid_argument("adjacency must be symmetric");
        if (r == Relation::connectivity && nb.weight != 1.0) {
          throw std::invalid_argument("connectivity adjacency must be binary");
        }
      }
    }
  }
  s.features_ = Matrix(static_cast<std::size_t>(n), width);
  for (int i = 0; i < n; ++i) {
    const auto& f = nodes[static_cast<std::size_t>(i)].features;
    std::copy(f.begin(), f.end(), s.features_.row(static_cast<std::size_t>(i)).begin());
  }
  s.nodes_ = std::move(nodes);
  s.config_ = std::move(config);
  s.adjacency_ = std::move(adjacency);
  return s;
}

std::optional<int> HinSnapshot::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int HinSnapshot::require_index(NodeId id) const {
  auto idx = index_of(id);
  if (!idx) throw std::invalid_argument("unknown node id " + std::to_string(id));
  return *idx;
}

HinSnapshot build_snapshot(std::vector<TaxiNode> nodes, const GraphConfig& config, std::int64_t time_slot) {
  config.validate();
  const int n = static_cast<int>(nodes.size());
  for (const auto& node : nodes) {
    if (!is_finite(node.position) || !is_finite(node.destination)) {
      throw std::invalid_argument("node " + std::to_string(node.id) + " has a non-finite coordinate");
    }
  }

  std::vector<WeightedEdge> conn, prox, dest;
  for (int i = 0; i < n; ++i) {
    const auto& a = nodes[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const auto& b = nodes[static_cast<std::size_t>(j)];
      double wp = relation_weight(distance(a.position, b.position), config.proximity_threshold, config.weight);
      if (wp != 0.0) prox.push_back({i, j, wp});
      double wd =
          relation_weight(distance(a.destination, b.destination), config.destination_threshold, config.weight);
      if (wd != 0.0) dest.push_back({i, j, wd});
      if (config.road_network && config.road_network->connects(a, b)) conn.push_back({i, j, 1.0});
    }
  }

  std::array<SparseAdjacency, 3> adjacency = {SparseAdjacency::from_edges(n, conn),
                                              SparseAdjacency::from_edges(n, prox),
                                              SparseAdjacency::from_edges(n, dest)};
  return HinSnapshot::assemble(time_slot, std::move(nodes), config, std::move(adjacency));
}

Topology union_topology(const HinSnapshot& snapshot) {
  Topology t;
  const int n = snapshot.size();
  t.ids.reserve(static_cast<std::size_t>(n));
  for (const auto& node : snapshot.nodes()) t.ids.push_back(node.id);
  t.adj.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& row = t.adj[static_cast<std::size_t>(i)];
    for (auto r : kRelations) {
      for (const auto& nb : snapshot.adjacency(r).neighbors(i)) row.push_back(nb.index);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return t;
}

HinSnapshot evolve(const HinSnapshot& snapshot, const Evolution& change, const GraphConfig& config) {
  std::vector<TaxiNode> nodes(snapshot.nodes().begin(), snapshot.nodes().end());
  std::set<NodeId> leaving;
  for (NodeId id : change.departures) {
    snapshot.require_index(id);
    leaving.insert(id);
  }
  for (const auto& [id, pos] : change.moves) {
    nodes[static_cast<std::size_t>(snapshot.require_index(id))].position = pos;
  }
  std::erase_if(nodes, [&](const TaxiNode& n) { return leaving.contains(n.id); });
  for (const auto& arrival : change.arrivals) {
    if (snapshot.index_of(arrival.id) && !leaving.contains(arrival.id)) {
      throw std::invalid_argument("arrival id " + std::to_string(arrival.id) + " already present");
    }
    nodes.push_back(arrival);
  }
  return build_snapshot(std::move(nodes), config, snapshot.time_slot() + 1);
}

HinSnapshot filter_edges(const HinSnapshot& snapshot, double max_link_distance) {
  std::array<SparseAdjacency, 3> adjacency;
  for (auto r : kRelations) {
    std::vector<WeightedEdge> kept;
    for (const auto& e : snapshot.adjacency(r).edges()) {
      if (distance(snapshot.node(e.a).position, snapshot.node(e.b).position) <= max_link_distance) {
        kept.push_back(e);
      }
    }
    adjacency[static_cast<std::size_t>(r)] = SparseAdjacency::from_edges(snapshot.size(), kept);
  }
  return HinSnapshot::assemble(snapshot.time_slot(),
                               std::vector<TaxiNode>(snapshot.nodes().begin(), snapshot.nodes().end()),
                               snapshot.config(), std::move(adjacency));
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const GraphConfig& config) {
  json j;
  j["proximity_threshold"] = encode_threshold(config.proximity_threshold);
  j["destination_threshold"] = encode_threshold(config.destination_threshold);
  j["weight"] = config.weight == WeightFunction::gaussian ? "gaussian" : "binary";
  if (config.road_network) {
    json road;
    road["cell_size"] = config.road_network->cell_size;
    json cells = json::array();
    for (const auto& [a, b] : config.road_network->cell_pairs) cells.push_back({a.ix, a.iy, b.ix, b.iy});
    road["cell_pairs"] = cells;
    json pairs = json::array();
    for (const auto& [a, b] : config.road_network->node_pairs) pairs.push_back({a, b});
    road["node_pairs"] = pairs;
    j["road_network"] = road;
  } else {
    j["road_network"] = nullptr;
  }
  return j;
}

GraphConfig graph_config_from_json(const json& j) {
  GraphConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key != "proximity_threshold" && key != "destination_threshold" && key != "weight" && key != "road_network") {
      throw std::invalid_argument("graph." + key + ": unknown key");
    }
  }
  if (j.contains("proximity_threshold")) c.proximity_threshold = decode_threshold(j.at("proximity_threshold"));
  if (j.contains("destination_threshold")) {
    c.destination_threshold = decode_threshold(j.at("destination_threshold"));
  }
  if (j.contains("weight")) {
    auto w = j.at("weight").get<std::string>();
    if (w == "gaussian") c.weight = WeightFunction::gaussian;
    else if (w == "binary") c.weight = WeightFunction::binary;
    else throw std::invalid_argument("unknown weight function '" + w + "'");
  }
  if (j.contains("road_network") && !j.at("road_network").is_null()) {
    const auto& r = j.at("road_network");
    RoadNetwork net;
    net.cell_size = r.value("cell_size", 100.0);
    if (r.contains("cell_pairs")) {
      for (const auto& p : r.at("cell_pairs")) {
        net.connect_cells({p.at(0).get<int>(), p.at(1).get<int>()}, {p.at(2).get<int>(), p.at(3).get<int>()});
      }
    }
    if (r.contains("node_pairs")) {
      for (const auto& p : r.at("node_pairs")) net.connect_nodes(p.at(0).get<NodeId>(), p.at(1).get<NodeId>());
    }
    c.road_network = std::move(net);
  }
  c.validate();
  return c;
}

json to_json(const HinSnapshot& snapshot) {
  json j;
  j["time_slot"] = snapshot.time_slot();
  j["config"] = to_json(snapshot.config());
  json nodes = json::array();
  for (const auto& n : snapshot.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"position", {n.position.x, n.position.y}},
                     {"destination", {n.destination.x, n.destination.y}},
                     {"features", n.features}});
  }
  j["nodes"] = nodes;
  json edges;
  for (auto r : kRelations) {
    json list = json::array();
    for (const auto& e : snapshot.adjacency(r).edges()) {
      list.push_back({snapshot.node(e.a).id, snapshot.node(e.b).id, e.weight});
    }
    edges[std::string(to_string(r))] = list;
  }
  j["edges"] = edges;
  return j;
}

HinSnapshot snapshot_from_json(const json& j) {
  GraphConfig config = j.contains("config") ? graph_config_from_json(j.at("config")) : GraphConfig{};
  std::vector<TaxiNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TaxiNode n;
    n.id = jn.at("id").get<NodeId>();
    n.position = point_from_json(jn.at("position"));
    n.destination = jn.contains("destination") ? point_from_json(jn.at("destination")) : n.position;
    if (jn.contains("features")) n.features = jn.at("features").get<std::vector<double>>();
    nodes.push_back(std::move(n));
  }
  const std::int64_t t = j.value("time_slot", std::int64_t{0});
  if (!j.contains("edges")) return build_snapshot(std::move(nodes), config, t);

  std::unordered_map<NodeId, int> index;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) index.emplace(nodes[static_cast<std::size_t>(i)].id, i);
  auto lookup = [&](NodeId id) {
    auto it = index.find(id);
    if (it == index.end()) throw std::invalid_argument("edge references unknown node id " + std::to_string(id));
    return it->second;
  };
  std::array<SparseAdjacency, 3> adjacency;
  const int n = static_cast<int>(nodes.size());
  for (auto r : kRelations) {
    std::vector<WeightedEdge> list;
    const auto key = std::string(to_string(r));
    if (j.at("edges").contains(key)) {
      for (const auto& e : j.at("edges").at(key)) {
        double w = e.size() > 2 ? e.at(2).get<double>() : 1.0;
        list.push_back({lookup(e.at(0).get<NodeId>()), lookup(e.at(1).get<NodeId>()), w});
      }
    }
    adjacency[static_cast<std::size_t>(r)] = SparseAdjacency::from_edges(n, list);
  }
  return HinSnapshot::assemble(t, std::move(nodes), std::move(config), std::move(adjacency));
}

}  // namespace sdgnn
