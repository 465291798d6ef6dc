#include "sdgnn/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#ifndef SDGNN_PRESET_DIR
#define SDGNN_PRESET_DIR "presets"
#endif

namespace sdgnn {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class Diagnostics {
 public:
  void add(std::string field, std::string message) { items_.push_back(std::move(field) + ": " + std::move(message)); }
  // Runs fn, turning any parse error into a diagnostic on `field`.
  template <class Fn>
  void guard(const std::string& field, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      std::string msg = e.what();
      // Library messages already carry a field prefix.
      if (msg.rfind(field + ":", 0) == 0) {
        items_.push_back(msg);
      } else if (msg.rfind(field + ".", 0) == 0) {
        auto space = msg.find(' ');
        if (space != std::string::npos && msg[space - 1] != ':') msg.insert(space, ":");
        items_.push_back(msg);
      } else {
        add(field, msg);
      }
    }
  }
  std::vector<std::string> take() { return std::move(items_); }

 private:
  std::vector<std::string> items_;
};

Setting setting_from(const std::string& s) {
  if (s == "centralized") return Setting::centralized;
  if (s == "decentralized") return Setting::decentralized;
  if (s == "semidecentralized") return Setting::semidecentralized;
  throw std::invalid_argument("unknown setting '" + s + "'");
}

AssignmentPolicy policy_from(const std::string& s) {
  if (s == "uniform") return AssignmentPolicy::uniform;
  if (s == "adaptive") return AssignmentPolicy::adaptive;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

std::string to_string(AssignmentPolicy p) { return p == AssignmentPolicy::uniform ? "uniform" : "adaptive"; }

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::sweep: return "sweep";
    case Experiment::single: return "single";
    case Experiment::generalization: return "generalization";
  }
  return "?";
}

RoadNetwork street_grid_over(const Rect& area, double cell_size) {
  RoadNetwork net;
  net.cell_size = cell_size;
  const int x0 = static_cast<int>(std::floor(area.x0 / cell_size));
  const int y0 = static_cast<int>(std::floor(area.y0 / cell_size));
  const int x1 = static_cast<int>(std::ceil(area.x1 / cell_size));
  const int y1 = static_cast<int>(std::ceil(area.y1 / cell_size));
  for (int x = x0; x <= x1; ++x) {
    for (int y = y0; y <= y1; ++y) {
      net.connect_cells({x, y}, {x, y});
      if (x < x1) net.connect_cells({x, y}, {x + 1, y});
      if (y < y1) net.connect_cells({x, y}, {x, y + 1});
    }
  }
  return net;
}

struct TrialData {
  Scenario scenario;
  Tensor3 truth;
};

int fleet_cell_width(const ScenarioFile& f) {
  if (f.trips) return 2 * f.trips->ingest.m * f.trips->ingest.n;
  const FleetGenConfig& c = f.fleet ? *f.fleet : FleetGenConfig{};
  return 2 * c.m * c.n;
}

TrialData make_trial(const ScenarioFile& f, int trial, int taxis_override = 0) {
  TrialData out;
  Scenario& s = out.scenario;
  s.model = f.model;
  s.delay = f.delay;
  s.policy = f.policies.empty() ? AssignmentPolicy::uniform : f.policies.front();
  s.exchange = f.exchange;
  s.adaptive.multi_pass = f.multi_pass;
  s.adaptive.band_hops = f.band_hops ? *f.band_hops : 2 * f.model.gnn_layers;
  s.include_assignment_cost = f.include_assignment_cost;
  s.comm_range = f.comm_range;
  s.seed = f.seed + static_cast<std::uint64_t>(trial);
  s.compute_predictions = f.predictions;

  GraphConfig graph = f.graph;
  SnapshotWindow window;
  if (f.trips) {
    auto ingest = ingest_trips(f.trips->path, f.trips->ingest);
    if (ingest.series.slots.empty()) throw std::runtime_error(f.trips->path.string() + ": no valid trips");
    const int total = static_cast<int>(ingest.series.slots.size());
    const int Q = f.model.horizon;
    int t = -1;
    if (f.trips->slot) {
      t = *f.trips->slot;
    } else {
      std::size_t best = 0;
      for (int c = f.history - 1; c + Q < total; ++c) {
        std::size_t count = ingest.series.slots[static_cast<std::size_t>(c)].taxis.size();
        if (count > best) {
          best = count;
          t = c;
        }
      }
      if (t < 0) throw std::runtime_error("trip data has no slot with a full window and taxis");
    }
    s.area = ingest.series.grid.area();
    if (f.road_network == "street_grid") graph.road_network = street_grid_over(s.area, ingest.series.grid.cell_size);
    window = make_window(ingest.series, t, f.history, Q, graph);
  } else {
    FleetGenConfig c = f.fleet ? *f.fleet : FleetGenConfig{};
    if (taxis_override > 0) c.taxis = taxis_override;
    c.seed = f.seed * 1000003ULL + static_cast<std::uint64_t>(trial);
    FleetSeries series = generate(c, f.history + f.model.horizon);
    s.area = {0.0, 0.0, c.width, c.height};
    if (f.road_network == "street_grid") graph.road_network = street_grid_over(s.area, c.cell_size);
    window = make_window(series, f.history - 1, f.history, f.model.horizon, graph);
  }
  s.window = std::move(window.history);
  out.truth = std::move(window.truth);

  if (!f.regions.empty()) {
    s.regions = f.regions;
  } else {
    auto [cols, rows] = cln_grid_shape(f.cln_counts.empty() ? 1 : f.cln_counts.front());
    s.regions = grid_regions(s.area, cols, rows);
  }
  if (f.predictions || f.experiment == Experiment::generalization) s.weights = init_weights(s.model);
  return out;
}

std::string delay_header() {
  return "curve,L,trial,total_ms,uplink_ms,compute_ms,downlink_ms,message_passing_ms,source_processing_ms,"
         "assignment_ms,inter_cln_edges\n";
}

std::string delay_line(const SweepRow& r) {
  std::ostringstream o;
  o << r.curve << ',' << r.layers << ',' << r.trial << ',' << fmt(r.total_ms);
  for (const char* k : {"uplink", "compute", "downlink", "message_passing", "source_processing", "assignment"}) {
    o << ',' << fmt(r.breakdown.get(k));
  }
  o << ',' << r.inter_cln_edges << '\n';
  return o.str();
}

std::string bounds_header() { return "L,trial,lower,actual,upper,roots,violations\n"; }

std::string bounds_line(const BoundsRow& b) {
  std::ostringstream o;
  o << b.layers << ',' << b.trial << ',' << fmt(b.lower) << ',' << fmt(b.actual) << ',' << fmt(b.upper) << ','
    << b.roots << ',' << b.violations << '\n';
  return o.str();
}

void write_text(const std::filesystem::path& p, const std::string& text, RunArtifacts& art) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  art.written.push_back(p);
}

json assignments_json(const ScenarioFile& f) {
  TrialData d = make_trial(f, 0);
  Scenario s = d.scenario;
  s.model.gnn_layers = f.layers.front();
  s.adaptive.band_hops = f.band_hops ? *f.band_hops : 2 * s.model.gnn_layers;
  json out = json::array();
  std::vector<std::vector<CLNRegion>> layouts;
  if (!f.regions.empty()) {
    layouts.push_back(f.regions);
  } else {
    for (int count : f.cln_counts) {
      auto [cols, rows] = cln_grid_shape(count);
      layouts.push_back(grid_regions(s.area, cols, rows));
    }
  }
  for (const auto& regions : layouts) {
    s.regions = regions;
    Assignment uniform = uniform_assign(s.window.back(), regions);
    for (auto policy : f.policies) {
      Assignment a = policy == AssignmentPolicy::uniform
                         ? uniform
                         : adaptive_assign(uniform, s.window.back(), regions, s.delay, s.seed, s.adaptive).assignment;
      out.push_back({{"cln_count", regions.size()},
                     {"policy", to_string(policy)},
                     {"regions", to_json(std::span<const CLNRegion>(regions))},
                     {"assignment", to_json(a)}});
    }
  }
  return out;
}

}  // namespace

std::filesystem::path preset_path(const std::string& name) {
  return std::filesystem::path(SDGNN_PRESET_DIR) / (name + ".json");
}

ParsedScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    ParsedScenario p;
    p.diagnostics.push_back(path.string() + ": " + e.what());
    return p;
  }
  return parse_scenario(j, path.parent_path());
}

ParsedScenario parse_scenario(const json& j, const std::filesystem::path& base_dir) {
  ParsedScenario out;
  ScenarioFile& f = out.file;
  Diagnostics diag;
  if (!j.is_object()) {
    diag.add("scenario", "expected a JSON object");
    out.diagnostics = diag.take();
    return out;
  }
  static const std::set<std::string> known = {
      "name",     "experiment", "seed",        "trials",   "layers",     "graph",         "delay",
      "model",    "fleet",      "trips",       "history",  "cln_counts", "regions",       "settings",
      "policies", "assignment", "exchange",    "comm_range", "predictions", "bounds",     "generalization",
      "output",   "threads"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) diag.add(key, "unknown key");
  }

  diag.guard("name", [&] { if (j.contains("name")) f.name = j.at("name").get<std::string>(); });
  diag.guard("experiment", [&] {
    if (!j.contains("experiment")) return;
    auto e = j.at("experiment").get<std::string>();
    if (e == "sweep") f.experiment = Experiment::sweep;
    else if (e == "single") f.experiment = Experiment::single;
    else if (e == "generalization") f.experiment = Experiment::generalization;
    else throw std::invalid_argument("expected sweep, single or generalization");
  });
  diag.guard("seed", [&] { if (j.contains("seed")) f.seed = j.at("seed").get<std::uint64_t>(); });
  diag.guard("trials", [&] {
    if (j.contains("trials")) f.trials = j.at("trials").get<int>();
    if (f.trials < 1) throw std::invalid_argument("must be >= 1");
  });
  diag.guard("layers", [&] {
    if (j.contains("layers")) f.layers = j.at("layers").get<std::vector<int>>();
    if (f.layers.empty()) throw std::invalid_argument("must list at least one layer count");
    for (int l : f.layers) {
      if (l < 1) throw std::invalid_argument("layer counts must be >= 1");
    }
  });
  diag.guard("graph", [&] {
    if (!j.contains("graph")) return;
    json g = j.at("graph");
    if (g.contains("road_network") && g.at("road_network").is_string()) {
      f.road_network = g.at("road_network").get<std::string>();
      if (f.road_network != "none" && f.road_network != "street_grid") {
        throw std::invalid_argument("road_network: expected none, street_grid or an explicit object");
      }
      g.erase("road_network");
    } else if (g.contains("road_network") && g.at("road_network").is_null()) {
      f.road_network = "none";
    } else if (g.contains("road_network")) {
      f.road_network = "explicit";
    }
    f.graph = graph_config_from_json(g);
  });
  diag.guard("delay", [&] { if (j.contains("delay")) f.delay = delay_model_from_json(j.at("delay")); });
  diag.guard("model", [&] {
    if (!j.contains("model")) return;
    const auto& m = j.at("model");
    f.model = model_config_from_json(m);
    f.model_dims_explicit = m.contains("input_dim") || m.contains("output_dim");
  });
  diag.guard("fleet", [&] {
    if (!j.contains("fleet")) return;
    if (j.at("fleet").contains("seed")) throw std::invalid_argument("seed: set the top-level seed instead");
    f.fleet = fleet_config_from_json(j.at("fleet"));
  });
  diag.guard("trips", [&] {
    if (!j.contains("trips")) return;
    const auto& t = j.at("trips");
    TripsSource src;
    for (const auto& [key, value] : t.items()) {
      static const std::set<std::string> keys = {"path", "slot", "slot_minutes", "m", "n", "cell_size", "idle_cap_minutes"};
      if (!keys.contains(key)) throw std::invalid_argument(key + ": unknown key");
    }
    if (!t.contains("path")) throw std::invalid_argument("path: required");
    src.path = t.at("path").get<std::string>();
    if (src.path.is_relative() && !base_dir.empty()) src.path = base_dir / src.path;
    if (t.contains("slot")) src.slot = t.at("slot").get<int>();
    if (t.contains("slot_minutes")) src.ingest.slot_minutes = t.at("slot_minutes").get<double>();
    if (t.contains("m")) src.ingest.m = t.at("m").get<int>();
    if (t.contains("n")) src.ingest.n = t.at("n").get<int>();
    if (t.contains("cell_size")) src.ingest.cell_size = t.at("cell_size").get<double>();
    if (t.contains("idle_cap_minutes")) src.ingest.idle_cap_minutes = t.at("idle_cap_minutes").get<double>();
    if (!(src.ingest.slot_minutes > 0.0)) throw std::invalid_argument("slot_minutes: must be > 0");
    if (!(src.ingest.cell_size > 0.0)) throw std::invalid_argument("cell_size: must be > 0");
    if (src.ingest.m < 1 || src.ingest.n < 1) throw std::invalid_argument("m, n: must be >= 1");
    f.trips = src;
  });
  if (f.fleet && f.trips) diag.add("trips", "give either fleet or trips, not both");
  if (!f.fleet && !f.trips) f.fleet = FleetGenConfig{};
  diag.guard("history", [&] {
    if (j.contains("history")) f.history = j.at("history").get<int>();
    if (f.history < 1) throw std::invalid_argument("must be >= 1");
  });
  diag.guard("cln_counts", [&] {
    if (j.contains("cln_counts")) f.cln_counts = j.at("cln_counts").get<std::vector<int>>();
    for (int c : f.cln_counts) {
      if (c < 1) throw std::invalid_argument("CLN counts must be >= 1");
    }
    if (f.cln_counts.empty()) throw std::invalid_argument("must list at least one CLN count");
  });
  diag.guard("regions", [&] { if (j.contains("regions")) f.regions = regions_from_json(j.at("regions")); });
  diag.guard("settings", [&] {
    if (!j.contains("settings")) return;
    f.settings.clear();
    for (const auto& s : j.at("settings")) f.settings.push_back(setting_from(s.get<std::string>()));
    if (f.settings.empty()) throw std::invalid_argument("must list at least one setting");
  });
  diag.guard("policies", [&] {
    if (!j.contains("policies")) return;
    f.policies.clear();
    for (const auto& s : j.at("policies")) f.policies.push_back(policy_from(s.get<std::string>()));
    if (f.policies.empty()) throw std::invalid_argument("must list at least one policy");
  });
  diag.guard("assignment", [&] {
    if (!j.contains("assignment")) return;
    const auto& a = j.at("assignment");
    for (const auto& [key, value] : a.items()) {
      if (key != "band_hops" && key != "multi_pass" && key != "include_cost") throw std::invalid_argument(key + ": unknown key");
    }
    if (a.contains("band_hops") && !a.at("band_hops").is_null()) {
      f.band_hops = a.at("band_hops").get<int>();
      if (*f.band_hops < 0) throw std::invalid_argument("band_hops: must be >= 0");
    }
    if (a.contains("multi_pass")) f.multi_pass = a.at("multi_pass").get<bool>();
    if (a.contains("include_cost")) f.include_assignment_cost = a.at("include_cost").get<bool>();
  });
  diag.guard("exchange", [&] {
    if (!j.contains("exchange")) return;
    auto e = j.at("exchange").get<std::string>();
    if (e == "adjacent") f.exchange = ExchangeMode::adjacent;
    else if (e == "all_pairs") f.exchange = ExchangeMode::all_pairs;
    else throw std::invalid_argument("expected adjacent or all_pairs");
  });
  diag.guard("comm_range", [&] {
    if (j.contains("comm_range")) f.comm_range = j.at("comm_range").get<double>();
    if (!(f.comm_range > 0.0)) throw std::invalid_argument("must be > 0");
  });
  diag.guard("predictions", [&] { if (j.contains("predictions")) f.predictions = j.at("predictions").get<bool>(); });
  diag.guard("bounds", [&] { if (j.contains("bounds")) f.bounds = j.at("bounds").get<bool>(); });
  diag.guard("generalization", [&] {
    if (!j.contains("generalization")) return;
    const auto& g = j.at("generalization");
    for (const auto& [key, value] : g.items()) {
      if (key != "weight_seeds" && key != "test_taxis") throw std::invalid_argument(key + ": unknown key");
    }
    if (g.contains("weight_seeds")) f.weight_seeds = g.at("weight_seeds").get<std::vector<std::uint64_t>>();
    if (g.contains("test_taxis")) f.test_taxis = g.at("test_taxis").get<int>();
    if (f.test_taxis < 1) throw std::invalid_argument("test_taxis: must be >= 1");
  });
  diag.guard("output", [&] { if (j.contains("output")) f.output = j.at("output").get<std::string>(); });
  diag.guard("threads", [&] {
    if (j.contains("threads")) f.threads = j.at("threads").get<int>();
    if (f.threads < 0) throw std::invalid_argument("must be >= 0");
  });

  // Cross-field checks.
  const int width = fleet_cell_width(f);
  if (!f.model_dims_explicit) {
    f.model.input_dim = width;
    f.model.output_dim = width;
  } else if (f.model.input_dim != width) {
    diag.add("model.input_dim", "must equal 2*m*n = " + std::to_string(width) + " for the configured vicinity grid");
  }
  if (f.experiment == Experiment::generalization && f.weight_seeds.empty()) {
    diag.add("generalization.weight_seeds", "must list at least one seed");
  }
  if (!f.regions.empty() && f.fleet) {
    Rect area{0.0, 0.0, f.fleet->width, f.fleet->height};
    for (auto& msg : tiling_diagnostics(f.regions, area)) diag.add("regions", msg.substr(msg.find(": ") + 2));
  }
  if (f.trips && !f.trips->path.empty() && !std::filesystem::exists(f.trips->path)) {
    diag.add("trips.path", "file not found: " + f.trips->path.string());
  }
  out.diagnostics = diag.take();
  return out;
}

json to_json(const ScenarioFile& f) {
  json j;
  j["name"] = f.name;
  j["experiment"] = to_string(f.experiment);
  j["seed"] = f.seed;
  j["trials"] = f.trials;
  j["layers"] = f.layers;
  j["graph"] = to_json(f.graph);
  if (f.road_network != "explicit") j["graph"]["road_network"] = f.road_network;
  j["delay"] = to_json(f.delay);
  j["model"] = to_json(f.model);
  if (f.fleet) {
    j["fleet"] = to_json(*f.fleet);
    j["fleet"].erase("seed");
  }
  if (f.trips) {
    j["trips"] = {{"path", f.trips->path.string()},
                  {"slot", f.trips->slot ? json(*f.trips->slot) : json(nullptr)},
                  {"slot_minutes", f.trips->ingest.slot_minutes},
                  {"m", f.trips->ingest.m},
                  {"n", f.trips->ingest.n},
                  {"cell_size", f.trips->ingest.cell_size},
                  {"idle_cap_minutes", f.trips->ingest.idle_cap_minutes}};
  }
  j["history"] = f.history;
  j["cln_counts"] = f.cln_counts;
  j["regions"] = to_json(std::span<const CLNRegion>(f.regions));
  json settings = json::array();
  for (auto s : f.settings) settings.push_back(to_string(s));
  j["settings"] = settings;
  json policies = json::array();
  for (auto p : f.policies) policies.push_back(to_string(p));
  j["policies"] = policies;
  j["assignment"] = {{"band_hops", f.band_hops ? json(*f.band_hops) : json("2L")},
                     {"multi_pass", f.multi_pass},
                     {"include_cost", f.include_assignment_cost}};
  j["exchange"] = f.exchange == ExchangeMode::adjacent ? "adjacent" : "all_pairs";
  j["comm_range"] = f.comm_range;
  j["predictions"] = f.predictions;
  j["bounds"] = f.bounds;
  j["generalization"] = {{"weight_seeds", f.weight_seeds}, {"test_taxis", f.test_taxis}};
  j["output"] = f.output;
  j["threads"] = f.threads;
  return j;
}

std::string provenance_hash(const json& config) {
  const std::string body = config.dump();
  const std::string object = "blob " + std::to_string(body.size()) + '\0' + body;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(object.data(), object.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

Scenario build_trial(const ScenarioFile& file, int trial) { return make_trial(file, trial).scenario; }

void write_tensor(const Tensor3& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write("SDT1", 4);
  for (std::uint64_t d : {static_cast<std::uint64_t>(t.dim0()), static_cast<std::uint64_t>(t.dim1()),
                          static_cast<std::uint64_t>(t.dim2())}) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(d >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  out.write(reinterpret_cast<const char*>(t.values().data()), static_cast<std::streamsize>(t.values().size() * sizeof(double)));
}

Tensor3 read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SDT1") throw std::runtime_error(path.string() + ": not a tensor file");
  std::uint64_t dims[3];
  for (auto& d : dims) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    d = 0;
    for (int k = 0; k < 8; ++k) d |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  }
  Tensor3 t(dims[0], dims[1], dims[2]);
  in.read(reinterpret_cast<char*>(t.values().data()), static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated tensor");
  return t;
}

RunArtifacts run_scenario(const ScenarioFile& f, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunArtifacts art;
  const json config = to_json(f);
  json summary;
  summary["name"] = f.name;
  summary["config"] = config;
  summary["provenance"] = {{"config_sha1", provenance_hash(config)}, {"tool", "sdgnn"}};
  {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    summary["generated_at"] = buf;
  }

  if (f.experiment == Experiment::generalization) {
    TrialData d = make_trial(f, 0, f.test_taxis);
    std::vector<Metrics> results(f.weight_seeds.size());
    parallel_for(f.weight_seeds.size(), f.threads, [&](std::size_t k) {
      ModelConfig cfg = d.scenario.model;
      cfg.weight_seed = f.weight_seeds[k];
      Tensor3 pred = forward(d.scenario.window, cfg, init_weights(cfg));
      results[k] = metrics(d.truth.values(), pred.values());
    });
    std::string csv = "sweep_index,weight_seed,test_nodes,rmse,mae,mape_percent,mape_excluded\n";
    json rows = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto& m = results[k];
      csv += std::to_string(k) + ',' + std::to_string(f.weight_seeds[k]) + ',' + std::to_string(d.scenario.window.back().size()) +
             ',' + fmt(m.rmse) + ',' + fmt(m.mae) + ',' + fmt(m.mape) + ',' + std::to_string(m.mape_excluded) + '\n';
      rows.push_back({{"weight_seed", f.weight_seeds[k]}, {"rmse", m.rmse}, {"mae", m.mae}, {"mape", m.mape},
                      {"mape_excluded", m.mape_excluded}});
    }
    write_text(out_dir / "metrics.csv", csv, art);
    summary["metrics"] = rows;
    summary["test_nodes"] = d.scenario.window.back().size();
  } else if (f.experiment == Experiment::single) {
    TrialData d = make_trial(f, 0);
    Scenario s = d.scenario;
    s.model.gnn_layers = f.layers.front();
    s.adaptive.band_hops = f.band_hops ? *f.band_hops : 2 * s.model.gnn_layers;
    if (f.predictions) s.weights = init_weights(s.model);
    std::string csv = delay_header();
    json results = json::object();
    std::optional<Tensor3> reference;
    for (Setting setting : f.settings) {
      std::vector<std::pair<std::string, Scenario>> variants;
      if (setting == Setting::semidecentralized) {
        for (auto p : f.policies) {
          Scenario v = s;
          v.policy = p;
          variants.emplace_back("semi_" + to_string(p) + "_" + std::to_string(s.regions.size()), std::move(v));
        }
      } else {
        variants.emplace_back(to_string(setting), s);
      }
      for (auto& [curve, v] : variants) {
        InferenceReport r = run(v, setting);
        SweepRow row{curve, v.model.gnn_layers, 0, r.total_ms, r.breakdown,
                     r.assignment ? r.assignment->inter_cln_edges.size() : 0};
        csv += delay_line(row);
        json res = {{"total_ms", r.total_ms}};
        if (setting == Setting::decentralized) {
          res["max_node_ms"] = r.max_node_ms;
          res["truncated_nodes"] = r.truncated_nodes.size();
        }
        if (setting == Setting::semidecentralized) {
          res["boundary_fraction"] = r.boundary_fraction;
          res["inter_cln_messages_per_layer"] = r.inter_cln_messages_per_layer;
          res["dropped_dependency_nodes"] = r.dropped_dependency_nodes.size();
        }
        if (f.predictions) {
          Metrics m = metrics(d.truth.values(), r.predictions.values());
          res["metrics"] = {{"rmse", m.rmse}, {"mae", m.mae}, {"mape", m.mape}, {"mape_excluded", m.mape_excluded}};
          if (setting == Setting::centralized) reference = r.predictions;
        }
        results[curve] = res;
      }
    }
    write_text(out_dir / "delays.csv", csv, art);
    if (f.bounds) {
      BoundsRow b = bounds_for(filter_edges(s.window.back(), s.comm_range), s.model.gnn_layers, s.delay);
      write_text(out_dir / "bounds.csv", bounds_header() + bounds_line(b), art);
    }
    summary["results"] = results;
    if (f.predictions) {
      if (!reference) reference = forward(s.window, s.model, s.weights);
      write_tensor(*reference, out_dir / "predictions.bin");
      art.written.push_back(out_dir / "predictions.bin");
    }
  } else {
    SweepOptions opt;
    opt.layers = f.layers;
    opt.trials = f.trials;
    opt.cln_grids = f.cln_counts;
    opt.bounds = f.bounds;
    opt.threads = f.threads;
    opt.predictions = false;
    opt.band_hops = f.band_hops;
    SweepReport rep = compare_settings([&](int trial) { return make_trial(f, trial).scenario; }, opt);
    std::string csv = delay_header();
    std::map<std::string, std::map<int, std::pair<double, int>>> means;
    for (const auto& r : rep.delays) {
      csv += delay_line(r);
      auto& m = means[r.curve][r.layers];
      m.first += r.total_ms;
      m.second += 1;
    }
    write_text(out_dir / "delays.csv", csv, art);
    json table = json::object();
    for (const auto& [curve, by_l] : means) {
      for (const auto& [L, m] : by_l) table[curve][std::to_string(L)] = m.first / m.second;
    }
    summary["mean_delay_ms"] = table;
    if (f.bounds) {
      std::string b = bounds_header();
      std::size_t violations = 0, roots = 0;
      for (const auto& row : rep.bounds) {
        b += bounds_line(row);
        violations += row.violations;
        roots += row.roots;
      }
      write_text(out_dir / "bounds.csv", b, art);
      summary["bounds"] = {{"roots_checked", roots}, {"violations", violations}};
    }
    if (f.predictions) {
      Scenario s = make_trial(f, 0).scenario;
      s.model.gnn_layers = f.layers.front();
      s.weights = init_weights(s.model);
      write_tensor(forward(s.window, s.model, s.weights), out_dir / "predictions.bin");
      art.written.push_back(out_dir / "predictions.bin");
    }
  }

  if (f.experiment != Experiment::generalization) {
    write_text(out_dir / "assignment.json", assignments_json(f).dump(2) + "\n", art);
  }
  art.summary = summary;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n", art);
  return art;
}

}  // namespace sdgnn
