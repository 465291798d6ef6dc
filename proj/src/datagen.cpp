#include "sdgnn/datagen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sdgnn {

namespace {

using nlohmann::json;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Point random_point(std::mt19937_64& rng, double w, double h) { return {unit_uniform(rng) * w, unit_uniform(rng) * h}; }

constexpr double kEarthRadius = 6371000.0;

struct Trip {
  std::int64_t pickup = 0;
  std::int64_t dropoff = 0;
  double plon = 0, plat = 0, dlon = 0, dlat = 0;
  Point p, d;
  std::size_t row = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r' && ch != '"') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(v);
}

}  // namespace

GridCell CityGrid::cell_of(Point p) const {
  int ix = static_cast<int>(std::floor((p.x - x0) / cell_size));
  int iy = static_cast<int>(std::floor((p.y - y0) / cell_size));
  return {std::clamp(ix, 0, std::max(0, nx - 1)), std::clamp(iy, 0, std::max(0, ny - 1))};
}

std::vector<double> vicinity_features(const FleetSeries& series, int slot, Point p) {
  const auto& s = series.slots.at(static_cast<std::size_t>(slot));
  const GridCell c = series.grid.cell_of(p);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * series.m * series.n));
  for (const Matrix* grid : {&s.demand, &s.supply}) {
    for (int dy = -(series.n / 2); dy < series.n - series.n / 2; ++dy) {
      for (int dx = -(series.m / 2); dx < series.m - series.m / 2; ++dx) {
        int x = c.ix + dx, y = c.iy + dy;
        bool inside = x >= 0 && y >= 0 && x < series.grid.nx && y < series.grid.ny;
        out.push_back(inside ? (*grid)(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) : 0.0);
      }
    }
  }
  return out;
}

void FleetGenConfig::validate() const {
  if (taxis < 1) throw std::invalid_argument("fleet.taxis must be >= 1");
  if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("fleet.width and fleet.height must be > 0");
  if (!(speed_mps >= 0.0)) throw std::invalid_argument("fleet.speed_mps must be >= 0");
  if (!(slot_minutes > 0.0)) throw std::invalid_argument("fleet.slot_minutes must be > 0");
  if (!(cell_size > 0.0)) throw std::invalid_argument("fleet.cell_size must be > 0");
  if (m < 1 || n < 1) throw std::invalid_argument("fleet.m and fleet.n must be >= 1");
  if (!(base_intensity >= 0.0)) throw std::invalid_argument("fleet.base_intensity must be >= 0");
  if (!(vacancy >= 0.0 && vacancy <= 1.0)) throw std::invalid_argument("fleet.vacancy must lie in [0, 1]");
  for (const auto& h : hotspots) {
    if (!(h.rate >= 0.0) || !(h.sigma > 0.0)) throw std::invalid_argument("fleet.hotspots: rate >= 0 and sigma > 0 required");
  }
}

json to_json(const FleetGenConfig& c) {
  json hs = json::array();
  for (const auto& h : c.hotspots) hs.push_back({{"center", {h.center.x, h.center.y}}, {"rate", h.rate}, {"sigma", h.sigma}});
  return {{"taxis", c.taxis},
          {"width", c.width},
          {"height", c.height},
          {"mobility", c.mobility == Mobility::fixed ? "static" : "random_waypoint"},
          {"speed_mps", c.speed_mps},
          {"slot_minutes", c.slot_minutes},
          {"cell_size", c.cell_size},
          {"m", c.m},
          {"n", c.n},
          {"base_intensity", c.base_intensity},
          {"hotspots", hs},
          {"vacancy", c.vacancy},
          {"seed", c.seed}};
}

FleetGenConfig fleet_config_from_json(const json& j) {
  FleetGenConfig c;
  const auto defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("fleet." + key + ": unknown key");
  }
  if (j.contains("taxis")) c.taxis = j.at("taxis").get<int>();
  if (j.contains("width")) c.width = j.at("width").get<double>();
  if (j.contains("height")) c.height = j.at("height").get<double>();
  if (j.contains("mobility")) {
    auto mob = j.at("mobility").get<std::string>();
    if (mob == "static") c.mobility = Mobility::fixed;
    else if (mob == "random_waypoint") c.mobility = Mobility::random_waypoint;
    else throw std::invalid_argument("fleet.mobility: expected static or random_waypoint");
  }
  if (j.contains("speed_mps")) c.speed_mps = j.at("speed_mps").get<double>();
  if (j.contains("slot_minutes")) c.slot_minutes = j.at("slot_minutes").get<double>();
  if (j.contains("cell_size")) c.cell_size = j.at("cell_size").get<double>();
  if (j.contains("m")) c.m = j.at("m").get<int>();
  if (j.contains("n")) c.n = j.at("n").get<int>();
  if (j.contains("base_intensity")) c.base_intensity = j.at("base_intensity").get<double>();
  if (j.contains("hotspots")) {
    c.hotspots.clear();
    for (const auto& h : j.at("hotspots")) {
      for (const auto& [key, value] : h.items()) {
        if (key != "center" && key != "rate" && key != "sigma") throw std::invalid_argument("fleet.hotspots." + key + ": unknown key");
      }
      Hotspot hs;
      const auto& ctr = h.at("center");
      hs.center = {ctr.at(0).get<double>(), ctr.at(1).get<double>()};
      if (h.contains("rate")) hs.rate = h.at("rate").get<double>();
      if (h.contains("sigma")) hs.sigma = h.at("sigma").get<double>();
      c.hotspots.push_back(hs);
    }
  }
  if (j.contains("vacancy")) c.vacancy = j.at("vacancy").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

FleetSeries generate(const FleetGenConfig& config, int slots) {
  config.validate();
  if (slots < 1) throw std::invalid_argument("slots must be >= 1");
  std::mt19937_64 rng(config.seed);
  FleetSeries series;
  series.m = config.m;
  series.n = config.n;
  series.grid.cell_size = config.cell_size;
  series.grid.nx = static_cast<int>(std::ceil(config.width / config.cell_size));
  series.grid.ny = static_cast<int>(std::ceil(config.height / config.cell_size));
  const auto nx = static_cast<std::size_t>(series.grid.nx);
  const auto ny = static_cast<std::size_t>(series.grid.ny);

  Matrix intensity(ny, nx);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      Point c{(static_cast<double>(x) + 0.5) * config.cell_size, (static_cast<double>(y) + 0.5) * config.cell_size};
      double lambda = config.base_intensity;
      for (const auto& h : config.hotspots) {
        double d = distance(c, h.center);
        lambda += h.rate * std::exp(-d * d / (2.0 * h.sigma * h.sigma));
      }
      intensity(y, x) = lambda;
    }
  }

  std::vector<Point> pos(static_cast<std::size_t>(config.taxis)), goal(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    pos[i] = random_point(rng, config.width, config.height);
    goal[i] = random_point(rng, config.width, config.height);
  }
  const double step = config.speed_mps * config.slot_minutes * 60.0;

  for (int s = 0; s < slots; ++s) {
    if (s > 0 && config.mobility == Mobility::random_waypoint) {
      for (std::size_t i = 0; i < pos.size(); ++i) {
        double left = step;
        while (left > 0.0) {
          double d = distance(pos[i], goal[i]);
          if (d > left) {
            pos[i] = {pos[i].x + (goal[i].x - pos[i].x) * left / d, pos[i].y + (goal[i].y - pos[i].y) * left / d};
            left = 0.0;
          } else {
            pos[i] = goal[i];
            left -= d;
            goal[i] = random_point(rng, config.width, config.height);
            if (d == 0.0 && left == step) break;
          }
        }
      }
    }
    FleetSlot slot;
    slot.demand = Matrix(ny, nx);
    slot.supply = Matrix(ny, nx);
    slot.dropoffs = Matrix(ny, nx);
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        double lambda = intensity(y, x);
        if (lambda > 0.0) slot.demand(y, x) = static_cast<double>(std::poisson_distribution<int>(lambda)(rng));
      }
    }
    for (std::size_t i = 0; i < pos.size(); ++i) {
      TaxiNode t;
      t.id = static_cast<NodeId>(i);
      t.position = pos[i];
      t.destination = goal[i];
      slot.taxis.push_back(t);
      if (unit_uniform(rng) < config.vacancy) {
        GridCell c = series.grid.cell_of(pos[i]);
        slot.supply(static_cast<std::size_t>(c.iy), static_cast<std::size_t>(c.ix)) += 1.0;
      }
    }
    series.slots.push_back(std::move(slot));
  }
  return series;
}

SnapshotWindow make_window(const FleetSeries& series, int t, int history, int horizon, const GraphConfig& config) {
  if (history < 1 || horizon < 1) throw std::invalid_argument("history and horizon must be >= 1");
  const int total = static_cast<int>(series.slots.size());
  if (t - history + 1 < 0 || t + horizon >= total) {
    throw std::invalid_argument("window around slot " + std::to_string(t) + " does not fit in " + std::to_string(total) + " slots");
  }
  SnapshotWindow w;
  w.t = t;
  const auto& anchor = series.slots[static_cast<std::size_t>(t)].taxis;
  std::vector<std::map<NodeId, const TaxiNode*>> lookup(static_cast<std::size_t>(total));
  for (int s = 0; s < total; ++s) {
    for (const auto& taxi : series.slots[static_cast<std::size_t>(s)].taxis) lookup[static_cast<std::size_t>(s)][taxi.id] = &taxi;
  }
  auto at = [&](int s, const TaxiNode& base) -> const TaxiNode& {
    auto it = lookup[static_cast<std::size_t>(s)].find(base.id);
    return it == lookup[static_cast<std::size_t>(s)].end() ? base : *it->second;
  };
  for (const auto& taxi : anchor) w.ids.push_back(taxi.id);

  for (int s = t - history + 1; s <= t; ++s) {
    std::vector<TaxiNode> nodes;
    for (const auto& base : anchor) {
      TaxiNode node = at(s, base);
      node.features = vicinity_features(series, s, node.position);
      nodes.push_back(std::move(node));
    }
    w.history.push_back(build_snapshot(std::move(nodes), config, s));
  }
  const auto width = static_cast<std::size_t>(2 * series.m * series.n);
  w.truth = Tensor3(static_cast<std::size_t>(horizon), anchor.size(), width);
  for (int q = 1; q <= horizon; ++q) {
    for (std::size_t i = 0; i < anchor.size(); ++i) {
      auto f = vicinity_features(series, t + q, at(t + q, anchor[i]).position);
      for (std::size_t k = 0; k < width; ++k) w.truth(static_cast<std::size_t>(q) - 1, i, k) = f[k];
    }
  }
  return w;
}

std::int64_t parse_timestamp(const std::string& text) {
  int y, mo, d, h, mi, s;
  char sep;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s) != 7 || (sep != ' ' && sep != 'T')) {
    throw std::invalid_argument("bad timestamp '" + text + "'");
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    throw std::invalid_argument("bad timestamp '" + text + "'");
  }
  auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s;
}

TripIngestResult ingest_trips(const std::filesystem::path& csv, const TripIngestConfig& config) {
  if (!(config.slot_minutes > 0.0) || !(config.cell_size > 0.0) || config.m < 1 || config.n < 1 ||
      !(config.idle_cap_minutes >= 0.0)) {
    throw std::invalid_argument("invalid trip ingestion config");
  }
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot open " + csv.string());

  TripIngestResult result;
  result.series.m = config.m;
  result.series.n = config.n;
  result.series.grid.cell_size = config.cell_size;

  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
    result.diagnostics.push_back("no rows");
    return result;
  }
  const auto header = split_csv(line);
  const char* required[] = {"pickup_datetime",  "dropoff_datetime", "pickup_longitude", "pickup_latitude",
                            "dropoff_longitude", "dropoff_latitude", "trip_distance"};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    col[name] = i;
  }
  std::string missing;
  for (const char* r : required) {
    if (!col.contains(r)) missing += std::string(missing.empty() ? "" : ", ") + r;
  }
  if (!missing.empty()) throw std::runtime_error(csv.string() + ": header is missing columns: " + missing);

  std::vector<Trip> trips;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      --row;
      continue;
    }
    ++result.rows;
    auto fields = split_csv(line);
    auto bad = [&](const std::string& why) {
      ++result.malformed;
      if (result.diagnostics.size() < 20) result.diagnostics.push_back("row " + std::to_string(row) + ": " + why);
    };
    if (fields.size() < header.size()) {
      bad("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    Trip t;
    t.row = row;
    double dist;
    try {
      t.pickup = parse_timestamp(fields[col["pickup_datetime"]]);
      t.dropoff = parse_timestamp(fields[col["dropoff_datetime"]]);
    } catch (const std::invalid_argument& e) {
      bad(e.what());
      continue;
    }
    if (!parse_double(fields[col["pickup_longitude"]], t.plon) || !parse_double(fields[col["pickup_latitude"]], t.plat) ||
        !parse_double(fields[col["dropoff_longitude"]], t.dlon) || !parse_double(fields[col["dropoff_latitude"]], t.dlat) ||
        !parse_double(fields[col["trip_distance"]], dist)) {
      bad("unparseable number");
      continue;
    }
    auto valid_coord = [](double lon, double lat) {
      return lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0 && !(lon == 0.0 && lat == 0.0);
    };
    if (!valid_coord(t.plon, t.plat) || !valid_coord(t.dlon, t.dlat)) {
      bad("coordinate out of range");
      continue;
    }
    if (t.dropoff < t.pickup) {
      bad("dropoff before pickup");
      continue;
    }
    if (dist < 0.0) {
      bad("negative trip distance");
      continue;
    }
    trips.push_back(t);
  }
  result.valid = trips.size();
  if (trips.empty()) {
    if (result.rows == 0) result.diagnostics.push_back("no rows");
    return result;
  }

  double lon0 = 0.0, lat0 = 0.0;
  for (const auto& t : trips) {
    lon0 += t.plon + t.dlon;
    lat0 += t.plat + t.dlat;
  }
  lon0 /= 2.0 * static_cast<double>(trips.size());
  lat0 /= 2.0 * static_cast<double>(trips.size());
  result.origin_lon = lon0;
  result.origin_lat = lat0;
  const double rad = std::numbers::pi / 180.0;
  auto project = [&](double lon, double lat) {
    return Point{kEarthRadius * (lon - lon0) * rad * std::cos(lat0 * rad), kEarthRadius * (lat - lat0) * rad};
  };
  double minx = 0, miny = 0, maxx = 0, maxy = 0;
  bool first = true;
  for (auto& t : trips) {
    t.p = project(t.plon, t.plat);
    t.d = project(t.dlon, t.dlat);
    for (Point q : {t.p, t.d}) {
      if (first) {
        minx = maxx = q.x;
        miny = maxy = q.y;
        first = false;
      }
      minx = std::min(minx, q.x);
      maxx = std::max(maxx, q.x);
      miny = std::min(miny, q.y);
      maxy = std::max(maxy, q.y);
    }
  }
  auto& grid = result.series.grid;
  grid.x0 = std::floor(minx / config.cell_size) * config.cell_size;
  grid.y0 = std::floor(miny / config.cell_size) * config.cell_size;
  grid.nx = static_cast<int>(std::floor((maxx - grid.x0) / config.cell_size)) + 1;
  grid.ny = static_cast<int>(std::floor((maxy - grid.y0) / config.cell_size)) + 1;

  const auto slot_len = static_cast<std::int64_t>(std::llround(config.slot_minutes * 60.0));
  const auto cap = static_cast<std::int64_t>(std::llround(config.idle_cap_minutes * 60.0));
  auto floor_div = [](std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); };
  std::int64_t first_pickup = trips.front().pickup;
  std::int64_t last = 0;
  for (const auto& t : trips) {
    first_pickup = std::min(first_pickup, t.pickup);
    last = std::max(last, t.dropoff + (cap > 0 ? cap - 1 : 0));
  }
  result.start_epoch = floor_div(first_pickup, slot_len) * slot_len;
  auto slot_of = [&](std::int64_t ts) { return static_cast<int>(floor_div(ts - result.start_epoch, slot_len)); };
  const int slots = slot_of(last) + 1;

  const auto nx = static_cast<std::size_t>(grid.nx), ny = static_cast<std::size_t>(grid.ny);
  result.series.slots.resize(static_cast<std::size_t>(slots));
  for (auto& s : result.series.slots) {
    s.demand = Matrix(ny, nx);
    s.supply = Matrix(ny, nx);
    s.dropoffs = Matrix(ny, nx);
  }
  auto bump = [&](Matrix& m, Point p) {
    GridCell c = grid.cell_of(p);
    m(static_cast<std::size_t>(c.iy), static_cast<std::size_t>(c.ix)) += 1.0;
  };
  for (std::size_t k = 0; k < trips.size(); ++k) {
    const auto& t = trips[k];
    bump(result.series.slots[static_cast<std::size_t>(slot_of(t.pickup))].demand, t.p);
    bump(result.series.slots[static_cast<std::size_t>(slot_of(t.dropoff))].dropoffs, t.d);
    if (cap > 0) {
      for (int s = slot_of(t.dropoff); s <= slot_of(t.dropoff + cap - 1); ++s) {
        bump(result.series.slots[static_cast<std::size_t>(s)].supply, t.d);
      }
    }
    // One taxi per slot the trip overlaps, placed along the straight line at
    // the slot midpoint.
    for (int s = slot_of(t.pickup); s <= slot_of(t.dropoff); ++s) {
      double mid = static_cast<double>(result.start_epoch + s * slot_len) + 0.5 * static_cast<double>(slot_len);
      double span = static_cast<double>(t.dropoff - t.pickup);
      double f = span > 0.0 ? std::clamp((mid - static_cast<double>(t.pickup)) / span, 0.0, 1.0) : 1.0;
      TaxiNode node;
      node.id = static_cast<NodeId>(t.row);
      node.position = {t.p.x + f * (t.d.x - t.p.x), t.p.y + f * (t.d.y - t.p.y)};
      node.destination = t.d;
      result.series.slots[static_cast<std::size_t>(s)].taxis.push_back(node);
    }
  }
  return result;
}

}  // namespace sdgnn
