#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdgnn/geometry.hpp"
#include "sdgnn/hin.hpp"
#include "sdgnn/matrix.hpp"

namespace sdgnn {

/// Regular cell grid over the city frame. Cell (ix, iy) covers
/// [x0 + ix*s, x0 + (ix+1)*s) x [y0 + iy*s, y0 + (iy+1)*s).
struct CityGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double cell_size = 100.0;
  int nx = 0;
  int ny = 0;

  /// Clamped to the grid.
  GridCell cell_of(Point p) const;
  Rect area() const { return {x0, y0, x0 + nx * cell_size, y0 + ny * cell_size}; }
};

struct FleetSlot {
  std::vector<TaxiNode> taxis;  ///< features left empty; see vicinity_features
  Matrix demand;                ///< ny x nx pickup counts
  Matrix supply;                ///< ny x nx vacant-taxi counts
  Matrix dropoffs;              ///< ny x nx
};

struct FleetSeries {
  CityGrid grid;
  int m = 3;
  int n = 3;
  std::vector<FleetSlot> slots;
};

/// m x n demand counts around the cell holding `p`, then the m x n supply
/// counts; cells off the grid count as zero.
std::vector<double> vicinity_features(const FleetSeries& series, int slot, Point p);

enum class Mobility { fixed, random_waypoint };

struct Hotspot {
  Point center;
  double rate = 1.0;     ///< expected pickups per cell per slot at the centre
  double sigma = 150.0;  ///< meters
};

struct FleetGenConfig {
  int taxis = 255;
  double width = 1000.0;
  double height = 1000.0;
  Mobility mobility = Mobility::fixed;
  double speed_mps = 8.0;
  double slot_minutes = 15.0;
  double cell_size = 100.0;
  int m = 3;
  int n = 3;
  double base_intensity = 0.2;  ///< expected pickups per cell per slot everywhere
  std::vector<Hotspot> hotspots = {{{300.0, 300.0}, 2.0, 150.0}, {{700.0, 650.0}, 3.0, 120.0}};
  double vacancy = 0.5;  ///< chance a taxi is vacant in a slot
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const FleetGenConfig& config);
FleetGenConfig fleet_config_from_json(const nlohmann::json& j);

/// Seeded synthetic fleet over `slots` time slots; taxi ids 0..N-1.
FleetSeries generate(const FleetGenConfig& config, int slots);

/// History snapshots for slots t-P+1..t over the taxis present at slot t, with
/// truth features for slots t+1..t+Q, shape (Q, N, 2mn). A taxi absent from a
/// slot keeps its slot-t position for that slot.
struct SnapshotWindow {
  std::int64_t t = 0;
  std::vector<HinSnapshot> history;
  Tensor3 truth;
  std::vector<NodeId> ids;
};

SnapshotWindow make_window(const FleetSeries& series, int t, int history, int horizon, const GraphConfig& config);

struct TripIngestConfig {
  double slot_minutes = 15.0;
  int m = 3;
  int n = 3;
  double cell_size = 100.0;
  double idle_cap_minutes = 30.0;
};

struct TripIngestResult {
  FleetSeries series;
  std::size_t rows = 0;  ///< data rows seen, header excluded
  std::size_t valid = 0;
  std::size_t malformed = 0;
  std::vector<std::string> diagnostics;
  std::int64_t start_epoch = 0;  ///< seconds, start of slot 0
  double origin_lon = 0.0;
  double origin_lat = 0.0;
};

/// Trip-record CSV to slotted demand, dropoff and supply grids plus one taxi
/// per in-progress trip and slot.
TripIngestResult ingest_trips(const std::filesystem::path& csv, const TripIngestConfig& config);

/// "YYYY-MM-DD HH:MM:SS" (or with a T separator) to seconds since the epoch, UTC.
std::int64_t parse_timestamp(const std::string& text);

}  // namespace sdgnn
