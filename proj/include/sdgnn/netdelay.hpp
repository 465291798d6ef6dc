#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "sdgnn/compgraph.hpp"
#include "sdgnn/delay_model.hpp"
#include "sdgnn/hin.hpp"
#include "sdgnn/partition.hpp"

namespace sdgnn {

struct HopTerm {
  int hop = 0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Closed-form lower and upper limits on decentralized inference delay.
struct DelayBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<HopTerm> per_hop_terms;
};

/// sum_l (L-l+1) * ((t_s+t_r) [l d_i + max_x d_x] + (l+1) t_p), with the hop
/// degree sum in place of the max for the upper limit. With t_s == t_r the
/// link factor is the usual 2 t_r.
DelayBounds delay_bounds(const ComputationalGraph& cg, const DelayModel& model);

enum class EventKind { exchange, process };

struct ScheduleEvent {
  double start = 0.0;
  double end = 0.0;
  NodeId src = 0;
  NodeId dst = 0;  ///< equals src for processing
  int hop = 0;     ///< hop level whose messages are being moved or processed
  int round = 0;
  std::int64_t payload = 0;
  EventKind kind = EventKind::exchange;
};

struct ScheduleTrace {
  std::vector<ScheduleEvent> events;  ///< ordered by (start, end, src, dst)
  double makespan = 0.0;

  /// True when no node takes part in two overlapping events.
  bool feasible() const;
};

struct SimulationResult {
  double delay_ms = 0.0;
  ScheduleTrace trace;
};

/// Half-duplex message-passing schedule for one root. Hop-l messages are
/// gathered round by round (L-l+1 times each), relayed inward over l links
/// with a processing step per level, and each link exchange costs t_s + t_r.
SimulationResult simulate_decentralized(const ComputationalGraph& cg, const DelayModel& model);

struct CentralizedDelay {
  double total_ms = 0.0;
  LatencyBreakdown breakdown;  ///< uplink, compute, downlink
  std::size_t messages_per_layer = 0;
};

/// Serialized uplink on one base-station channel, L layers of server compute,
/// serialized downlink.
CentralizedDelay centralized_delay(const HinSnapshot& snapshot, int layers, const DelayModel& model);

struct SemiDelay {
  double total_ms = 0.0;
  double slowest_cln_ms = 0.0;
  int slowest_cln = -1;
  double assignment_ms = 0.0;
  std::map<int, LatencyBreakdown> per_cln;  ///< uplink, compute, inter_cln, downlink
  LatencyBreakdown breakdown;               ///< slowest CLN plus optional assignment
};

SemiDelay semidecentralized_delay(const Assignment& assignment, const HinSnapshot& snapshot, int layers,
                                  const DelayModel& model, bool include_assignment_cost);

struct CostModelInputs {
  double N = 255;
  double K = 10;
  double P = 1;
  double Q = 1;
  double m = 3;
  double n = 3;
  double L = 3;
  double gamma = 0.0;
  DelayModel delay;

  void validate() const;
};

struct AnalyticCosts {
  double existing_region_cost = 0.0;
  double per_cloudlet_cost = 0.0;
  double messaging_term = 0.0;   ///< mnPQ t_c N/K
  double processing_term = 0.0;  ///< mnPQ (N/K) L tau
  double boundary_term = 0.0;    ///< gamma (N/K) L^2 t_CLN
};

/// Per-region cost of the ad-hoc approach against the per-cloudlet cost, unit
/// leading constants.
AnalyticCosts analytic_costs(const CostModelInputs& inputs);

}  // namespace sdgnn
