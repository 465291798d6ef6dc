#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sdgnn {

/// Radio and compute latency constants, all in milliseconds.
struct DelayModel {
  double t_r = 18.65;  ///< per-message ad-hoc receive delay (relay processing + link)
  double t_s = 18.65;  ///< per-message ad-hoc send delay
  double t_p = 10.0;   ///< GNN layer processing per level on a taxi device
  double adhoc_source_processing = 16.55;
  double adhoc_relay_processing = 11.65;
  double adhoc_link_transmission = 7.0;
  double its_g5_packet_delay = 3.3;
  double cloudlet_slowdown = 10.0;  ///< cloudlet compute time relative to the cloud server
  double device_slowdown = 100.0;   ///< taxi compute time relative to the cloud server
  double t_cln = 1.0;               ///< inter-cloudlet packet delay
  double t_c = 0.001;               ///< message passing by computation, per message
  double tau = 0.1;                 ///< layer processing per node-message on the server
  /// Evaluate the hop bounds with the processing term multiplied by the link
  /// factor instead of added once per repetition.
  bool processing_in_link_bracket = false;

  /// Extra cost of the first hop of a message over a relay hop.
  double source_surcharge() const { return adhoc_source_processing - adhoc_relay_processing; }
  double relay_hop() const { return adhoc_relay_processing + adhoc_link_transmission; }

  void validate() const;
};

nlohmann::json to_json(const DelayModel& model);
/// Missing keys keep their defaults; unknown keys are rejected.
DelayModel delay_model_from_json(const nlohmann::json& j);

/// Named latency components. The total is the in-order sum of the components.
class LatencyBreakdown {
 public:
  void add(std::string name, double ms) { items_.emplace_back(std::move(name), ms); }
  const std::vector<std::pair<std::string, double>>& items() const { return items_; }
  double total() const;
  /// 0 when the component is absent.
  double get(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, double>> items_;
};

}  // namespace sdgnn
