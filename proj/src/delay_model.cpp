#include "sdgnn/delay_model.hpp"

#include <cmath>
#include <stdexcept>

namespace sdgnn {

void DelayModel::validate() const {
  const std::pair<const char*, double> delays[] = {
      {"t_r", t_r},
      {"t_s", t_s},
      {"t_p", t_p},
      {"adhoc_source_processing", adhoc_source_processing},
      {"adhoc_relay_processing", adhoc_relay_processing},
      {"adhoc_link_transmission", adhoc_link_transmission},
      {"its_g5_packet_delay", its_g5_packet_delay},
      {"t_cln", t_cln},
      {"t_c", t_c},
      {"tau", tau},
  };
  for (auto [name, v] : delays) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("delay.") + name + " must be >= 0");
  }
  if (!(cloudlet_slowdown >= 1.0)) throw std::invalid_argument("delay.cloudlet_slowdown must be >= 1");
  if (!(device_slowdown >= 1.0)) throw std::invalid_argument("delay.device_slowdown must be >= 1");
  if (adhoc_source_processing < adhoc_relay_processing) {
    throw std::invalid_argument("delay.adhoc_source_processing must be >= adhoc_relay_processing");
  }
}

nlohmann::json to_json(const DelayModel& m) {
  return {
      {"t_r", m.t_r},
      {"t_s", m.t_s},
      {"t_p", m.t_p},
      {"adhoc_source_processing", m.adhoc_source_processing},
      {"adhoc_relay_processing", m.adhoc_relay_processing},
      {"adhoc_link_transmission", m.adhoc_link_transmission},
      {"its_g5_packet_delay", m.its_g5_packet_delay},
      {"cloudlet_slowdown", m.cloudlet_slowdown},
      {"device_slowdown", m.device_slowdown},
      {"t_cln", m.t_cln},
      {"t_c", m.t_c},
      {"tau", m.tau},
      {"processing_in_link_bracket", m.processing_in_link_bracket},
  };
}

DelayModel delay_model_from_json(const nlohmann::json& j) {
  DelayModel m;
  const auto defaults = to_json(m);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("delay." + key + ": unknown key");
  }
  auto read = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  read("t_r", m.t_r);
  read("t_s", m.t_s);
  read("t_p", m.t_p);
  read("adhoc_source_processing", m.adhoc_source_processing);
  read("adhoc_relay_processing", m.adhoc_relay_processing);
  read("adhoc_link_transmission", m.adhoc_link_transmission);
  read("its_g5_packet_delay", m.its_g5_packet_delay);
  read("cloudlet_slowdown", m.cloudlet_slowdown);
  read("device_slowdown", m.device_slowdown);
  read("t_cln", m.t_cln);
  read("t_c", m.t_c);
  read("tau", m.tau);
  if (j.contains("processing_in_link_bracket")) m.processing_in_link_bracket = j.at("processing_in_link_bracket").get<bool>();
  m.validate();
  return m;
}

double LatencyBreakdown::total() const {
  double sum = 0.0;
  for (const auto& [name, ms] : items_) sum += ms;
  return sum;
}

double LatencyBreakdown::get(const std::string& name) const {
  for (const auto& [n, ms] : items_) {
    if (n == name) return ms;
  }
  return 0.0;
}

}  // namespace sdgnn
