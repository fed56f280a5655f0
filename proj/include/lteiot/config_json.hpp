#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "lteiot/config.hpp"

namespace lteiot {

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, const std::string& prefix, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      // Accept 10000.0 but not 2.5 for integer-valued keys.
      if (it->is_number_float()) {
        const double v = it->get<double>();
        if (v != std::floor(v)) throw ConfigError(prefix + key, "must be an integer");
        out = static_cast<T>(v);
        return;
      }
      if (!it->is_number_integer()) throw ConfigError(prefix + key, "must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(prefix + key, "must be a number");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(prefix + key, "wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(prefix + it.key(), "unknown key");
  }
}

}  // namespace detail

inline RadioLinkConfig radio_from_json(const nlohmann::json& j) {
  using detail::read_key;
  if (!j.is_object()) throw ConfigError("radio", "must be an object");
  detail::reject_unknown(j,
                         {"distance_km", "p0_pusch_dbm", "alpha", "delta_tf_db", "f_c_db",
                          "preamble_initial_rtp_dbm", "delta_pre_db", "ramping_step_db",
                          "accumulate_ramping", "pathloss_intercept_db", "pathloss_slope",
                          "p_rbp_mw", "p_pre_mw"},
                         "radio.");
  RadioLinkConfig r;
  const std::string p = "radio.";
  read_key(j, "distance_km", p, r.distance_km);
  read_key(j, "p0_pusch_dbm", p, r.p0_pusch_dbm);
  read_key(j, "alpha", p, r.alpha);
  read_key(j, "delta_tf_db", p, r.delta_tf_db);
  read_key(j, "f_c_db", p, r.f_c_db);
  read_key(j, "preamble_initial_rtp_dbm", p, r.preamble_initial_rtp_dbm);
  read_key(j, "delta_pre_db", p, r.delta_pre_db);
  read_key(j, "ramping_step_db", p, r.ramping_step_db);
  read_key(j, "accumulate_ramping", p, r.accumulate_ramping);
  read_key(j, "pathloss_intercept_db", p, r.pathloss_intercept_db);
  read_key(j, "pathloss_slope", p, r.pathloss_slope);
  // null keeps the computed value
  if (j.contains("p_rbp_mw") && !j["p_rbp_mw"].is_null()) read_key(j, "p_rbp_mw", p, r.p_rbp_mw);
  if (j.contains("p_pre_mw") && !j["p_pre_mw"].is_null()) read_key(j, "p_pre_mw", p, r.p_pre_mw);
  return r;
}

// Missing keys fall back to the defaults. Unknown keys and invariant
// violations raise ConfigError naming the key.
inline ModelConfig config_from_json(const nlohmann::json& j) {
  using detail::read_key;
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  detail::reject_unknown(
      j, {"t_i", "t_drxi", "t_lc", "t_ond", "t_pre", "t_ra_rx", "t_wait", "p_s", "p_i", "p_rx",
          "p_tx_max", "b_rbp", "b_req", "b_comp", "b_s_comp", "b_r_ul", "b_data", "b_comp_cp",
          "b_data_cp", "m", "w_c", "p_c", "p_e", "frag_threshold_rbp", "iat_ms", "battery_wh",
          "procedure", "radio"},
      "");
  ModelConfig c;
  const std::string p;
  if (auto it = j.find("procedure"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("procedure", "must be a string");
    try {
      c.procedure = parse_procedure(it->get<std::string>());
    } catch (const std::invalid_argument&) {
      throw ConfigError("procedure", "must be one of sr, cp, up");
    }
  }
  read_key(j, "iat_ms", p, c.traffic.iat_ms);
  read_key(j, "t_i", p, c.timers.t_i);
  read_key(j, "t_drxi", p, c.timers.t_drxi);
  read_key(j, "t_lc", p, c.timers.t_lc);
  read_key(j, "t_ond", p, c.timers.t_ond);
  read_key(j, "t_pre", p, c.timers.t_pre);
  read_key(j, "t_ra_rx", p, c.timers.t_ra_rx);
  read_key(j, "t_wait", p, c.timers.t_wait);
  read_key(j, "p_s", p, c.power.p_s);
  read_key(j, "p_i", p, c.power.p_i);
  read_key(j, "p_rx", p, c.power.p_rx);
  read_key(j, "p_tx_max", p, c.power.p_tx_max);
  read_key(j, "b_rbp", p, c.sizes.b_rbp);
  read_key(j, "b_req", p, c.sizes.b_req);
  read_key(j, "b_comp", p, c.sizes.b_comp);
  read_key(j, "b_s_comp", p, c.sizes.b_s_comp);
  read_key(j, "b_r_ul", p, c.sizes.b_r_ul);
  read_key(j, "b_data", p, c.sizes.b_data);
  read_key(j, "b_comp_cp", p, c.sizes.b_comp_cp);
  read_key(j, "b_data_cp", p, c.sizes.b_data_cp);
  read_key(j, "m", p, c.access.m);
  read_key(j, "w_c", p, c.access.w_c);
  read_key(j, "p_c", p, c.access.p_c);
  read_key(j, "p_e", p, c.access.p_e);
  read_key(j, "frag_threshold_rbp", p, c.access.frag_threshold_rbp);
  read_key(j, "battery_wh", p, c.battery_wh);
  if (auto it = j.find("radio"); it != j.end()) c.radio = radio_from_json(*it);
  validate(c);
  return c;
}

inline nlohmann::json to_json(const RadioLinkConfig& r) {
  nlohmann::json j = {
      {"distance_km", r.distance_km},
      {"p0_pusch_dbm", r.p0_pusch_dbm},
      {"alpha", r.alpha},
      {"delta_tf_db", r.delta_tf_db},
      {"f_c_db", r.f_c_db},
      {"preamble_initial_rtp_dbm", r.preamble_initial_rtp_dbm},
      {"delta_pre_db", r.delta_pre_db},
      {"ramping_step_db", r.ramping_step_db},
      {"accumulate_ramping", r.accumulate_ramping},
      {"pathloss_intercept_db", r.pathloss_intercept_db},
      {"pathloss_slope", r.pathloss_slope},
  };
  j["p_rbp_mw"] = std::isnan(r.p_rbp_mw) ? nlohmann::json(nullptr) : nlohmann::json(r.p_rbp_mw);
  j["p_pre_mw"] = std::isnan(r.p_pre_mw) ? nlohmann::json(nullptr) : nlohmann::json(r.p_pre_mw);
  return j;
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"procedure", std::string(to_string(c.procedure))},
      {"iat_ms", c.traffic.iat_ms},
      {"t_i", c.timers.t_i},
      {"t_drxi", c.timers.t_drxi},
      {"t_lc", c.timers.t_lc},
      {"t_ond", c.timers.t_ond},
      {"t_pre", c.timers.t_pre},
      {"t_ra_rx", c.timers.t_ra_rx},
      {"t_wait", c.timers.t_wait},
      {"p_s", c.power.p_s},
      {"p_i", c.power.p_i},
      {"p_rx", c.power.p_rx},
      {"p_tx_max", c.power.p_tx_max},
      {"b_rbp", c.sizes.b_rbp},
      {"b_req", c.sizes.b_req},
      {"b_comp", c.sizes.b_comp},
      {"b_s_comp", c.sizes.b_s_comp},
      {"b_r_ul", c.sizes.b_r_ul},
      {"b_data", c.sizes.b_data},
      {"b_comp_cp", c.sizes.b_comp_cp},
      {"b_data_cp", c.sizes.b_data_cp},
      {"m", c.access.m},
      {"w_c", c.access.w_c},
      {"p_c", c.access.p_c},
      {"p_e", c.access.p_e},
      {"frag_threshold_rbp", c.access.frag_threshold_rbp},
      {"battery_wh", c.battery_wh},
      {"radio", to_json(c.radio)},
  };
}

inline ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline bool operator==(const RadioLinkConfig& a, const RadioLinkConfig& b) {
  auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return a.distance_km == b.distance_km && a.p0_pusch_dbm == b.p0_pusch_dbm &&
         a.alpha == b.alpha && a.delta_tf_db == b.delta_tf_db && a.f_c_db == b.f_c_db &&
         a.preamble_initial_rtp_dbm == b.preamble_initial_rtp_dbm &&
         a.delta_pre_db == b.delta_pre_db && a.ramping_step_db == b.ramping_step_db &&
         a.accumulate_ramping == b.accumulate_ramping &&
         a.pathloss_intercept_db == b.pathloss_intercept_db &&
         a.pathloss_slope == b.pathloss_slope && same(a.p_rbp_mw, b.p_rbp_mw) &&
         same(a.p_pre_mw, b.p_pre_mw);
}

inline bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return to_json(a) == to_json(b) && a.radio == b.radio;
}

}  // namespace lteiot
