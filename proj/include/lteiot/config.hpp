#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace lteiot {

// Small-data transmission procedure.
enum class ProcedureKind { SR, CP, UP };

inline constexpr std::string_view to_string(ProcedureKind p) {
  switch (p) {
    case ProcedureKind::SR: return "sr";
    case ProcedureKind::CP: return "cp";
    case ProcedureKind::UP: return "up";
  }
  return "?";
}

inline ProcedureKind parse_procedure(std::string_view s) {
  if (s == "sr" || s == "SR") return ProcedureKind::SR;
  if (s == "cp" || s == "CP") return ProcedureKind::CP;
  if (s == "up" || s == "UP") return ProcedureKind::UP;
  throw std::invalid_argument("procedure: unknown value '" + std::string(s) + "'");
}

// Processing delay to establish the connection, ms.
inline constexpr double t_cr_rx_ms(ProcedureKind p) {
  return p == ProcedureKind::SR ? 41.0 : 16.0;
}

struct TrafficModel {
  double iat_ms = 3.6e6;

  double lambda_app() const { return 1.0 / iat_ms; }
  static TrafficModel from_rate(double lambda) { return {1.0 / lambda}; }
};

struct TimerConfig {
  std::int64_t t_i = 10000;
  std::int64_t t_drxi = 200;
  std::int64_t t_lc = 80;
  std::int64_t t_ond = 4;
  double t_pre = 2.5;
  double t_ra_rx = 10.0;
  std::int64_t t_wait = 54;
};

// mW
struct PowerLevels {
  double p_s = 0.03;
  double p_i = 10.0;
  double p_rx = 100.0;
  double p_tx_max = 200.0;
};

// bytes
struct MessageSizes {
  std::int64_t b_rbp = 36;
  std::int64_t b_req = 7;
  std::int64_t b_comp = 20;
  std::int64_t b_s_comp = 13;
  std::int64_t b_r_ul = 10;
  std::int64_t b_data = 100;
  std::int64_t b_comp_cp = 129;
  std::int64_t b_data_cp = 120;
};

struct AccessConfig {
  std::int64_t m = 9;
  std::int64_t w_c = 20;
  double p_c = 0.0;
  double p_e = 0.0;
  std::int64_t frag_threshold_rbp = 6;
};

struct RadioLinkConfig {
  double distance_km = 0.7;
  double p0_pusch_dbm = -100.0;
  double alpha = 1.0;
  double delta_tf_db = 0.0;
  double f_c_db = 0.0;
  double preamble_initial_rtp_dbm = -100.0;
  double delta_pre_db = 0.0;
  double ramping_step_db = 0.0;
  bool accumulate_ramping = false;
  double pathloss_intercept_db = 120.9;
  double pathloss_slope = 37.6;
  // Direct overrides of the power-control results; NaN means "compute".
  double p_rbp_mw = std::numeric_limits<double>::quiet_NaN();
  double p_pre_mw = std::numeric_limits<double>::quiet_NaN();
};

struct ModelConfig {
  ProcedureKind procedure = ProcedureKind::SR;
  TrafficModel traffic;
  TimerConfig timers;
  PowerLevels power;
  MessageSizes sizes;
  AccessConfig access;
  RadioLinkConfig radio;
  double battery_wh = 5.0;
};

// Thrown by validate(); key() names the offending configuration key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

namespace detail {
inline void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(key, what);
}
}  // namespace detail

inline void validate(const TrafficModel& t) {
  detail::require(t.iat_ms > 0.0 && !std::isnan(t.iat_ms), "iat_ms", "must be > 0");
}

inline void validate(const TimerConfig& t) {
  using detail::require;
  require(t.t_i >= 0, "t_i", "must be >= 0");
  require(t.t_drxi >= 0, "t_drxi", "must be >= 0");
  require(t.t_lc >= 0, "t_lc", "must be >= 0");
  require(t.t_ond >= 0, "t_ond", "must be >= 0");
  require(t.t_pre >= 0.0, "t_pre", "must be >= 0");
  require(t.t_ra_rx >= 0.0, "t_ra_rx", "must be >= 0");
  require(t.t_wait >= 0, "t_wait", "must be >= 0");
  require(t.t_i >= t.t_drxi, "t_i", "must be >= t_drxi");
  require(t.t_lc + t.t_ond > 0, "t_lc", "t_lc + t_ond must be > 0");
}

inline void validate(const PowerLevels& p) {
  using detail::require;
  require(p.p_s > 0.0, "p_s", "must be > 0");
  require(p.p_s < p.p_i, "p_i", "must exceed p_s");
  require(p.p_i < p.p_rx, "p_rx", "must exceed p_i");
  require(p.p_rx <= p.p_tx_max, "p_tx_max", "must be >= p_rx");
}

inline void validate(const MessageSizes& s) {
  using detail::require;
  require(s.b_rbp > 0, "b_rbp", "must be > 0");
  require(s.b_req > 0, "b_req", "must be > 0");
  require(s.b_comp > 0, "b_comp", "must be > 0");
  require(s.b_s_comp > 0, "b_s_comp", "must be > 0");
  require(s.b_r_ul > 0, "b_r_ul", "must be > 0");
  require(s.b_data > 0, "b_data", "must be > 0");
  require(s.b_comp_cp >= s.b_data, "b_comp_cp", "must be >= b_data");
  require(s.b_data_cp >= s.b_data, "b_data_cp", "must be >= b_data");
}

inline void validate(const AccessConfig& a) {
  using detail::require;
  require(a.m >= 0, "m", "must be >= 0");
  require(a.w_c >= 1, "w_c", "must be >= 1");
  require(a.p_c >= 0.0 && a.p_c < 1.0, "p_c", "must lie in [0, 1)");
  require(a.p_e >= 0.0 && a.p_e < 1.0, "p_e", "must lie in [0, 1)");
  require(a.frag_threshold_rbp >= 1, "frag_threshold_rbp", "must be >= 1");
}

inline void validate(const RadioLinkConfig& r) {
  using detail::require;
  require(r.distance_km > 0.0, "radio.distance_km", "must be > 0");
  require(r.alpha >= 0.0 && r.alpha <= 1.0, "radio.alpha", "must lie in [0, 1]");
  require(std::isnan(r.p_rbp_mw) || r.p_rbp_mw >= 0.0, "radio.p_rbp_mw", "must be >= 0");
  require(std::isnan(r.p_pre_mw) || r.p_pre_mw >= 0.0, "radio.p_pre_mw", "must be >= 0");
}

inline void validate(const ModelConfig& c) {
  validate(c.traffic);
  validate(c.timers);
  validate(c.power);
  validate(c.sizes);
  validate(c.access);
  validate(c.radio);
  detail::require(c.battery_wh > 0.0, "battery_wh", "must be > 0");
}

// ---------------------------------------------------------------------------
// Probability primitives. Each is 1 - exp(-lambda * window), evaluated with
// expm1 so tiny rates keep full precision.

inline double arrival_within(double lambda, double window_ms) {
  return -std::expm1(-lambda * window_ms);
}

// Probability of uplink traffic in one subframe.
inline double p_on(const TrafficModel& t) { return arrival_within(t.lambda_app(), 1.0); }

// Probability of a packet before the inactivity timer expires.
inline double p_tx(const TrafficModel& t, const TimerConfig& tm) {
  return arrival_within(t.lambda_app(), static_cast<double>(tm.t_i));
}

// Probability of a packet before the DRX inactivity timer expires.
inline double p_a(const TrafficModel& t, const TimerConfig& tm) {
  return arrival_within(t.lambda_app(), static_cast<double>(tm.t_drxi));
}

// Probability of a packet within one long DRX cycle (idle + on-duration).
inline double p_lc(const TrafficModel& t, const TimerConfig& tm) {
  return arrival_within(t.lambda_app(), static_cast<double>(tm.t_lc + tm.t_ond));
}

inline double outage(double p_c, double p_e) { return 1.0 - (1.0 - p_e) * (1.0 - p_c); }

enum class OutageSplit { AllCollision, AllError, Symmetric };

inline OutageSplit parse_outage_split(std::string_view s) {
  if (s == "all_collision") return OutageSplit::AllCollision;
  if (s == "all_error") return OutageSplit::AllError;
  if (s == "symmetric") return OutageSplit::Symmetric;
  throw std::invalid_argument("outage split: unknown policy '" + std::string(s) + "'");
}

// Inverse of outage(): returns (p_c, p_e).
inline std::pair<double, double> split_outage(double p_out,
                                              OutageSplit policy = OutageSplit::AllCollision) {
  if (!(p_out >= 0.0 && p_out < 1.0)) {
    throw std::invalid_argument("p_out must lie in [0, 1)");
  }
  switch (policy) {
    case OutageSplit::AllCollision: return {p_out, 0.0};
    case OutageSplit::AllError: return {0.0, p_out};
    case OutageSplit::Symmetric: {
      const double x = 1.0 - std::sqrt(1.0 - p_out);
      return {x, x};
    }
  }
  return {p_out, 0.0};
}

struct LongCycleCount {
  std::int64_t n_c = 0;
  bool degenerate = false;  // (t_i - t_drxi) was negative and got clamped
};

inline LongCycleCount long_cycle_count(const TimerConfig& t) {
  const std::int64_t cycle = t.t_lc + t.t_ond;
  if (cycle <= 0) throw std::invalid_argument("t_lc + t_ond must be > 0");
  const std::int64_t span = t.t_i - t.t_drxi;
  if (span < 0) return {0, true};
  return {span / cycle, false};
}

// Number of long DRX cycles that fit between T_DRXi and T_i.
inline std::int64_t n_long_cycles(const TimerConfig& t) { return long_cycle_count(t).n_c; }

// Leftover time after DRX inactivity and the whole long cycles, ms.
inline std::int64_t t_spare(const TimerConfig& t) {
  const std::int64_t rest = t.t_i - (t.t_drxi + n_long_cycles(t) * (t.t_lc + t.t_ond));
  return rest < 0 ? 0 : rest;
}

// Defaults with the given procedure and IAT.
inline ModelConfig default_config(ProcedureKind p = ProcedureKind::SR, double iat_ms = 3.6e6) {
  ModelConfig c;
  c.procedure = p;
  c.traffic.iat_ms = iat_ms;
  return c;
}

}  // namespace lteiot
