#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lteiot/config.hpp"
#include "lteiot/state.hpp"

// Units throughout: power in mW, time in ms, energy in uJ (mW * ms).
namespace lteiot {

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// Log-distance pathloss, dB.
inline double pathloss_db(const RadioLinkConfig& r) {
  return r.pathloss_intercept_db + r.pathloss_slope * std::log10(r.distance_km);
}

// Uplink shared-channel power for a single RB pair (the 10 log10(M) term is
// zero for M = 1), clamped at P_TX_MAX.
inline double tx_power_per_rbp_mw(const RadioLinkConfig& r, const PowerLevels& p) {
  if (!std::isnan(r.p_rbp_mw)) return std::min(r.p_rbp_mw, p.p_tx_max);
  const double dbm = r.p0_pusch_dbm + r.alpha * pathloss_db(r) + r.delta_tf_db + r.f_c_db;
  return dbm_to_mw(std::min(mw_to_dbm(p.p_tx_max), dbm));
}

// Preamble power for the given 1-based attempt number, clamped at P_TX_MAX.
inline double preamble_power_mw(const RadioLinkConfig& r, const PowerLevels& p, int attempt = 1) {
  if (attempt < 1) throw std::invalid_argument("preamble_power_mw: attempt must be >= 1");
  if (!std::isnan(r.p_pre_mw)) return std::min(r.p_pre_mw, p.p_tx_max);
  const double target = r.preamble_initial_rtp_dbm + r.delta_pre_db +
                        (attempt - 1) * r.ramping_step_db + pathloss_db(r);
  return dbm_to_mw(std::min(mw_to_dbm(p.p_tx_max), target));
}

inline std::int64_t rb_pairs(std::int64_t bytes, std::int64_t b_rbp) {
  if (bytes < 0 || b_rbp <= 0) throw std::invalid_argument("rb_pairs: bad arguments");
  return (bytes + b_rbp - 1) / b_rbp;
}

// Subframes needed to send n_rbp RB pairs at most `threshold` per subframe.
inline std::int64_t message_subframes(std::int64_t n_rbp, std::int64_t threshold) {
  return n_rbp <= 0 ? 0 : (n_rbp + threshold - 1) / threshold;
}

// Transmit energy of one message. Each subframe carries up to `threshold`
// RB pairs and its total power is capped at P_TX_MAX.
inline double message_energy_uj(std::int64_t n_rbp, double p_rbp_mw, std::int64_t threshold,
                                double p_tx_max) {
  double e = 0.0;
  for (std::int64_t left = n_rbp; left > 0; left -= threshold) {
    const auto chunk = static_cast<double>(std::min(left, threshold));
    e += std::min(chunk * p_rbp_mw, p_tx_max);
  }
  return e;
}

struct ExpectedWait {
  double elapsed_ms = 0.0;    // expected subframes until arrival, capped at the window
  double p_no_arrival = 1.0;  // weight of the "ran to the end" term, e^{-lambda (W-1)}
};

// E[min(L, W)] for L ~ Geometric(1 - e^{-lambda}) on {1, 2, ...}, written as
// the direct sum over l = 1..W-1 plus the tail term at W.
inline ExpectedWait expected_wait(std::int64_t window_ms, double lambda) {
  if (window_ms <= 0) return {0.0, 1.0};
  const double hit = -std::expm1(-lambda);
  double sum = 0.0;
  for (std::int64_t l = 1; l < window_ms; ++l) {
    sum += std::exp(-lambda * static_cast<double>(l - 1)) * hit * static_cast<double>(l);
  }
  const double tail = std::exp(-lambda * static_cast<double>(window_ms - 1));
  return {sum + tail * static_cast<double>(window_ms), tail};
}

// Per-state energy and expected holding time for one (procedure, config).
class EnergyDurationProfile {
 public:
  EnergyDurationProfile(StateSpace space, std::vector<double> energy_uj,
                        std::vector<double> duration_ms, double p_rbp_mw, double p_pre_mw)
      : space_(space),
        energy_(std::move(energy_uj)),
        duration_(std::move(duration_ms)),
        p_rbp_mw_(p_rbp_mw),
        p_pre_mw_(p_pre_mw) {
    if (energy_.size() != space_.size() || duration_.size() != space_.size()) {
      throw std::invalid_argument("EnergyDurationProfile: size mismatch");
    }
  }

  const StateSpace& space() const { return space_; }
  std::size_t size() const { return energy_.size(); }
  const std::vector<double>& energies() const { return energy_; }
  const std::vector<double>& durations() const { return duration_; }
  double energy(const StateId& s) const { return energy_[space_.index(s)]; }
  double duration(const StateId& s) const { return duration_[space_.index(s)]; }
  double p_rbp_mw() const { return p_rbp_mw_; }
  double p_pre_mw() const { return p_pre_mw_; }

  // For test harnesses that perturb single entries.
  void set_energy(const StateId& s, double e) { energy_[space_.index(s)] = e; }

 private:
  StateSpace space_;
  std::vector<double> energy_;
  std::vector<double> duration_;
  double p_rbp_mw_;
  double p_pre_mw_;
};

// Evaluates the per-state energy and duration formulas; construct once per
// config and query many states.
class EnergyModel {
 public:
  explicit EnergyModel(const ModelConfig& c)
      : c_(c),
        n_c_(n_long_cycles(c.timers)),
        t_spare_(t_spare(c.timers)),
        p_rbp_(tx_power_per_rbp_mw(c.radio, c.power)),
        active_wait_(expected_wait(c.timers.t_drxi, c.traffic.lambda_app())),
        lc_wait_(expected_wait(c.timers.t_lc + c.timers.t_ond, c.traffic.lambda_app())) {
    validate(c);
  }

  const ModelConfig& config() const { return c_; }
  double p_rbp_mw() const { return p_rbp_; }
  double p_pre_mw(int attempt = 1) const {
    return preamble_power_mw(c_.radio, c_.power, c_.radio.accumulate_ramping ? attempt : 1);
  }
  const ExpectedWait& active_wait() const { return active_wait_; }
  const ExpectedWait& lc_wait() const { return lc_wait_; }

  // RB pairs of each uplink message sent in CR(i).
  std::vector<std::int64_t> cr_messages() const {
    const auto& s = c_.sizes;
    auto rb = [&](std::int64_t bytes) { return rb_pairs(bytes, s.b_rbp); };
    switch (c_.procedure) {
      case ProcedureKind::SR: return {rb(s.b_req), rb(s.b_comp), rb(s.b_s_comp), rb(s.b_r_ul)};
      case ProcedureKind::CP: return {rb(s.b_req), rb(s.b_comp_cp)};
      case ProcedureKind::UP: return {rb(s.b_req), rb(s.b_comp)};
    }
    return {};
  }

  // RB pairs of the data message in Connect (0 for CP: the data rode in CR).
  std::int64_t connect_rbp() const {
    return c_.procedure == ProcedureKind::CP ? 0 : rb_pairs(c_.sizes.b_data, c_.sizes.b_rbp);
  }

  std::int64_t tx_rbp() const {
    const auto bytes = c_.procedure == ProcedureKind::CP ? c_.sizes.b_data_cp : c_.sizes.b_data;
    return rb_pairs(bytes, c_.sizes.b_rbp);
  }

  double message_energy(std::int64_t n_rbp) const {
    return message_energy_uj(n_rbp, p_rbp_, c_.access.frag_threshold_rbp, c_.power.p_tx_max);
  }

  // RA attempt: wait before the preamble at idle, 1 ms of preamble, RX window.
  double ra_energy(int attempt_index) const {
    return c_.timers.t_pre * c_.power.p_i + c_.timers.t_ra_rx * c_.power.p_rx +
           p_pre_mw(attempt_index + 1);
  }

  double active_energy(double elapsed_ms) const { return elapsed_ms * c_.power.p_rx; }

  double lc_energy_expected() const {
    const auto& p = c_.power;
    const auto window = static_cast<double>(c_.timers.t_lc + c_.timers.t_ond);
    const double arrival_part = lc_wait_.elapsed_ms - lc_wait_.p_no_arrival * window;
    return arrival_part * p.p_i + lc_wait_.p_no_arrival * lc_full_cycle_energy();
  }

  // One complete long cycle: idle for T_lc, listening for T_ond.
  double lc_full_cycle_energy() const {
    return static_cast<double>(c_.timers.t_lc) * c_.power.p_i +
           static_cast<double>(c_.timers.t_ond) * c_.power.p_rx;
  }

  double energy(const StateId& s) const {
    const auto& p = c_.power;
    const auto& t = c_.timers;
    switch (s.kind) {
      case StateKind::Off: return p.p_s;
      case StateKind::RA: return ra_energy(s.i);
      case StateKind::Backoff: return p.p_i;
      case StateKind::CR: {
        double e = t_cr_rx_ms(c_.procedure) * p.p_rx;
        for (auto n : cr_messages()) e += message_energy(n);
        return e;
      }
      case StateKind::Connect: return message_energy(connect_rbp());
      case StateKind::Active: return active_energy(active_wait_.elapsed_ms);
      case StateKind::LC: return lc_energy_expected();
      case StateKind::TX: return message_energy(tx_rbp());
      case StateKind::Inactive:
        if (c_.procedure == ProcedureKind::CP) return static_cast<double>(t.t_wait) * p.p_rx;
        return static_cast<double>(t.t_drxi + n_c_ * t.t_ond) * p.p_rx +
               static_cast<double>(n_c_ * t.t_lc + t_spare_) * p.p_i;
      case StateKind::Drop: return 0.0;
    }
    return 0.0;
  }

  double duration(const StateId& s) const {
    const auto& t = c_.timers;
    const auto thr = c_.access.frag_threshold_rbp;
    switch (s.kind) {
      case StateKind::Off: return 1.0;
      case StateKind::RA: return t.t_pre + 1.0 + t.t_ra_rx;
      case StateKind::Backoff: return 1.0;
      case StateKind::CR: {
        double d = t_cr_rx_ms(c_.procedure);
        for (auto n : cr_messages()) d += static_cast<double>(message_subframes(n, thr));
        return d;
      }
      case StateKind::Connect: return static_cast<double>(message_subframes(connect_rbp(), thr));
      case StateKind::Active: return active_wait_.elapsed_ms;
      case StateKind::LC: return lc_wait_.elapsed_ms;
      case StateKind::TX: return static_cast<double>(message_subframes(tx_rbp(), thr));
      case StateKind::Inactive:
        return static_cast<double>(c_.procedure == ProcedureKind::CP ? t.t_wait : t.t_i);
      case StateKind::Drop: return 0.0;
    }
    return 0.0;
  }

  EnergyDurationProfile profile() const {
    const StateSpace space(c_.access.m, c_.access.w_c, n_c_);
    std::vector<double> e(space.size()), d(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
      const auto s = space.state(j);
      e[j] = energy(s);
      d[j] = duration(s);
    }
    return {space, std::move(e), std::move(d), p_rbp_, p_pre_mw(1)};
  }

 private:
  ModelConfig c_;
  std::int64_t n_c_;
  std::int64_t t_spare_;
  double p_rbp_;
  ExpectedWait active_wait_;
  ExpectedWait lc_wait_;
};

inline double state_energy(const StateId& s, const ModelConfig& c) {
  return EnergyModel(c).energy(s);
}

inline double state_duration(const StateId& s, const ModelConfig& c) {
  return EnergyModel(c).duration(s);
}

inline EnergyDurationProfile energy_profile(const ModelConfig& c) {
  return EnergyModel(c).profile();
}

}  // namespace lteiot
