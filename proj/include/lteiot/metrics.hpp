#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lteiot/chain.hpp"
#include "lteiot/config.hpp"
#include "lteiot/energy.hpp"

namespace lteiot {

// Operation modes: a state belongs to exactly one.
enum class OperationMode : unsigned { Off = 1u, Communication = 2u, Inactive = 4u };

inline OperationMode mode_of(const StateId& s) {
  switch (s.kind) {
    case StateKind::Off: return OperationMode::Off;
    case StateKind::Active:
    case StateKind::LC:
    case StateKind::Inactive: return OperationMode::Inactive;
    default: return OperationMode::Communication;
  }
}

class ModeFilter {
 public:
  constexpr ModeFilter() = default;
  constexpr explicit ModeFilter(unsigned bits) : bits_(bits & 7u) {}

  static constexpr ModeFilter all() { return ModeFilter(7u); }
  static constexpr ModeFilter only(OperationMode m) { return ModeFilter(static_cast<unsigned>(m)); }
  static constexpr ModeFilter off() { return only(OperationMode::Off); }
  static constexpr ModeFilter communication() { return only(OperationMode::Communication); }
  static constexpr ModeFilter inactive() { return only(OperationMode::Inactive); }

  constexpr bool contains(OperationMode m) const { return (bits_ & static_cast<unsigned>(m)) != 0; }
  bool contains(const StateId& s) const { return contains(mode_of(s)); }

  constexpr ModeFilter operator|(ModeFilter o) const { return ModeFilter(bits_ | o.bits_); }
  constexpr bool operator==(const ModeFilter&) const = default;

 private:
  unsigned bits_ = 0;
};

inline ModeFilter parse_filter(const std::string& s) {
  if (s == "all") return ModeFilter::all();
  if (s == "communication") return ModeFilter::communication();
  if (s == "inactive") return ModeFilter::inactive();
  if (s == "off") return ModeFilter::off();
  throw std::invalid_argument("filter: unknown value '" + s + "'");
}

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class LifetimeModel { RenewalReward, PerPacket };

inline constexpr double kMicrojoulePerWh = 3.6e9;
inline constexpr double kMsPerYear = 365.25 * 24.0 * 3600.0 * 1000.0;

// Steady-state pipeline for one config: chain probabilities, distribution,
// per-state energies and durations.
struct Analysis {
  ModelConfig config;
  ChainParameters params;
  StationaryDistribution dist;
  EnergyDurationProfile profile;

  enum class Solver { ClosedForm, Numeric };

  static Analysis run(const ModelConfig& c, Solver solver = Solver::ClosedForm) {
    const auto p = ChainParameters::from(c);
    auto d = solver == Solver::ClosedForm ? closed_form_distribution(p)
                                          : solve_stationary(build_transition_matrix(p));
    return {c, p, std::move(d), energy_profile(c)};
  }

  static Analysis with_profile(const ModelConfig& c, EnergyDurationProfile profile) {
    const auto p = ChainParameters::from(c);
    return {c, p, closed_form_distribution(p), std::move(profile)};
  }

  // Sum of b_j E_j over the states in `filter`.
  double energy_rate(ModeFilter filter = ModeFilter::all()) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      if (filter.contains(dist.space().state(j))) acc += dist.at(j) * profile.energies()[j];
    }
    return acc;
  }

  // Sum of b_j T_j.
  double time_rate() const {
    double acc = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) acc += dist.at(j) * profile.durations()[j];
    return acc;
  }

  double packets() const {
    if (params.q_tx <= 0.0) return INFINITY;
    return dist[StateId::connect()] / params.q_tx;
  }

  double energy_per_packet(ModeFilter filter = ModeFilter::all()) const {
    const double np = packets();
    if (!(np > 0.0) || !std::isfinite(np)) {
      throw UndefinedMetric("energy per packet undefined: N_p = " + std::to_string(np));
    }
    return energy_rate(filter) / np;
  }

  double average_power() const {
    const double t = time_rate();
    if (!(t > 0.0)) throw UndefinedMetric("average power undefined: zero expected duration");
    return energy_rate() / t;
  }

  double lifetime_years(LifetimeModel model = LifetimeModel::RenewalReward) const {
    const double power = model == LifetimeModel::RenewalReward
                             ? average_power()
                             : energy_per_packet() * config.traffic.lambda_app();
    return config.battery_wh * kMicrojoulePerWh / power / kMsPerYear;
  }
};

inline double energy_per_packet(const ModelConfig& c, ModeFilter filter = ModeFilter::all()) {
  return Analysis::run(c).energy_per_packet(filter);
}

inline double average_power(const ModelConfig& c) { return Analysis::run(c).average_power(); }

inline double battery_lifetime_years(const ModelConfig& c,
                                     LifetimeModel model = LifetimeModel::RenewalReward) {
  return Analysis::run(c).lifetime_years(model);
}

// Lifetime of a device that never leaves PSM.
inline double psm_bound_years(double battery_wh, double p_s_mw) {
  return battery_wh * kMicrojoulePerWh / p_s_mw / kMsPerYear;
}

// 1 - E_p(a) / E_p(b)
inline double reduction(const ModelConfig& a, const ModelConfig& b,
                        ModeFilter filter = ModeFilter::all()) {
  return 1.0 - energy_per_packet(a, filter) / energy_per_packet(b, filter);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  ProcedureKind procedure{};
  double iat_ms = 0.0;
  double p_out = 0.0;
  double e_p_uj = NAN;
  double avg_power_mw = NAN;
  double lifetime_years = NAN;
  double n_p = NAN;
  double b_drop = NAN;
  std::optional<std::string> error;
};

inline SweepRow make_row(ProcedureKind proc, double iat_ms, double p_out) {
  SweepRow r;
  r.procedure = proc;
  r.iat_ms = iat_ms;
  r.p_out = p_out;
  return r;
}

using SweepResult = std::vector<SweepRow>;

struct SweepOptions {
  OutageSplit split = OutageSplit::AllCollision;
  ModeFilter filter = ModeFilter::all();
  LifetimeModel lifetime = LifetimeModel::RenewalReward;
};

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  if (n == 0) throw std::invalid_argument("logspace: n must be >= 1");
  if (!(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("logspace: bounds must be > 0");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

// 30 log-spaced IATs from 320 ms to 48 h.
inline std::vector<double> default_iat_grid() { return logspace(320.0, 1.728e8, 30); }

inline SweepRow evaluate_row(ModelConfig cfg, ProcedureKind proc, double iat, double p_out,
                             const SweepOptions& opt) {
  SweepRow row = make_row(proc, iat, p_out);
  try {
    cfg.procedure = proc;
    cfg.traffic.iat_ms = iat;
    std::tie(cfg.access.p_c, cfg.access.p_e) = split_outage(p_out, opt.split);
    const auto a = Analysis::run(cfg);
    row.n_p = a.packets();
    row.b_drop = a.dist[StateId::drop()];
    row.e_p_uj = a.energy_per_packet(opt.filter);
    row.avg_power_mw = a.average_power();
    row.lifetime_years = a.lifetime_years(opt.lifetime);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

// One row per (procedure, iat, p_out), ordered by procedure, then iat, then p_out.
inline SweepResult sweep(const ModelConfig& base, std::vector<double> iat_grid,
                         std::vector<double> p_out_grid, std::vector<ProcedureKind> procedures,
                         const SweepOptions& opt = {}) {
  if (iat_grid.empty() || p_out_grid.empty() || procedures.empty()) {
    throw std::invalid_argument("sweep: grids must be nonempty");
  }
  std::sort(iat_grid.begin(), iat_grid.end());
  std::sort(p_out_grid.begin(), p_out_grid.end());
  SweepResult out;
  out.reserve(iat_grid.size() * p_out_grid.size() * procedures.size());
  for (auto proc : procedures) {
    for (double iat : iat_grid) {
      for (double p_out : p_out_grid) out.push_back(evaluate_row(base, proc, iat, p_out, opt));
    }
  }
  return out;
}

inline constexpr const char* kSweepCsvHeader =
    "procedure,iat_ms,p_out,e_p_uj,avg_power_mw,lifetime_years,n_p,b_drop";

inline std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    os << to_string(r.procedure) << ',' << format_g9(r.iat_ms) << ',' << format_g9(r.p_out) << ','
       << format_g9(r.e_p_uj) << ',' << format_g9(r.avg_power_mw) << ','
       << format_g9(r.lifetime_years) << ',' << format_g9(r.n_p) << ',' << format_g9(r.b_drop)
       << '\n';
  }
}

}  // namespace lteiot
