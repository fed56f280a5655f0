#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lteiot/chain.hpp"
#include "lteiot/config.hpp"
#include "lteiot/config_json.hpp"
#include "lteiot/energy.hpp"
#include "lteiot/metrics.hpp"
#include "lteiot/simulator.hpp"

namespace lteiot::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kValidationFailed = 2 };

struct Options {
  std::string config_path;
  std::string procedure;  // empty: the config's procedure (sweep: all)
  std::string iat;
  std::string pout;
  std::string split = "all_collision";
  std::string filter = "all";
  std::string out;
  std::string format;
  std::string lifetime = "renewal";
  std::string emit_config;
  std::string table = "profile";
  std::string solver = "closed";
  std::uint64_t seed = 1;
  std::uint64_t steps = 1'000'000;
  std::uint64_t warmup = 10'000;
  int batches = 100;
};

// "320", "320,1000,5000" or "logspace:320:172800000:30"
inline std::vector<double> parse_grid(const std::string& spec, const char* flag) {
  std::vector<double> out;
  auto number = [&](const std::string& tok) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(flag, "malformed number '" + tok + "'");
    }
  };
  if (spec.rfind("logspace:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(spec.substr(9));
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 3) throw ConfigError(flag, "expected logspace:lo:hi:n");
    const double n = number(parts[2]);
    if (n < 1 || n != static_cast<double>(static_cast<std::size_t>(n))) {
      throw ConfigError(flag, "logspace count must be a positive integer");
    }
    try {
      return logspace(number(parts[0]), number(parts[1]), static_cast<std::size_t>(n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(flag, e.what());
    }
  }
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(number(tok));
  if (out.empty()) throw ConfigError(flag, "empty list");
  return out;
}

inline std::vector<ProcedureKind> parse_procedures(const std::string& s) {
  if (s == "all") return {ProcedureKind::SR, ProcedureKind::CP, ProcedureKind::UP};
  try {
    return {parse_procedure(s)};
  } catch (const std::invalid_argument&) {
    throw ConfigError("--procedure", "must be one of sr, cp, up, all");
  }
}

// One evaluation point after applying command-line overrides to the config.
struct Point {
  ModelConfig config;
  double p_out;
};

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  ModelConfig base_config() const {
    ModelConfig c = o_.config_path.empty() ? default_config() : load_config(o_.config_path);
    validate(c);
    return c;
  }

  std::vector<Point> points(std::optional<std::vector<double>> default_iats = std::nullopt) const {
    const ModelConfig base = base_config();
    // A sweep defaults to every procedure, single evaluations to the config's.
    const auto procs = !o_.procedure.empty() ? parse_procedures(o_.procedure)
                       : default_iats       ? parse_procedures("all")
                                            : std::vector<ProcedureKind>{base.procedure};
    std::vector<double> iats = !o_.iat.empty() ? parse_grid(o_.iat, "--iat")
                                               : default_iats.value_or(
                                                     std::vector<double>{base.traffic.iat_ms});
    std::sort(iats.begin(), iats.end());
    OutageSplit split{};
    try {
      split = parse_outage_split(o_.split);
    } catch (const std::invalid_argument&) {
      throw ConfigError("--split", "must be one of all_collision, all_error, symmetric");
    }
    std::vector<std::optional<double>> pouts;
    if (o_.pout.empty()) {
      pouts.push_back(std::nullopt);
    } else {
      auto g = parse_grid(o_.pout, "--pout");
      std::sort(g.begin(), g.end());
      for (double v : g) pouts.emplace_back(v);
    }
    std::vector<Point> pts;
    for (auto proc : procs) {
      for (double iat : iats) {
        for (const auto& po : pouts) {
          ModelConfig c = base;
          c.procedure = proc;
          c.traffic.iat_ms = iat;
          if (po) {
            if (!(*po >= 0.0 && *po < 1.0)) throw ConfigError("--pout", "values must lie in [0, 1)");
            std::tie(c.access.p_c, c.access.p_e) = split_outage(*po, split);
          }
          validate(c);
          pts.push_back({c, po ? *po : outage(c.access.p_c, c.access.p_e)});
        }
      }
    }
    return pts;
  }

  void warn_degenerate(const ModelConfig& c) const {
    if (n_long_cycles(c.timers) == 0) {
      err_ << "warning: no long DRX cycle fits between t_drxi and t_i (N_c = 0)\n";
    }
  }

  LifetimeModel lifetime_model() const {
    if (o_.lifetime == "renewal") return LifetimeModel::RenewalReward;
    if (o_.lifetime == "per-packet") return LifetimeModel::PerPacket;
    throw ConfigError("--lifetime-model", "must be renewal or per-packet");
  }

  ModeFilter filter() const {
    try {
      return parse_filter(o_.filter);
    } catch (const std::invalid_argument&) {
      throw ConfigError("--filter", "must be one of all, communication, inactive, off");
    }
  }

  std::string format(const char* fallback) const {
    const std::string f = o_.format.empty() ? fallback : o_.format;
    if (f != "csv" && f != "json") throw ConfigError("--format", "must be csv or json");
    return f;
  }

  void emit(const std::string& text) const {
    if (o_.out.empty()) {
      out_ << text;
      return;
    }
    std::ofstream f(o_.out);
    if (!f) throw ConfigError("--out", "cannot write '" + o_.out + "'");
    f << text;
  }

  int analyze() const {
    const auto pts = points();
    const auto filt = filter();
    const auto life = lifetime_model();
    const auto fmt = format("json");
    if (!o_.emit_config.empty()) {
      std::ofstream f(o_.emit_config);
      if (!f) throw ConfigError("--emit-config", "cannot write '" + o_.emit_config + "'");
      f << to_json(pts.front().config).dump(2) << '\n';
    }
    nlohmann::json arr = nlohmann::json::array();
    SweepResult rows;
    for (const auto& pt : pts) {
      warn_degenerate(pt.config);
      const auto a = Analysis::run(pt.config);
      nlohmann::json j = {
          {"procedure", std::string(to_string(pt.config.procedure))},
          {"iat_ms", pt.config.traffic.iat_ms},
          {"p_out", pt.p_out},
          {"p_c", pt.config.access.p_c},
          {"p_e", pt.config.access.p_e},
          {"n_states", a.dist.size()},
          {"n_c", a.params.n_c},
          {"p_rbp_mw", a.profile.p_rbp_mw()},
          {"p_pre_mw", a.profile.p_pre_mw()},
          {"b_off", a.dist[StateId::off()]},
          {"b_drop", a.dist[StateId::drop()]},
          {"avg_power_mw", a.average_power()},
      };
      SweepRow row = make_row(pt.config.procedure, pt.config.traffic.iat_ms, pt.p_out);
      row.avg_power_mw = a.average_power();
      row.b_drop = a.dist[StateId::drop()];
      try {
        row.n_p = a.packets();
        row.e_p_uj = a.energy_per_packet(filt);
        row.lifetime_years = a.lifetime_years(life);
        j["n_p"] = row.n_p;
        j["e_p_uj"] = row.e_p_uj;
        j["e_p_uj_communication"] = a.energy_per_packet(ModeFilter::communication());
        j["lifetime_years"] = row.lifetime_years;
        j["lifetime_years_renewal"] = a.lifetime_years(LifetimeModel::RenewalReward);
        j["lifetime_years_per_packet"] = a.lifetime_years(LifetimeModel::PerPacket);
      } catch (const UndefinedMetric& e) {
        j["error"] = e.what();
        row.error = e.what();
      }
      arr.push_back(j);
      rows.push_back(row);
    }
    if (fmt == "csv") {
      std::ostringstream os;
      write_sweep_csv(os, rows);
      emit(os.str());
    } else {
      emit((arr.size() == 1 ? arr.front() : arr).dump(2) + "\n");
    }
    return kOk;
  }

  int sweep() const {
    const auto pts = points(default_iat_grid());
    SweepOptions opt;
    opt.filter = filter();
    opt.lifetime = lifetime_model();
    const auto fmt = format("csv");
    SweepResult rows;
    rows.reserve(pts.size());
    for (const auto& pt : pts) {
      // The point already carries the (p_c, p_e) split chosen on the command line.
      const SweepRow r = evaluate_exact(pt, opt);
      if (r.error) {
        err_ << "row " << to_string(r.procedure) << " iat=" << r.iat_ms << " p_out=" << r.p_out
             << ": " << *r.error << '\n';
      }
      rows.push_back(r);
    }
    if (fmt == "csv") {
      std::ostringstream os;
      write_sweep_csv(os, rows);
      emit(os.str());
    } else {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows) {
        nlohmann::json j = {{"procedure", std::string(to_string(r.procedure))},
                            {"iat_ms", r.iat_ms},
                            {"p_out", r.p_out},
                            {"e_p_uj", r.e_p_uj},
                            {"avg_power_mw", r.avg_power_mw},
                            {"lifetime_years", r.lifetime_years},
                            {"n_p", r.n_p},
                            {"b_drop", r.b_drop}};
        if (r.error) j["error"] = *r.error;
        arr.push_back(j);
      }
      emit(arr.dump(2) + "\n");
    }
    return kOk;
  }

  static SweepRow evaluate_exact(const Point& pt, const SweepOptions& opt) {
    SweepRow row = make_row(pt.config.procedure, pt.config.traffic.iat_ms, pt.p_out);
    try {
      const auto a = Analysis::run(pt.config);
      row.n_p = a.packets();
      row.b_drop = a.dist[StateId::drop()];
      row.avg_power_mw = a.average_power();
      row.e_p_uj = a.energy_per_packet(opt.filter);
      row.lifetime_years = a.lifetime_years(opt.lifetime);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  }

  SimConfig sim_config(const ModelConfig& c) const {
    SimConfig s;
    s.model = c;
    s.seed = o_.seed;
    s.n_steps = o_.steps;
    s.warmup_steps = o_.warmup;
    s.batches = o_.batches;
    return s;
  }

  static nlohmann::json report_json(const ComparisonReport& r, const Point& pt) {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : r.states) {
      states.push_back({{"state", label(s.state)},
                        {"analytic", s.analytic},
                        {"simulated", s.simulated},
                        {"std_error", s.std_error},
                        {"z", std::isfinite(s.z) ? nlohmann::json(s.z) : nlohmann::json("inf")}});
    }
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {
        {"procedure", std::string(to_string(pt.config.procedure))},
        {"iat_ms", pt.config.traffic.iat_ms},
        {"p_out", pt.p_out},
        {"seed", r.sim.seed},
        {"generator", r.sim.generator},
        {"steps", r.sim.steps},
        {"subframes", r.sim.subframes},
        {"packets_delivered", r.sim.packets_delivered},
        {"packets_dropped", r.sim.packets_dropped},
        {"e_p_uj", {{"simulated", num(r.sim.e_p_uj.value)},
                    {"std_error", num(r.sim.e_p_uj.std_error)},
                    {"analytic", num(r.analytic_e_p_uj)},
                    {"rel_error", num(r.e_p_rel_error)},
                    {"z", num(r.e_p_z)}}},
        {"avg_power_mw", {{"simulated", num(r.sim.avg_power_mw.value)},
                          {"std_error", num(r.sim.avg_power_mw.std_error)},
                          {"analytic", num(r.analytic_avg_power_mw)},
                          {"rel_error", num(r.avg_power_rel_error)},
                          {"z", num(r.avg_power_z)}}},
        {"active_wait_ms", {{"simulated", num(r.sim.active_wait_ms.value)},
                            {"std_error", num(r.sim.active_wait_ms.std_error)},
                            {"analytic", num(r.analytic_active_wait_ms)},
                            {"z", num(r.active_wait_z)}}},
        {"max_abs_state_z", num(r.max_abs_state_z)},
        {"z_threshold", r.z_threshold},
        {"flagged", r.flagged},
        {"notes", r.notes},
        {"passed", r.passed()},
        {"states", states},
    };
  }

  int simulate() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& pt : points()) {
      warn_degenerate(pt.config);
      arr.push_back(report_json(compare_with_analytic(sim_config(pt.config)), pt));
    }
    emit((arr.size() == 1 ? arr.front() : arr).dump(2) + "\n");
    return kOk;
  }

  int validate_cmd() const {
    bool ok = true;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& pt : points()) {
      const auto p = ChainParameters::from(pt.config);
      const auto tm = build_transition_matrix(p);
      const auto closed = closed_form_distribution(p);
      const auto numeric = solve_stationary(tm);
      const double dist_diff = closed.max_abs_diff(numeric);
      const double residual = balance_residual(tm, numeric);
      const auto a_closed = Analysis::run(pt.config);
      const auto a_num = Analysis::run(pt.config, Analysis::Solver::Numeric);
      double ep_rel = 0.0;
      try {
        ep_rel = std::abs(a_num.energy_per_packet() / a_closed.energy_per_packet() - 1.0);
      } catch (const UndefinedMetric&) {
      }
      const auto rep = compare_with_analytic(sim_config(pt.config));
      const bool pass_solver = dist_diff <= 1e-10 && residual <= 1e-10 && ep_rel <= 1e-8 &&
                               std::abs(closed.sum() - 1.0) <= 1e-12 &&
                               tm.max_row_sum_error() <= 1e-12;
      const bool pass = pass_solver && rep.passed();
      ok = ok && pass;
      arr.push_back({{"procedure", std::string(to_string(pt.config.procedure))},
                     {"iat_ms", pt.config.traffic.iat_ms},
                     {"p_out", pt.p_out},
                     {"closed_vs_numeric_inf_norm", dist_diff},
                     {"numeric_balance_residual", residual},
                     {"e_p_closed_vs_numeric_rel", ep_rel},
                     {"simulation", report_json(rep, pt)},
                     {"passed", pass}});
      // Per-state tables are noisy in the summary.
      arr.back()["simulation"].erase("states");
    }
    emit(nlohmann::json({{"passed", ok}, {"points", arr}}).dump(2) + "\n");
    if (!ok) err_ << "validate: one or more cross-checks failed\n";
    return ok ? kOk : kValidationFailed;
  }

  int dump() const {
    const auto pts = points();
    const auto& c = pts.front().config;
    warn_degenerate(c);
    std::ostringstream os;
    if (o_.table == "profile") {
      const auto prof = energy_profile(c);
      os << "state,energy_uj,duration_ms\n";
      for (std::size_t j = 0; j < prof.size(); ++j) {
        os << label(prof.space().state(j)) << ',' << format_g9(prof.energies()[j]) << ','
           << format_g9(prof.durations()[j]) << '\n';
      }
    } else if (o_.table == "matrix") {
      const auto tm = build_transition_matrix(c);
      const auto states = tm.space().states();
      os << "state";
      for (const auto& s : states) os << ",\"" << label(s) << '"';
      os << '\n';
      for (std::size_t r = 0; r < states.size(); ++r) {
        os << '"' << label(states[r]) << '"';
        for (std::size_t col = 0; col < states.size(); ++col) {
          os << ',' << format_g9(tm.matrix()(static_cast<Eigen::Index>(r),
                                             static_cast<Eigen::Index>(col)));
        }
        os << '\n';
      }
    } else if (o_.table == "distribution") {
      if (o_.solver != "closed" && o_.solver != "numeric") {
        throw ConfigError("--solver", "must be closed or numeric");
      }
      const auto d = o_.solver == "closed" ? closed_form_distribution(c)
                                           : solve_stationary(build_transition_matrix(c));
      os << "state,probability\n";
      for (std::size_t j = 0; j < d.size(); ++j) {
        os << '"' << label(d.space().state(j)) << "\"," << format_g9(d.at(j)) << '\n';
      }
    } else {
      throw ConfigError("--table", "must be profile, matrix or distribution");
    }
    emit(os.str());
    return kOk;
  }

 private:
  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Energy model of LTE IoT small-data transmission procedures"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config (missing keys use built-in defaults)");
    sub->add_option("--procedure", o.procedure, "sr | cp | up | all (default: config's; sweep: all)");
    sub->add_option("--iat", o.iat, "IAT in ms: value, comma list, or logspace:lo:hi:n");
    sub->add_option("--pout", o.pout, "comma list of outage probabilities");
    sub->add_option("--split", o.split, "outage split: all_collision | all_error | symmetric");
    sub->add_option("--filter", o.filter, "all | communication | inactive | off");
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "csv | json");
    sub->add_option("--seed", o.seed, "simulator seed");
    sub->add_option("--steps", o.steps, "simulator chain steps");
  };
  auto* analyze = app.add_subcommand("analyze", "evaluate all metrics for each config point");
  common(analyze);
  analyze->add_option("--emit-config", o.emit_config, "write the effective config as JSON");
  analyze->add_option("--lifetime-model", o.lifetime, "renewal | per-packet");
  auto* sweep = app.add_subcommand("sweep", "grid sweep to CSV");
  common(sweep);
  sweep->add_option("--lifetime-model", o.lifetime, "renewal | per-packet");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run with analytic comparison");
  common(simulate);
  simulate->add_option("--warmup", o.warmup, "warm-up steps");
  simulate->add_option("--batches", o.batches, "batch count for standard errors (>= 30)");
  auto* validate = app.add_subcommand("validate", "closed form vs numeric solve vs simulation");
  common(validate);
  validate->add_option("--warmup", o.warmup, "warm-up steps");
  validate->add_option("--batches", o.batches, "batch count for standard errors (>= 30)");
  auto* dump = app.add_subcommand("dump", "per-state tables as CSV");
  common(dump);
  dump->add_option("--table", o.table, "profile | matrix | distribution");
  dump->add_option("--solver", o.solver, "closed | numeric (distribution table)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  const Runner r(o, out, err);
  try {
    if (*analyze) return r.analyze();
    if (*sweep) return r.sweep();
    if (*simulate) return r.simulate();
    if (*validate) return r.validate_cmd();
    if (*dump) return r.dump();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

}  // namespace lteiot::cli
