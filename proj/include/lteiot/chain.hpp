#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lteiot/config.hpp"
#include "lteiot/state.hpp"

namespace lteiot {

// Everything the chain needs from a ModelConfig, with the per-step
// probabilities evaluated once.
struct ChainParameters {
  double p_on = 0.0;
  double p_tx = 0.0;
  double q_tx = 1.0;        // 1 - p_tx, computed without cancellation
  double tx_odds = 0.0;     // p_tx / (1 - p_tx)
  double p_a = 0.0;
  double p_lc = 0.0;
  double p_c = 0.0;
  double p_e = 0.0;
  std::int64_t m = 0;
  std::int64_t w_c = 1;
  std::int64_t n_c = 0;

  // Probability that one connection attempt (RA + CR) fails.
  double s() const { return p_e * (1.0 - p_c) + p_c; }

  static ChainParameters from(const ModelConfig& c) {
    validate(c);
    ChainParameters p;
    const double lambda = c.traffic.lambda_app();
    const double t_i = static_cast<double>(c.timers.t_i);
    p.p_on = lteiot::p_on(c.traffic);
    p.p_tx = lteiot::p_tx(c.traffic, c.timers);
    p.q_tx = std::exp(-lambda * t_i);
    p.tx_odds = std::expm1(lambda * t_i);
    p.p_a = lteiot::p_a(c.traffic, c.timers);
    p.p_lc = lteiot::p_lc(c.traffic, c.timers);
    p.p_c = c.access.p_c;
    p.p_e = c.access.p_e;
    p.m = c.access.m;
    p.w_c = c.access.w_c;
    p.n_c = n_long_cycles(c.timers);
    return p;
  }
};

// (1 - (1 - p)^n) / p, with the p -> 0 limit n.
inline double truncated_geometric_sum(double p, std::int64_t n) {
  if (n <= 0) return 0.0;
  if (p <= 0.0) return static_cast<double>(n);
  if (p >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(n) * std::log1p(-p)) / p;
}

// Probability per state, indexed by a StateSpace.
class StationaryDistribution {
 public:
  StationaryDistribution(StateSpace space, std::vector<double> probs)
      : space_(space), probs_(std::move(probs)) {
    if (probs_.size() != space_.size()) {
      throw std::invalid_argument("StationaryDistribution: size mismatch");
    }
  }

  const StateSpace& space() const { return space_; }
  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& values() const { return probs_; }

  double operator[](const StateId& s) const { return probs_[space_.index(s)]; }
  double at(std::size_t idx) const { return probs_.at(idx); }

  double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  double max_abs_diff(const StationaryDistribution& other) const {
    if (other.size() != size()) throw std::invalid_argument("max_abs_diff: size mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < probs_.size(); ++j) {
      d = std::max(d, std::abs(probs_[j] - other.probs_[j]));
    }
    return d;
  }

 private:
  StateSpace space_;
  std::vector<double> probs_;
};

// Row-stochastic transition matrix over a StateSpace.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(StateSpace space)
      : space_(space), p_(Eigen::MatrixXd::Zero(space.size(), space.size())) {}

  const StateSpace& space() const { return space_; }
  std::size_t size() const { return space_.size(); }
  const Eigen::MatrixXd& matrix() const { return p_; }

  double operator()(const StateId& from, const StateId& to) const {
    return p_(space_.index(from), space_.index(to));
  }

  void add(const StateId& from, const StateId& to, double prob) {
    p_(space_.index(from), space_.index(to)) += prob;
  }

  double max_row_sum_error() const {
    return (p_.rowwise().sum().array() - 1.0).abs().maxCoeff();
  }

 private:
  StateSpace space_;
  Eigen::MatrixXd p_;
};

namespace detail {

// A failed attempt at level i spreads uniformly over the W_c backoff counters
// of level i + 1; counter 0 is the retry attempt itself.
inline void add_backoff_fanout(TransitionMatrix& tm, const StateId& from, std::int32_t level,
                               double prob) {
  const std::int32_t w = tm.space().w_c();
  const double share = prob / w;
  tm.add(from, StateId::ra(level), share);
  for (std::int32_t k = 1; k < w; ++k) tm.add(from, StateId::backoff(level, k), share);
}

}  // namespace detail

inline TransitionMatrix build_transition_matrix(const ChainParameters& p) {
  const StateSpace space(p.m, p.w_c, p.n_c);
  TransitionMatrix tm(space);
  const auto m = static_cast<std::int32_t>(p.m);
  const auto n_c = static_cast<std::int32_t>(p.n_c);

  tm.add(StateId::off(), StateId::ra(0), p.p_on);
  tm.add(StateId::off(), StateId::off(), 1.0 - p.p_on);

  for (std::int32_t i = 0; i <= m; ++i) {
    tm.add(StateId::ra(i), StateId::cr(i), 1.0 - p.p_c);
    tm.add(StateId::cr(i), StateId::connect(), 1.0 - p.p_e);
    if (i < m) {
      detail::add_backoff_fanout(tm, StateId::ra(i), i + 1, p.p_c);
      detail::add_backoff_fanout(tm, StateId::cr(i), i + 1, p.p_e);
    } else {
      tm.add(StateId::ra(i), StateId::drop(), p.p_c);
      tm.add(StateId::cr(i), StateId::drop(), p.p_e);
    }
  }
  for (std::int32_t i = 1; i <= m; ++i) {
    for (std::int32_t k = 1; k < space.w_c(); ++k) {
      tm.add(StateId::backoff(i, k), k == 1 ? StateId::ra(i) : StateId::backoff(i, k - 1), 1.0);
    }
  }

  tm.add(StateId::connect(), StateId::active(), p.p_tx);
  tm.add(StateId::connect(), StateId::inactive(), p.q_tx);
  tm.add(StateId::tx(), StateId::active(), p.p_tx);
  tm.add(StateId::tx(), StateId::inactive(), p.q_tx);

  if (n_c == 0) {
    // No long cycles fit: the inactivity window ends straight after T_DRXi.
    tm.add(StateId::active(), StateId::tx(), 1.0);
  } else {
    tm.add(StateId::active(), StateId::tx(), p.p_a);
    tm.add(StateId::active(), StateId::lc(0), 1.0 - p.p_a);
    for (std::int32_t n = 0; n + 1 < n_c; ++n) {
      tm.add(StateId::lc(n), StateId::tx(), p.p_lc);
      tm.add(StateId::lc(n), StateId::lc(n + 1), 1.0 - p.p_lc);
    }
    tm.add(StateId::lc(n_c - 1), StateId::tx(), 1.0);
  }

  tm.add(StateId::drop(), StateId::off(), 1.0);
  tm.add(StateId::inactive(), StateId::off(), 1.0);
  return tm;
}

inline TransitionMatrix build_transition_matrix(const ModelConfig& c) {
  return build_transition_matrix(ChainParameters::from(c));
}

inline StationaryDistribution absorbing_off(const StateSpace& space) {
  std::vector<double> b(space.size(), 0.0);
  b[0] = 1.0;
  return {space, std::move(b)};
}

// ||pi P - pi||_inf
inline double balance_residual(const TransitionMatrix& tm, const StationaryDistribution& d) {
  const Eigen::Map<const Eigen::RowVectorXd> pi(d.values().data(),
                                                static_cast<Eigen::Index>(d.size()));
  return (pi * tm.matrix() - pi).cwiseAbs().maxCoeff();
}

namespace detail {

// Grassmann-Taksar-Heyman elimination. Subtraction-free, so every entry keeps
// full relative accuracy even when masses span 1e-14..1 (small IAT, where
// b_connect is tiny next to the DRX states). Eliminates from the highest index
// down to Off. Returns nullopt when a censored chain has no way back down
// (reducible chain, e.g. an endless session).
inline std::optional<std::vector<double>> gth_solve(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = n - 1; k > 0; --k) {
    const double out = a.row(k).head(k).sum();
    if (!(out > 0.0)) return std::nullopt;
    a.col(k).head(k) /= out;
    a.topLeftCorner(k, k).noalias() += a.col(k).head(k) * a.row(k).head(k);
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  x[0] = 1.0;
  double total = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) v += x[static_cast<std::size_t>(i)] * a(i, k);
    x[static_cast<std::size_t>(k)] = v;
    total += v;
  }
  for (double& v : x) v /= total;
  return x;
}

// Dense solve of pi (P - I) = 0 with the Off balance equation replaced by
// sum(pi) = 1, plus one refinement pass.
inline std::vector<double> lu_solve(const Eigen::MatrixXd& p) {
  const auto n = p.rows();
  Eigen::MatrixXd a = p.transpose();
  a.diagonal().array() -= 1.0;
  a.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(rhs);
  x += lu.solve(rhs - a * x);

  std::vector<double> b(x.data(), x.data() + n);
  double total = 0.0;
  for (double& v : b) {
    v = std::max(v, 0.0);
    total += v;
  }
  for (double& v : b) v /= total;
  return b;
}

}  // namespace detail

// Generic numeric route, independent of the closed form: GTH elimination on
// the transition matrix, LU on the balance equations if the chain is reducible.
inline StationaryDistribution solve_stationary(const TransitionMatrix& tm) {
  const auto& space = tm.space();
  const double off_exit = 1.0 - tm(StateId::off(), StateId::off());
  if (off_exit <= 0.0) return absorbing_off(space);
  auto b = detail::gth_solve(tm.matrix());
  if (!b) b = detail::lu_solve(tm.matrix());
  return {space, std::move(*b)};
}

// Closed-form steady state.
inline StationaryDistribution closed_form_distribution(const ChainParameters& p) {
  const StateSpace space(p.m, p.w_c, p.n_c);
  if (p.p_on <= 0.0) return absorbing_off(space);

  std::vector<double> b(space.size(), 0.0);
  auto at = [&](const StateId& s) -> double& { return b[space.index(s)]; };
  const auto m = static_cast<std::int32_t>(p.m);
  const auto n_c = static_cast<std::int32_t>(p.n_c);
  const double w = static_cast<double>(p.w_c);
  const double lc_sum = truncated_geometric_sum(p.p_lc, p.n_c);
  // With N_c = 0 the whole Active exit goes to TX.
  const double lc_entry = n_c > 0 ? (1.0 - p.p_a) : 0.0;

  if (p.q_tx <= 0.0) {
    // p_tx == 1: the connection is never released; Off..Connect are transient.
    const double active = 1.0 / (2.0 + lc_entry * lc_sum);
    at(StateId::active()) = active;
    at(StateId::tx()) = active;
    for (std::int32_t n = 0; n < n_c; ++n) {
      at(StateId::lc(n)) = std::pow(1.0 - p.p_lc, n) * lc_entry * active;
    }
    return {space, std::move(b)};
  }

  const double s = p.s();
  const double s_m1 = std::pow(s, static_cast<double>(m + 1));
  const double s_m = std::pow(s, static_cast<double>(m));
  const double aux =
      2.0 - p.p_tx + p.tx_odds * (3.0 - p.p_tx + lc_entry * lc_sum);
  const double b_off =
      1.0 / (1.0 + p.p_on * (1.0 + s_m1 + (1.0 - s_m1) * (1.0 - p.p_c) / (1.0 - s) +
                             s * (1.0 - s_m) * (1.0 + w) / (2.0 * (1.0 - s)) +
                             (1.0 - s_m1) * aux));
  const double b00 = p.p_on * b_off;

  at(StateId::off()) = b_off;
  double connect = 0.0;
  for (std::int32_t i = 0; i <= m; ++i) {
    const double level = std::pow(s, static_cast<double>(i)) * b00;
    at(StateId::ra(i)) = level;
    if (i >= 1) {
      for (std::int32_t k = 1; k < p.w_c; ++k) {
        at(StateId::backoff(i, k)) = (w - k) / w * level;
      }
    }
    const double cr = (1.0 - p.p_c) * level;
    at(StateId::cr(i)) = cr;
    connect += (1.0 - p.p_e) * cr;
  }
  at(StateId::drop()) = s_m1 * b00;
  at(StateId::connect()) = connect;
  const double active = p.tx_odds * connect;
  at(StateId::active()) = active;
  for (std::int32_t n = 0; n < n_c; ++n) {
    at(StateId::lc(n)) = std::pow(1.0 - p.p_lc, n) * lc_entry * active;
  }
  at(StateId::tx()) = active;
  at(StateId::inactive()) = p.q_tx * (active + connect);
  return {space, std::move(b)};
}

inline StationaryDistribution closed_form_distribution(const ModelConfig& c) {
  return closed_form_distribution(ChainParameters::from(c));
}

// Expected packets delivered per chain step: b_connect / (1 - p_tx).
inline double n_p(const StationaryDistribution& d, double p_tx) {
  if (!(p_tx >= 0.0 && p_tx < 1.0)) {
    throw std::invalid_argument("n_p: p_tx must lie in [0, 1) (p_tx = 1 is an endless session)");
  }
  return d[StateId::connect()] / (1.0 - p_tx);
}

inline double n_p(const StationaryDistribution& d, const ChainParameters& p) {
  if (p.q_tx <= 0.0) return n_p(d, 1.0);
  return d[StateId::connect()] / p.q_tx;
}

}  // namespace lteiot
