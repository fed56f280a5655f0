#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lteiot/config.hpp"

namespace lteiot {

enum class StateKind { Off, RA, Backoff, CR, Connect, Active, LC, TX, Inactive, Drop };

// A state of the device chain.
//   RA(i)        i-th random-access attempt, i in [0, m]
//   Backoff(i,k) k-th backoff counter before attempt i, i in [1, m], k in [1, W_c-1]
//                (counter 0 of level i is the attempt RA(i) itself)
//   CR(i)        i-th connection request, i in [0, m]
//   LC(n)        n-th long DRX cycle, n in [0, N_c-1]
struct StateId {
  StateKind kind = StateKind::Off;
  std::int32_t i = 0;
  std::int32_t k = 0;

  static constexpr StateId off() { return {StateKind::Off, 0, 0}; }
  static constexpr StateId ra(std::int32_t i) { return {StateKind::RA, i, 0}; }
  static constexpr StateId backoff(std::int32_t i, std::int32_t k) {
    return {StateKind::Backoff, i, k};
  }
  static constexpr StateId cr(std::int32_t i) { return {StateKind::CR, i, 0}; }
  static constexpr StateId connect() { return {StateKind::Connect, 0, 0}; }
  static constexpr StateId active() { return {StateKind::Active, 0, 0}; }
  static constexpr StateId lc(std::int32_t n) { return {StateKind::LC, n, 0}; }
  static constexpr StateId tx() { return {StateKind::TX, 0, 0}; }
  static constexpr StateId inactive() { return {StateKind::Inactive, 0, 0}; }
  static constexpr StateId drop() { return {StateKind::Drop, 0, 0}; }

  friend constexpr bool operator==(const StateId&, const StateId&) = default;
};

inline std::string label(const StateId& s) {
  switch (s.kind) {
    case StateKind::Off: return "Off";
    case StateKind::RA: return "RA(" + std::to_string(s.i) + ")";
    case StateKind::Backoff:
      return "Backoff(" + std::to_string(s.i) + "," + std::to_string(s.k) + ")";
    case StateKind::CR: return "CR(" + std::to_string(s.i) + ")";
    case StateKind::Connect: return "Connect";
    case StateKind::Active: return "Active";
    case StateKind::LC: return "LC(" + std::to_string(s.i) + ")";
    case StateKind::TX: return "TX";
    case StateKind::Inactive: return "Inactive";
    case StateKind::Drop: return "Drop";
  }
  return "?";
}

// Dense indexing of the chain's states for given (m, W_c, N_c).
class StateSpace {
 public:
  StateSpace(std::int64_t m, std::int64_t w_c, std::int64_t n_c)
      : m_(static_cast<std::int32_t>(m)),
        w_(static_cast<std::int32_t>(w_c)),
        n_c_(static_cast<std::int32_t>(n_c)) {
    if (m < 0 || w_c < 1 || n_c < 0) throw std::invalid_argument("StateSpace: bad dimensions");
    ra0_ = 1;
    bo0_ = ra0_ + (m_ + 1);
    cr0_ = bo0_ + m_ * (w_ - 1);
    connect_ = cr0_ + (m_ + 1);
    active_ = connect_ + 1;
    lc0_ = active_ + 1;
    tx_ = lc0_ + n_c_;
    inactive_ = tx_ + 1;
    drop_ = inactive_ + 1;
    size_ = drop_ + 1;
  }

  explicit StateSpace(const ModelConfig& c)
      : StateSpace(c.access.m, c.access.w_c, n_long_cycles(c.timers)) {}

  std::size_t size() const { return static_cast<std::size_t>(size_); }
  std::int32_t m() const { return m_; }
  std::int32_t w_c() const { return w_; }
  std::int32_t n_c() const { return n_c_; }

  std::size_t index(const StateId& s) const {
    switch (s.kind) {
      case StateKind::Off: return 0;
      case StateKind::RA: check(s.i, 0, m_); return ra0_ + s.i;
      case StateKind::Backoff:
        check(s.i, 1, m_);
        check(s.k, 1, w_ - 1);
        return bo0_ + (s.i - 1) * (w_ - 1) + (s.k - 1);
      case StateKind::CR: check(s.i, 0, m_); return cr0_ + s.i;
      case StateKind::Connect: return connect_;
      case StateKind::Active: return active_;
      case StateKind::LC: check(s.i, 0, n_c_ - 1); return lc0_ + s.i;
      case StateKind::TX: return tx_;
      case StateKind::Inactive: return inactive_;
      case StateKind::Drop: return drop_;
    }
    throw std::logic_error("StateSpace::index: bad kind");
  }

  StateId state(std::size_t idx) const {
    const auto j = static_cast<std::int32_t>(idx);
    if (j < 0 || j >= size_) throw std::out_of_range("StateSpace::state");
    if (j == 0) return StateId::off();
    if (j < bo0_) return StateId::ra(j - ra0_);
    if (j < cr0_) {
      const std::int32_t r = j - bo0_;
      return StateId::backoff(1 + r / (w_ - 1), 1 + r % (w_ - 1));
    }
    if (j < connect_) return StateId::cr(j - cr0_);
    if (j == connect_) return StateId::connect();
    if (j == active_) return StateId::active();
    if (j < tx_) return StateId::lc(j - lc0_);
    if (j == tx_) return StateId::tx();
    if (j == inactive_) return StateId::inactive();
    return StateId::drop();
  }

  std::vector<StateId> states() const {
    std::vector<StateId> out;
    out.reserve(size());
    for (std::size_t j = 0; j < size(); ++j) out.push_back(state(j));
    return out;
  }

 private:
  static void check(std::int32_t v, std::int32_t lo, std::int32_t hi) {
    if (v < lo || v > hi) throw std::out_of_range("StateSpace: state index out of range");
  }

  std::int32_t m_, w_, n_c_;
  std::int32_t ra0_{}, bo0_{}, cr0_{}, connect_{}, active_{}, lc0_{}, tx_{}, inactive_{},
      drop_{}, size_{};
};

}  // namespace lteiot
