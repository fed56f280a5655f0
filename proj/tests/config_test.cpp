#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lteiot/config.hpp"
#include "lteiot/config_json.hpp"

using namespace lteiot;

namespace {

TrafficModel iat(double ms) { return {ms}; }

TimerConfig timers(std::int64_t t_i, std::int64_t t_drxi, std::int64_t t_lc, std::int64_t t_ond) {
  TimerConfig t;
  t.t_i = t_i;
  t.t_drxi = t_drxi;
  t.t_lc = t_lc;
  t.t_ond = t_ond;
  return t;
}

}  // namespace

TEST(Traffic, RateAndIatAreReciprocal) {
  for (double ms : {0.5, 1.0, 320.0, 3.6e6}) {
    const auto t = iat(ms);
    EXPECT_DOUBLE_EQ(t.lambda_app() * t.iat_ms, 1.0);
    EXPECT_DOUBLE_EQ(TrafficModel::from_rate(t.lambda_app()).iat_ms, ms);
  }
}

TEST(Procedure, ConnectionDelays) {
  EXPECT_EQ(t_cr_rx_ms(ProcedureKind::SR), 41.0);
  EXPECT_EQ(t_cr_rx_ms(ProcedureKind::CP), 16.0);
  EXPECT_EQ(t_cr_rx_ms(ProcedureKind::UP), 16.0);
  EXPECT_EQ(parse_procedure("cp"), ProcedureKind::CP);
  EXPECT_THROW(parse_procedure("xx"), std::invalid_argument);
}

TEST(Probabilities, POn) {
  EXPECT_EQ(p_on(iat(std::numeric_limits<double>::infinity())), 0.0);
  EXPECT_NEAR(p_on(iat(320)), 0.00312012, 1e-8);
  EXPECT_NEAR(p_on(iat(1)), 0.632121, 1e-6);
}

TEST(Probabilities, PTx) {
  EXPECT_EQ(p_tx(iat(320), timers(0, 0, 80, 4)), 0.0);
  EXPECT_NEAR(p_tx(iat(100000), timers(10000, 200, 80, 4)), 0.0951626, 1e-7);
  EXPECT_NEAR(p_tx(iat(10000), timers(10000, 200, 80, 4)), 0.632121, 1e-6);
}

TEST(Probabilities, PA) {
  EXPECT_EQ(p_a(iat(320), timers(10000, 0, 80, 4)), 0.0);
  EXPECT_NEAR(p_a(iat(320), timers(10000, 200, 80, 4)), 0.464739, 1e-6);
  EXPECT_NEAR(p_a(iat(3.6e6), timers(10000, 200, 80, 4)), 5.5554e-5, 1e-9);
}

TEST(Probabilities, PLc) {
  EXPECT_EQ(p_lc(iat(320), timers(10000, 200, 0, 0)), 0.0);
  EXPECT_NEAR(p_lc(iat(320), timers(10000, 200, 80, 4)), 0.2308736, 1e-7);
  EXPECT_NEAR(p_lc(iat(84), timers(10000, 200, 80, 4)), 0.632121, 1e-6);
}

TEST(Probabilities, Outage) {
  EXPECT_EQ(outage(0, 0), 0.0);
  EXPECT_NEAR(outage(0.1, 0.1), 0.19, 1e-15);
  EXPECT_NEAR(outage(0.3, 0.0), 0.3, 1e-15);
}

TEST(Probabilities, SplitOutage) {
  for (auto pol : {OutageSplit::AllCollision, OutageSplit::AllError, OutageSplit::Symmetric}) {
    const auto [c, e] = split_outage(0.0, pol);
    EXPECT_EQ(c, 0.0);
    EXPECT_EQ(e, 0.0);
  }
  const auto [c, e] = split_outage(0.19, OutageSplit::Symmetric);
  EXPECT_NEAR(c, 0.1, 1e-12);
  EXPECT_NEAR(e, 0.1, 1e-12);
  const auto [c2, e2] = split_outage(0.3, OutageSplit::AllCollision);
  EXPECT_EQ(c2, 0.3);
  EXPECT_EQ(e2, 0.0);
  EXPECT_THROW(split_outage(1.0), std::invalid_argument);
  EXPECT_THROW(split_outage(-0.1), std::invalid_argument);
}

TEST(Probabilities, SplitOutageRoundTripProperty) {
  for (auto pol : {OutageSplit::AllCollision, OutageSplit::AllError, OutageSplit::Symmetric}) {
    for (int i = 0; i <= 99; ++i) {
      const double x = 0.01 * i;
      const auto [c, e] = split_outage(x, pol);
      EXPECT_NEAR(outage(c, e), x, 1e-12);
    }
  }
}

TEST(Probabilities, RangeAndMonotonicityProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> log_iat(0.0, 8.5);
  const auto t = TimerConfig{};
  for (int n = 0; n < 500; ++n) {
    const double a = std::pow(10.0, log_iat(rng));
    const double b = a * 1.5;  // larger IAT, smaller rate
    for (auto f : {+[](TrafficModel x, TimerConfig tm) { return p_on(x) + 0 * tm.t_i; },
                   +[](TrafficModel x, TimerConfig tm) { return p_tx(x, tm); },
                   +[](TrafficModel x, TimerConfig tm) { return p_a(x, tm); },
                   +[](TrafficModel x, TimerConfig tm) { return p_lc(x, tm); }}) {
      const double pa_ = f(iat(a), t), pb_ = f(iat(b), t);
      EXPECT_GE(pa_, 0.0);
      EXPECT_LE(pa_, 1.0);
      EXPECT_GE(pa_, pb_);
    }
    EXPECT_LE(p_a(iat(a), t), p_tx(iat(a), t));
  }
}

TEST(Timers, LongCycles) {
  EXPECT_EQ(n_long_cycles(timers(10000, 200, 80, 4)), 116);
  EXPECT_EQ(n_long_cycles(timers(200, 200, 80, 4)), 0);
  EXPECT_EQ(n_long_cycles(timers(284, 200, 80, 4)), 1);
  EXPECT_THROW(n_long_cycles(timers(10000, 200, 0, 0)), std::invalid_argument);
  const auto deg = long_cycle_count(timers(100, 200, 80, 4));
  EXPECT_EQ(deg.n_c, 0);
  EXPECT_TRUE(deg.degenerate);
}

TEST(Timers, Spare) {
  EXPECT_EQ(t_spare(timers(10000, 200, 80, 4)), 56);
  EXPECT_EQ(t_spare(timers(200, 200, 80, 4)), 0);
  EXPECT_EQ(t_spare(timers(10004, 200, 80, 4)), 60);
}

TEST(Timers, SpareIsFloorRemainderProperty) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> u(0, 20000);
  for (int n = 0; n < 1000; ++n) {
    auto t = timers(0, u(rng) % 2000, 1 + u(rng) % 200, u(rng) % 20);
    t.t_i = t.t_drxi + u(rng);
    const auto nc = n_long_cycles(t);
    const auto sp = t_spare(t);
    EXPECT_GE(sp, 0);
    if (nc >= 1) {
      EXPECT_LT(sp, t.t_lc + t.t_ond);
    }
    EXPECT_EQ(t.t_drxi + nc * (t.t_lc + t.t_ond) + sp, t.t_i);
  }
}

TEST(Validation, DefaultsAreValid) { EXPECT_NO_THROW(validate(ModelConfig{})); }

TEST(Validation, NamesOffendingKey) {
  auto expect_key = [](ModelConfig c, const std::string& key) {
    try {
      validate(c);
      ADD_FAILURE() << "expected ConfigError for " << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
    }
  };
  ModelConfig c;
  c.access.p_c = 1.0;
  expect_key(c, "p_c");
  c = {};
  c.power.p_i = 0.01;
  expect_key(c, "p_i");
  c = {};
  c.timers.t_i = 100;
  expect_key(c, "t_i");
  c = {};
  c.sizes.b_comp_cp = 50;
  expect_key(c, "b_comp_cp");
  c = {};
  c.traffic.iat_ms = 0;
  expect_key(c, "iat_ms");
  c = {};
  c.radio.alpha = 1.5;
  expect_key(c, "radio.alpha");
  c = {};
  c.access.w_c = 0;
  expect_key(c, "w_c");
}

TEST(ConfigJson, EmptyObjectGivesDefaults) {
  const auto c = config_from_json(nlohmann::json::object());
  EXPECT_TRUE(c == ModelConfig{});
}

TEST(ConfigJson, ReadsKeys) {
  const auto c = config_from_json(nlohmann::json::parse(R"({
    "procedure": "up", "iat_ms": 320, "t_i": 5000, "p_c": 0.1, "m": 3,
    "radio": {"distance_km": 1.0, "p_rbp_mw": 40}
  })"));
  EXPECT_EQ(c.procedure, ProcedureKind::UP);
  EXPECT_EQ(c.traffic.iat_ms, 320);
  EXPECT_EQ(c.timers.t_i, 5000);
  EXPECT_EQ(c.access.p_c, 0.1);
  EXPECT_EQ(c.access.m, 3);
  EXPECT_EQ(c.radio.distance_km, 1.0);
  EXPECT_EQ(c.radio.p_rbp_mw, 40.0);
  EXPECT_TRUE(std::isnan(c.radio.p_pre_mw));
  EXPECT_EQ(c.timers.t_drxi, 200);  // default kept
}

TEST(ConfigJson, Errors) {
  auto key_of = [](const char* text) {
    try {
      config_from_json(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of(R"({"t_x": 1})"), "t_x");
  EXPECT_EQ(key_of(R"({"t_i": 2.5})"), "t_i");
  EXPECT_EQ(key_of(R"({"p_c": "a"})"), "p_c");
  EXPECT_EQ(key_of(R"({"p_e": 1.2})"), "p_e");
  EXPECT_EQ(key_of(R"({"procedure": "zz"})"), "procedure");
  EXPECT_EQ(key_of(R"({"radio": {"alpha": 3}})"), "radio.alpha");
  EXPECT_EQ(key_of(R"({"radio": {"foo": 3}})"), "radio.foo");
  EXPECT_EQ(key_of(R"([1,2])"), "<root>");
}

TEST(ConfigJson, RoundTripProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    ModelConfig c;
    c.procedure = static_cast<ProcedureKind>(n % 3);
    c.traffic.iat_ms = 1.0 + 1e7 * u(rng);
    c.access.p_c = 0.5 * u(rng);
    c.access.p_e = 0.5 * u(rng);
    c.timers.t_pre = 5.0 * u(rng);
    c.radio.distance_km = 0.1 + u(rng);
    if (n % 2) c.radio.p_rbp_mw = 50 * u(rng);
    const auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
    EXPECT_TRUE(back == c) << to_json(c).dump();
  }
}
