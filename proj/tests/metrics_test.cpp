#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "lteiot/metrics.hpp"

using namespace lteiot;

namespace {

ModelConfig table_config(ProcedureKind proc, double iat_ms) {
  auto c = default_config(proc, iat_ms);
  c.radio.p_rbp_mw = 32.18;
  c.radio.p_pre_mw = 32.18;
  return c;
}

ModelConfig with_pout(ModelConfig c, double p_out) {
  std::tie(c.access.p_c, c.access.p_e) = split_outage(p_out);
  return c;
}

const std::vector<ProcedureKind> kAll = {ProcedureKind::SR, ProcedureKind::CP, ProcedureKind::UP};

}  // namespace

TEST(ModeFilter, PartitionsStates) {
  const StateSpace sp(ModelConfig{});
  for (std::size_t j = 0; j < sp.size(); ++j) {
    const auto s = sp.state(j);
    const int hits = ModeFilter::off().contains(s) + ModeFilter::communication().contains(s) +
                     ModeFilter::inactive().contains(s);
    EXPECT_EQ(hits, 1) << label(s);
    EXPECT_TRUE(ModeFilter::all().contains(s));
  }
  EXPECT_TRUE(ModeFilter::communication().contains(StateId::drop()));
  EXPECT_TRUE(ModeFilter::inactive().contains(StateId::lc(3)));
  EXPECT_EQ(ModeFilter::off() | ModeFilter::communication() | ModeFilter::inactive(),
            ModeFilter::all());
}

TEST(EnergyPerPacket, SinglePacketLimitCommunicationOnly) {
  // p_tx -> 0 at IAT = 1e15 ms: one packet per connection, b00 = b_CR = b_connect = N_p.
  const double iat = 1e15;
  EXPECT_NEAR(energy_per_packet(table_config(ProcedureKind::SR, iat), ModeFilter::communication()),
              5382.44, 1e-6);
  const double cp =
      energy_per_packet(table_config(ProcedureKind::CP, iat), ModeFilter::communication());
  const double up =
      energy_per_packet(table_config(ProcedureKind::UP, iat), ModeFilter::communication());
  EXPECT_NEAR(cp, 2818.08, 1e-6);
  EXPECT_NEAR(up, 2818.08, 1e-6);
  EXPECT_NEAR(cp, up, 0.01);
}

TEST(EnergyPerPacket, UndefinedWithoutTraffic) {
  EXPECT_THROW(energy_per_packet(default_config(ProcedureKind::SR, INFINITY)), UndefinedMetric);
}

TEST(EnergyPerPacket, PartitionConsistency) {
  for (auto proc : kAll) {
    for (double iat : {320.0, 1e4, 3.6e6}) {
      const auto a = Analysis::run(with_pout(default_config(proc, iat), 0.1));
      const double parts = a.energy_per_packet(ModeFilter::off()) +
                           a.energy_per_packet(ModeFilter::communication()) +
                           a.energy_per_packet(ModeFilter::inactive());
      EXPECT_NEAR(a.energy_per_packet(), parts, 1e-12 * a.energy_per_packet());
    }
  }
}

TEST(EnergyPerPacket, ClosedFormAgreesWithNumericSolve) {
  for (auto proc : kAll) {
    for (double iat : {320.0, 1e4, 3.6e6, 1.728e8}) {
      for (double po : {0.0, 0.3}) {
        const auto c = with_pout(default_config(proc, iat), po);
        const double closed = Analysis::run(c).energy_per_packet();
        const double numeric = Analysis::run(c, Analysis::Solver::Numeric).energy_per_packet();
        EXPECT_NEAR(numeric / closed, 1.0, 1e-8) << iat;
      }
    }
  }
}

TEST(EnergyPerPacket, UpNeverAboveSr) {
  for (double iat : default_iat_grid()) {
    EXPECT_LE(energy_per_packet(default_config(ProcedureKind::UP, iat)),
              energy_per_packet(default_config(ProcedureKind::SR, iat)));
  }
}

TEST(AveragePower, Bounds) {
  EXPECT_EQ(average_power(default_config(ProcedureKind::SR, INFINITY)), 0.03);
  for (auto proc : kAll) {
    for (double iat : default_iat_grid()) {
      const auto c = with_pout(default_config(proc, iat), 0.3);
      const double pw = average_power(c);
      EXPECT_GE(pw, c.power.p_s);
      EXPECT_LE(pw, c.power.p_rx + c.power.p_tx_max);
    }
    EXPECT_NEAR(average_power(default_config(proc, 1.728e8)) / 0.03, 1.0, 0.05);
  }
}

TEST(AveragePower, IsRenewalRewardRatio) {
  const auto a = Analysis::run(default_config(ProcedureKind::CP, 5e4));
  EXPECT_NEAR(a.average_power() * a.time_rate(), a.energy_rate(), 1e-12 * a.energy_rate());
}

TEST(Lifetime, PsmBound) {
  EXPECT_NEAR(psm_bound_years(5.0, 0.03), 19.0, 0.1);
  EXPECT_NEAR(battery_lifetime_years(default_config(ProcedureKind::SR, INFINITY)),
              psm_bound_years(5.0, 0.03), 1e-9);
}

TEST(Lifetime, LinearInCapacity) {
  auto c = default_config(ProcedureKind::UP, 3.6e6);
  const double one = battery_lifetime_years(c);
  c.battery_wh *= 2;
  EXPECT_NEAR(battery_lifetime_years(c), 2 * one, 1e-12 * one);
}

TEST(Lifetime, CpOutlastsSrAtOneHour) {
  EXPECT_GE(battery_lifetime_years(default_config(ProcedureKind::CP, 3.6e6)),
            battery_lifetime_years(default_config(ProcedureKind::SR, 3.6e6)));
}

TEST(Lifetime, PerPacketVariantIsClose) {
  // Both variants price the same energy; they differ only through drops and
  // duration accounting.
  const auto a = Analysis::run(default_config(ProcedureKind::SR, 3.6e6));
  EXPECT_NEAR(a.lifetime_years(LifetimeModel::PerPacket) / a.lifetime_years(), 1.0, 0.01);
}

TEST(Reduction, Basics) {
  const auto sr = default_config(ProcedureKind::SR, 2e5);
  EXPECT_EQ(reduction(sr, sr), 0.0);
  EXPECT_LE(reduction(default_config(ProcedureKind::CP, 320), default_config(ProcedureKind::SR, 320),
                      ModeFilter::communication()),
            0.01);
  double best = 0.0;
  for (double iat : default_iat_grid()) {
    best = std::max(best, reduction(default_config(ProcedureKind::CP, iat),
                                    default_config(ProcedureKind::SR, iat)));
  }
  EXPECT_GE(best, 0.80);
  EXPECT_LE(best, 0.95);
}

TEST(Sweep, DefaultGridCardinalityAndOrder) {
  const auto rows = sweep(ModelConfig{}, default_iat_grid(), {0.3, 0.0, 0.1}, kAll);
  ASSERT_EQ(rows.size(), 270u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& a = rows[r - 1];
    const auto& b = rows[r];
    const auto key = [](const SweepRow& x) {
      return std::tuple(static_cast<int>(x.procedure), x.iat_ms, x.p_out);
    };
    if (a.procedure == b.procedure) {
      EXPECT_LT(key(a), key(b));
    }
  }
  EXPECT_EQ(rows.front().procedure, ProcedureKind::SR);
  EXPECT_EQ(rows.back().procedure, ProcedureKind::UP);
  for (const auto& r : rows) {
    EXPECT_FALSE(r.error.has_value());
    EXPECT_GT(r.e_p_uj, 0.0);
    EXPECT_GT(r.lifetime_years, 0.0);
  }
}

TEST(Sweep, EnergyNondecreasingInOutage) {
  const auto rows = sweep(ModelConfig{}, default_iat_grid(), {0.0, 0.1, 0.3}, kAll);
  for (std::size_t r = 0; r < rows.size(); r += 3) {
    EXPECT_LE(rows[r].e_p_uj, rows[r + 1].e_p_uj);
    EXPECT_LE(rows[r + 1].e_p_uj, rows[r + 2].e_p_uj);
  }
}

TEST(Sweep, SimilarAtLargeIat) {
  const auto rows = sweep(ModelConfig{}, {1.728e8}, {0.0}, kAll);
  double lo = INFINITY, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.e_p_uj);
    hi = std::max(hi, r.e_p_uj);
  }
  EXPECT_LE(hi / lo - 1.0, 0.10);
}

TEST(Sweep, RowErrorsDoNotStopTheSweep) {
  const auto rows = sweep(ModelConfig{}, {-5.0, 1e4}, {0.0, 1.5}, {ProcedureKind::CP});
  ASSERT_EQ(rows.size(), 4u);
  int errors = 0;
  for (const auto& r : rows) errors += r.error.has_value();
  EXPECT_EQ(errors, 3);
  EXPECT_FALSE(rows[2].error.has_value());  // (1e4, 0.0)
}

TEST(Sweep, CsvFormat) {
  const auto rows = sweep(ModelConfig{}, {320.0}, {0.0}, {ProcedureKind::UP});
  std::ostringstream os;
  write_sweep_csv(os, rows);
  std::istringstream in(os.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, "procedure,iat_ms,p_out,e_p_uj,avg_power_mw,lifetime_years,n_p,b_drop");
  EXPECT_EQ(line.substr(0, 10), "up,320,0,1");
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  EXPECT_EQ(format_g9(1.0 / 3.0), "0.333333333");
}

TEST(Sweep, Logspace) {
  const auto g = logspace(320, 1.728e8, 30);
  ASSERT_EQ(g.size(), 30u);
  EXPECT_EQ(g.front(), 320.0);
  EXPECT_EQ(g.back(), 1.728e8);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  EXPECT_THROW(logspace(0, 1, 3), std::invalid_argument);
}
