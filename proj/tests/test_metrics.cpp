#include "doctest.h"

#include <cmath>

#include "bfg/metrics.hpp"
#include "bfg/runner.hpp"
#include "bfg/strategies.hpp"
#include "helpers.hpp"

using namespace bfg;
using namespace bfg::testing;

namespace {

GameResult constant_half_vs_oakes2(int rounds) {
  GameConfig config;
  config.rounds = rounds;
  config.seed = 1;
  config.mode = GameMode::SkepticTest;
  config.forecaster = "point:0.5";
  config.reality = "oakes2";
  config.skeptic = "skeptic_zero";
  return run_in_memory(config);
}

}  // namespace

TEST_CASE("g_value worked examples") {
  CHECK(g_value(0.3, 1.0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(g_value(0.7, 0.0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(g_value(0.7, 1.0) == doctest::Approx(-0.3).epsilon(1e-15));
}

TEST_CASE("interval selectors honor their closure flags") {
  const auto co = IntervalSelector::closed_open(0.0, 0.5);
  CHECK(co.contains(0.0));
  CHECK(co.contains(0.49));
  CHECK(!co.contains(0.5));
  const auto cc = IntervalSelector::closed(0.5, 1.0);
  CHECK(cc.contains(0.5));
  CHECK(cc.contains(1.0));
  CHECK(co.label() == "[0,0.5)");
  CHECK(cc.label() == "[0.5,1]");
}

TEST_CASE("calibration ratio on the failing constant forecast") {
  const GameResult result = constant_half_vs_oakes2(100);
  const auto high = IntervalSelector::closed(0.5, 1.0);
  const auto ratio = calibration_ratio(result.trace, high, 100);
  REQUIRE(ratio.has_value());
  CHECK(*ratio == doctest::Approx(-0.5).epsilon(1e-15));

  // no forecast ever lands in (0.9, 1)
  const auto empty = calibration_ratio(result.trace,
                                       IntervalSelector::open(0.9, 1.0), 100);
  CHECK(!empty.has_value());

  CHECK(kf_error(result.trace, high, 100) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kf_error(result.trace, IntervalSelector::open(0.9, 1.0), 100) == 0.0);
}

TEST_CASE("perfectly sharp forecasts have zero calibration error") {
  // forecast 1 when the outcome is 1, 0 when it is 0
  const GameTrace trace = make_trace(
      {{FiniteDistribution::point_mass(1.0), 1},
       {FiniteDistribution::point_mass(0.0), 0},
       {FiniteDistribution::point_mass(1.0), 1}},
      {1.0, 0.0, 1.0});
  const auto all = IntervalSelector::closed(0.0, 1.0);
  const auto ratio = calibration_ratio(trace, all, 3);
  REQUIRE(ratio.has_value());
  CHECK(*ratio == 0.0);
  CHECK(kf_error(trace, all, 3) == 0.0);
}

TEST_CASE("theta running sums and the cell convention") {
  const GameTrace high = make_trace({{FiniteDistribution::point_mass(0.7), 0}},
                                    {0.7});
  const auto [t1a, t2a] = theta(high, 1);
  CHECK(t1a == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(t2a == 0.0);

  const GameTrace boundary = make_trace(
      {{FiniteDistribution::point_mass(0.5), 1}}, {0.5});
  const auto [t1b, t2b] = theta(boundary, 1);
  CHECK(t1b == 0.0);
  CHECK(t2b == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("theta identity against an independent summation") {
  GameConfig config;
  config.rounds = 2000;
  config.seed = 17;
  const GameResult result = run_in_memory(config);
  const auto [t1, t2] = theta(result.trace, config.rounds);
  CompensatedSum g_sum;
  for (const RoundRecord& rec : result.trace.records) {
    g_sum.add(g_value(rec.sampled_p.value(), rec.omega.real()));
  }
  CHECK(t2 - t1 == doctest::Approx(g_sum.value()).epsilon(1e-12));
  const RoundRecord& last = result.trace.records.back();
  CHECK(last.theta1 == doctest::Approx(t1).epsilon(1e-12));
  CHECK(last.theta2 == doctest::Approx(t2).epsilon(1e-12));
}

TEST_CASE("support straddle with the padding rule") {
  CHECK(p_plus_minus(FiniteDistribution({0.4, 0.6}, {0.5, 0.5})) ==
        std::pair{0.4, 0.6});
  CHECK(p_plus_minus(FiniteDistribution({0.2, 0.3}, {0.5, 0.5})) ==
        std::pair{0.3, 1.0});
  CHECK(p_plus_minus(FiniteDistribution::point_mass(0.5)) ==
        std::pair{0.5, 1.0});
  CHECK(p_plus_minus(FiniteDistribution::point_mass(0.7)) ==
        std::pair{0.0, 0.7});
}

TEST_CASE("drift check worked examples") {
  // two-point forecast, tight equality case
  const GameTrace tight = make_trace(
      {{FiniteDistribution({0.4, 0.6}, {0.5, 0.5}), 1}}, {0.4});
  const DriftReport tight_report = drift_check(tight, 1);
  CHECK(tight_report.violations == 0);
  CHECK(tight_report.min_margin == doctest::Approx(0.0).epsilon(1e-12));

  const GameTrace point7 = make_trace(
      {{FiniteDistribution::point_mass(0.7), 0}}, {0.7});
  const DriftReport r7 = drift_check(point7, 1);
  CHECK(r7.violations == 0);
  CHECK(r7.min_margin == doctest::Approx(0.7 - 0.35).epsilon(1e-12));

  const GameTrace point5 = make_trace(
      {{FiniteDistribution::point_mass(0.5), 1}}, {0.5});
  const DriftReport r5 = drift_check(point5, 1);
  CHECK(r5.violations == 0);
  CHECK(r5.min_margin == doctest::Approx(0.5 - 0.25).epsilon(1e-12));

  // a non-adversarial outcome CAN violate the drift inequality
  const GameTrace wrong = make_trace(
      {{FiniteDistribution::point_mass(0.7), 1}}, {0.7});
  CHECK(drift_check(wrong, 1).violations == 1);
}

TEST_CASE("drift inequality holds under the adversarial outcome rule") {
  RandomSource rng(808);
  OakesReality oakes;
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 1 + static_cast<int>(rng.next_unit() * 5);
    std::vector<double> pts;
    std::vector<double> w(m, 1.0 / m);
    for (int i = 0; i < m; ++i) pts.push_back(rng.next_unit());
    double residual = 1.0;
    for (int i = 0; i + 1 < m; ++i) residual -= w[i];
    w.back() = residual;
    FiniteDistribution dist(pts, w);

    History h;
    h.n = 1;
    h.forecast = &dist;
    const int omega = oakes.announce_outcome(h).value();

    // brute-force both sides of the inequality
    double lhs = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      lhs += dist.weights()[i] * g_value(dist.support()[i], omega);
    }
    const auto [p_minus, p_plus] = p_plus_minus(dist);
    CHECK(lhs >= 0.5 * (p_plus - p_minus) - 1e-12);

    const GameTrace trace = make_trace({{dist, omega}}, {dist.support()[0]});
    CHECK(drift_check(trace, 1).violations == 0);
  }
}

TEST_CASE("growth summary: zero-bet run has no structured levels") {
  GameConfig config;
  config.rounds = 50;
  config.skeptic = "skeptic_zero";
  config.forecaster = "point:0.5";
  config.reality = "oakes2";
  const GameResult result = run_in_memory(config);
  const GrowthSummary summary = growth_summary(result);
  CHECK(summary.levels.empty());
  CHECK(summary.log_k_over_n == doctest::Approx(std::log(2.0) / 50).epsilon(1e-12));
}

TEST_CASE("growth summary matches the closed-form product on a synthetic run") {
  // alternate high-cell and low-cell rounds, each with (omega - p) = +-0.1
  // toward the betting side, so every account compounds at 1 + 0.1 eps_k
  const int depth = 8;
  const int rounds = 2000;
  CapitalLedger ledger(GameMode::SkepticTest, depth, depth);
  GameTrace trace;
  trace.initial_log_q = ledger.log_q_total();
  trace.initial_log_f = ledger.log_f_total();
  FiniteDistribution dist({0.45, 0.65}, {0.5, 0.5});
  for (int n = 1; n <= rounds; ++n) {
    const bool high = n % 2 == 1;
    std::vector<double> dq1(depth), dq2(depth), df(depth, 0.0);
    for (int k = 1; k <= depth; ++k) {
      const double eps = std::ldexp(1.0, -k);
      dq1[k - 1] = high ? eps * 0.1 : 0.0;   // 1 - eps*(omega - p), err = -0.1
      dq2[k - 1] = high ? 0.0 : eps * 0.1;   // 1 + eps*(omega - p), err = +0.1
    }
    ledger.apply_q_deltas(dq1, dq2, n);
    ledger.apply_f_deltas(df, n);
    ledger.refresh_totals();
    trace.records.push_back(RoundRecord{
        .n = n,
        .distribution = dist,
        .omega = Outcome(high ? 0 : 1),
        .sampled_p = Prob(high ? 0.65 : 0.45),
        .s_at_p = 0.0,
        .f_at_p = 0.0,
        .q_increment = 0.0,
        .f_increment = 0.0,
        .log_capital_q = ledger.log_q_total(),
        .log_capital_f = ledger.log_f_total(),
        .log_capital_k = ledger.log_k_total(),
        .delta_n = dist.min_gap(),
        .theta1 = 0.0,
        .theta2 = 0.0,
        .f_expectation = 0.0,
        .dead_q1_mask = 0,
        .dead_q2_mask = 0,
        .dead_f_mask = 0,
    });
  }
  const GrowthSummary summary =
      growth_summary(GameResult{GameMode::SkepticTest, std::move(trace), ledger});
  CHECK(summary.delta_hat == doctest::Approx(0.2).epsilon(1e-12));
  for (const GrowthLevel& level : summary.levels) {
    const double expected = std::log1p(0.1 * level.epsilon);
    CHECK(level.rate == doctest::Approx(expected).epsilon(1e-9));
    // inside [0.5 eps delta - 2 eps^2, 0.5 eps delta]
    CHECK(level.rate >= level.bound - 1e-12);
    CHECK(level.rate <= 0.5 * level.epsilon * summary.delta_hat + 1e-12);
  }
}

TEST_CASE("kf error equals the count-weighted ratio") {
  GameConfig config;
  config.rounds = 500;
  config.seed = 5;
  const GameResult result = run_in_memory(config);
  const auto sel = IntervalSelector::closed_open(0.0, 0.5);
  const auto ratio = calibration_ratio(result.trace, sel, config.rounds);
  REQUIRE(ratio.has_value());
  long count = 0;
  for (const RoundRecord& rec : result.trace.records) {
    if (sel.contains(rec.sampled_p.value())) ++count;
  }
  const double expected =
      std::abs(*ratio) * static_cast<double>(count) / config.rounds;
  CHECK(kf_error(result.trace, sel, config.rounds) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("trailing window statistic") {
  // theta2 ramps linearly; the stat is |theta|/n, maximal at the window start
  std::vector<std::pair<FiniteDistribution, int>> rounds;
  std::vector<double> sampled;
  for (int i = 0; i < 100; ++i) {
    rounds.push_back({FiniteDistribution::point_mass(0.25), 1});
    sampled.push_back(0.25);
  }
  const GameTrace trace = make_trace(rounds, sampled);
  // theta2(n) = 0.75 n, so the running stat is 0.75 everywhere
  CHECK(trailing_max_theta_over_n(trace) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("diagnostics rows carry the identity and running minima") {
  GameConfig config;
  config.rounds = 300;
  config.seed = 23;
  const GameResult result = run_in_memory(config);
  const auto rows = diagnostics(result.trace);
  REQUIRE(rows.size() == 300);
  for (const DiagnosticsRow& row : rows) {
    CHECK(row.g_sum == row.theta2 - row.theta1);
    CHECK(row.delta_running == doctest::Approx(0.2).epsilon(1e-12));
  }
  CHECK(rows.back().g_drift >= 0.1 * 300 - 1e-9);  // the adversarial drift
}
