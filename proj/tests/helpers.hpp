#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "bfg/core.hpp"
#include "bfg/engine.hpp"

namespace bfg::testing {

/// Skeptic built from plain functions; zero test function by default.
class LambdaSkeptic : public Skeptic {
 public:
  explicit LambdaSkeptic(std::function<double(double)> bet)
      : bet_(std::move(bet)) {}
  LambdaSkeptic(std::function<double(double)> bet, std::function<double(double)> test)
      : bet_(std::move(bet)), test_(std::move(test)) {}

  PayoffFunction announce_bet(const History&, const CapitalLedger&) override {
    return PayoffFunction(bet_);
  }
  PayoffFunction announce_test(const History&, const CapitalLedger&) override {
    return test_ ? PayoffFunction(test_) : PayoffFunction{};
  }

 private:
  std::function<double(double)> bet_;
  std::function<double(double)> test_;
};

class FixedForecaster : public Forecaster {
 public:
  explicit FixedForecaster(FiniteDistribution dist) : dist_(std::move(dist)) {}
  FiniteDistribution announce_forecast(const History&) override { return dist_; }

 private:
  FiniteDistribution dist_;
};

class FixedReality : public Reality {
 public:
  explicit FixedReality(int omega) : omega_(omega) {}
  Outcome announce_outcome(const History&) override { return Outcome(omega_); }

 private:
  int omega_;
};

/// One-round trace builder for metric tests.
inline GameTrace make_trace(
    const std::vector<std::pair<FiniteDistribution, int>>& rounds_dist_omega,
    const std::vector<double>& sampled) {
  GameTrace trace;
  double theta1 = 0.0, theta2 = 0.0;
  for (std::size_t i = 0; i < rounds_dist_omega.size(); ++i) {
    const auto& [dist, omega] = rounds_dist_omega[i];
    const double p = sampled[i];
    const double err = omega - p;
    if (low_cell(p)) {
      theta2 += err;
    } else {
      theta1 += err;
    }
    trace.records.push_back(RoundRecord{
        .n = static_cast<int>(i) + 1,
        .distribution = dist,
        .omega = Outcome(omega),
        .sampled_p = Prob(p),
        .s_at_p = 0.0,
        .f_at_p = 0.0,
        .q_increment = 0.0,
        .f_increment = 0.0,
        .log_capital_q = 0.0,
        .log_capital_f = 0.0,
        .log_capital_k = std::log(2.0),
        .delta_n = dist.min_gap(),
        .theta1 = theta1,
        .theta2 = theta2,
        .f_expectation = 0.0,
        .dead_q1_mask = 0,
        .dead_q2_mask = 0,
        .dead_f_mask = 0,
    });
  }
  return trace;
}

}  // namespace bfg::testing
