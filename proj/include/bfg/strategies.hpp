#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bfg/core.hpp"
#include "bfg/engine.hpp"

namespace bfg {

/// Truncation depth for the eps_k = 2^-k account mixture.
struct SkepticParams {
  int depth = 16;
};

/// Skeptic hedging elementary two-sided calibration bets across dyadic
/// stake levels. Bets against forecasts above 0.5 and for forecasts at or
/// below 0.5, with the stake eps_k per account level; the test function
/// plays the centered cell-sign payoff g against the sampled forecast.
class MixtureSkeptic : public Skeptic {
 public:
  explicit MixtureSkeptic(SkepticParams params);

  PayoffFunction announce_bet(const History& h, const CapitalLedger& ledger) override;
  PayoffFunction announce_test(const History& h, const CapitalLedger& ledger) override;
  int account_depth() const override { return params_.depth; }
  AccountDeltas settle(const CapitalLedger& ledger, Prob p, Outcome omega,
                       const FiniteDistribution& forecast) override;

 private:
  SkepticParams params_;
};

/// Never bets; S and f are identically zero.
class ZeroSkeptic : public Skeptic {
 public:
  PayoffFunction announce_bet(const History&, const CapitalLedger&) override {
    return PayoffFunction{};
  }
};

/// Deterministic base forecast rule for the point-mass and rounding
/// forecasters.
class BaseRule {
 public:
  virtual ~BaseRule() = default;
  virtual double forecast(const History& h) = 0;
};

/// Laplace estimator (ones + 1) / (rounds + 2); stays inside (0,1).
class LaplaceRule : public BaseRule {
 public:
  double forecast(const History& h) override;

 private:
  std::size_t cursor_ = 0;
  long ones_ = 0;
};

class ConstantRule : public BaseRule {
 public:
  explicit ConstantRule(double value) : value_(Prob(value).value()) {}
  double forecast(const History&) override { return value_; }

 private:
  double value_;
};

/// Mean-preserving rounding of q onto the grid {0, step, 2 step, ...} + {1}:
/// the two flanking grid points weighted so the mean equals q; a point mass
/// when q sits on the grid.
FiniteDistribution round_to_grid(double q, double step);

class PointMassForecaster : public Forecaster {
 public:
  explicit PointMassForecaster(std::unique_ptr<BaseRule> base)
      : base_(std::move(base)) {}
  FiniteDistribution announce_forecast(const History& h) override {
    return FiniteDistribution::point_mass(Prob(base_->forecast(h)).value());
  }

 private:
  std::unique_ptr<BaseRule> base_;
};

/// Grid-rounding forecaster. Uniform and Kakade-Foster style rounding use
/// the same mean-preserving two-point construction; the kind tag keeps the
/// two schemes distinguishable in configs and reports.
class RoundingForecaster : public Forecaster {
 public:
  enum class Kind { Uniform, KakadeFoster };
  RoundingForecaster(Kind kind, double grid_step, std::unique_ptr<BaseRule> base);
  FiniteDistribution announce_forecast(const History& h) override;
  Kind kind() const { return kind_; }
  double grid_step() const { return grid_step_; }

 private:
  Kind kind_;
  double grid_step_;
  std::unique_ptr<BaseRule> base_;
};

/// Requested per-round game value could not be reached within the
/// refinement budget.
class SlackNotMet : public std::runtime_error {
 public:
  SlackNotMet(double achieved, double requested, int grid_size);
  double achieved() const { return achieved_; }
  double requested() const { return requested_; }

 private:
  double achieved_;
  double requested_;
};

struct MinimaxForecast {
  FiniteDistribution distribution;
  double value = 0.0;
};

/// Optimal mixed forecast against the announced bet: starts from the
/// uniform grid at grid_step and refines until the game value is at most
/// slack. Refinement bisects the grid intervals around the current optimal
/// support (with periodic global splits when progress stalls) instead of
/// halving the whole grid, which reaches small slacks without million-point
/// grids. Throws SlackNotMet when the budget runs out.
MinimaxForecast minimax_forecast(const PayoffFunction& bet, double grid_step,
                                 double slack);

/// Plays the per-round minimax mixture and mirrors the bet as its test
/// function, f_n(p) = S_n(p)(omega_n - p).
class MinimaxForecaster : public Forecaster {
 public:
  MinimaxForecaster(std::function<double(int)> slack_schedule,
                    std::function<double(int)> grid_schedule);
  /// slack_n = slack0 / n^2, fixed 1/16 starting grid.
  explicit MinimaxForecaster(double slack0);

  FiniteDistribution announce_forecast(const History& h) override;
  PayoffFunction announce_test(const History& h) override;
  bool mirrors_bet() const override { return true; }
  double test_slack(int n) const override { return slack_schedule_(n); }

  double last_value() const { return last_value_; }

 private:
  std::function<double(int)> slack_schedule_;
  std::function<double(int)> grid_schedule_;
  double last_value_ = 0.0;
};

/// Outcome rule defeating randomized forecasts: 0 when the forecast puts
/// more than half its mass above 0.5, else 1.
class OakesReality : public Reality {
 public:
  Outcome announce_outcome(const History& h) override;
};

/// The deterministic-forecast rule: 1 when the forecast is below 0.5,
/// else 0. Reads the single support point of a point-mass forecast and
/// falls back to the mean for spread ones.
class DeterministicOakesReality : public Reality {
 public:
  Outcome announce_outcome(const History& h) override;
};

class BernoulliReality : public Reality {
 public:
  BernoulliReality(double p_one, std::uint64_t seed);
  Outcome announce_outcome(const History& h) override;

 private:
  double p_one_;
  RandomSource rng_;
};

/// Replays a fixed outcome sequence; errors when the game outlives it.
class ReplayReality : public Reality {
 public:
  explicit ReplayReality(std::vector<int> outcomes);
  static ReplayReality from_file(const std::string& path);
  Outcome announce_outcome(const History& h) override;

 private:
  std::vector<int> outcomes_;
};

// Strategy registry. Spec strings:
//   skeptics:    "skeptic_zero", "skeptic_t2:<K>"
//   forecasters: "point", "point:<c>", "uniform:<step>[:<c>]",
//                "kf:<step>[:<c>]", "minimax:<slack0>"
//                (rounding/point kinds default to the Laplace base rule;
//                a trailing :<c> pins a constant base forecast)
//   realities:   "oakes", "oakes2", "bernoulli:<q>", "replay:<path>"
// The reality seed is derived from the game seed so randomized realities
// stay independent of the sampling stream.
std::unique_ptr<Skeptic> make_skeptic(const std::string& spec);
std::unique_ptr<Forecaster> make_forecaster(const std::string& spec);
std::unique_ptr<Reality> make_reality(const std::string& spec, std::uint64_t game_seed);

}  // namespace bfg
