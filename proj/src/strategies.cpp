#include "bfg/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "bfg/metrics.hpp"
#include "bfg/minimax.hpp"

namespace bfg {

namespace {

// log( sum_k eps_k^2 * exp(logs[k]) ), eps_k = 2^-k for k = 1..K.
double mixture_log(std::span<const double> logs) {
  std::vector<double> terms(logs.size());
  for (std::size_t k = 0; k < logs.size(); ++k) {
    terms[k] = logs[k] - 2.0 * static_cast<double>(k + 1) * std::numbers::ln2;
  }
  return log_sum(terms);
}

// Mixture capitals can outgrow the linear double range while the bet must
// stay a finite number. Past the cap the whole round is played at stakes
// scaled by `scale`, so the announced payoff and the per-account updates
// keep describing the same (legal, smaller) bet.
constexpr double kLogBetCap = 690.0;

struct CappedMixture {
  double value;  // min(mixture, e^cap)
  double scale;  // value / mixture, 1 when uncapped
};

CappedMixture capped_mixture(std::span<const double> logs) {
  const double log_mix = mixture_log(logs);
  if (log_mix > kLogBetCap) {
    return {std::exp(kLogBetCap), std::exp(kLogBetCap - log_mix)};
  }
  return {std::exp(log_mix), 1.0};
}

// Centering shift for the test payoff: the expectation of g under the
// forecast plus one compensation step, so the weighted residual of
// (g - shift) vanishes at double precision even for large mixtures.
double centered_g_shift(const FiniteDistribution& forecast, double omega) {
  const double gbar =
      forecast.expectation([&](double p) { return g_value(p, omega); });
  const double residual =
      forecast.expectation([&](double p) { return g_value(p, omega) - gbar; });
  return gbar + residual;
}

}  // namespace

MixtureSkeptic::MixtureSkeptic(SkepticParams params) : params_(params) {
  if (params_.depth < 1 || params_.depth > 60) {
    throw std::invalid_argument("MixtureSkeptic: depth out of [1,60]");
  }
}

PayoffFunction MixtureSkeptic::announce_bet(const History&,
                                            const CapitalLedger& ledger) {
  const double s_high = -0.5 * capped_mixture(ledger.log_q1_all()).value;
  const double s_low = 0.5 * capped_mixture(ledger.log_q2_all()).value;
  const double bound = std::max(-s_high, s_low);
  return PayoffFunction(
      [s_high, s_low](double p) { return low_cell(p) ? s_low : s_high; }, bound);
}

PayoffFunction MixtureSkeptic::announce_test(const History& h,
                                             const CapitalLedger& ledger) {
  if (h.forecast == nullptr || h.outcome == nullptr) {
    throw std::logic_error("announce_test before forecast/outcome");
  }
  const double f_mix = capped_mixture(ledger.log_f_all()).value;
  const double omega = h.outcome->real();
  const double shift = centered_g_shift(*h.forecast, omega);
  return PayoffFunction(
      [f_mix, omega, shift](double p) {
        return -f_mix * (g_value(p, omega) - shift);
      },
      2.0 * f_mix);
}

AccountDeltas MixtureSkeptic::settle(const CapitalLedger& ledger, Prob p,
                                     Outcome omega,
                                     const FiniteDistribution& forecast) {
  const double err = omega.real() - p.value();
  const bool high = !low_cell(p.value());
  const double g_shift = g_value(p.value(), omega.real()) -
                         centered_g_shift(forecast, omega.real());
  // Same stake scaling the announced functions used this round.
  const double q_scale =
      capped_mixture(high ? ledger.log_q1_all() : ledger.log_q2_all()).scale;
  const double f_scale = capped_mixture(ledger.log_f_all()).scale;
  AccountDeltas deltas;
  deltas.q1.reserve(params_.depth);
  deltas.q2.reserve(params_.depth);
  deltas.f.reserve(params_.depth);
  for (int k = 1; k <= params_.depth; ++k) {
    const double eps = std::ldexp(1.0, -k);
    deltas.q1.push_back(high ? -q_scale * eps * err : 0.0);
    deltas.q2.push_back(high ? 0.0 : q_scale * eps * err);
    deltas.f.push_back(-f_scale * eps * g_shift);
  }
  return deltas;
}

double LaplaceRule::forecast(const History& h) {
  while (cursor_ < h.rounds.size()) {
    ones_ += h.rounds[cursor_].omega.value();
    ++cursor_;
  }
  return (static_cast<double>(ones_) + 1.0) / (static_cast<double>(cursor_) + 2.0);
}

FiniteDistribution round_to_grid(double q, double step) {
  Prob{q};  // range check
  if (!(step > 0.0 && step < 1.0)) {
    throw std::invalid_argument("round_to_grid: step must be in (0,1)");
  }
  long idx = static_cast<long>(std::floor(q / step));
  double lo = static_cast<double>(idx) * step;
  if (lo > q) {
    --idx;
    lo = static_cast<double>(idx) * step;
  }
  double hi = static_cast<double>(idx + 1) * step;
  if (hi > 1.0) hi = 1.0;
  if (q == lo || q == hi) return FiniteDistribution::point_mass(q);
  const double w_hi = (q - lo) / (hi - lo);
  return FiniteDistribution({lo, hi}, {1.0 - w_hi, w_hi});
}

RoundingForecaster::RoundingForecaster(Kind kind, double grid_step,
                                       std::unique_ptr<BaseRule> base)
    : kind_(kind), grid_step_(grid_step), base_(std::move(base)) {
  if (!(grid_step_ > 0.0 && grid_step_ < 1.0)) {
    throw std::invalid_argument("RoundingForecaster: grid step must be in (0,1)");
  }
}

FiniteDistribution RoundingForecaster::announce_forecast(const History& h) {
  return round_to_grid(base_->forecast(h), grid_step_);
}

SlackNotMet::SlackNotMet(double achieved, double requested, int grid_size)
    : std::runtime_error("minimax refinement exhausted: value " +
                         std::to_string(achieved) + " > slack " +
                         std::to_string(requested) + " on " +
                         std::to_string(grid_size) + " grid points"),
      achieved_(achieved),
      requested_(requested) {}

namespace {

constexpr int kMaxRefineStages = 64;
constexpr std::size_t kGlobalSplitCap = 2049;

std::vector<double> uniform_grid(double step) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(1.0 / step) + 2);
  for (long i = 0;; ++i) {
    const double x = static_cast<double>(i) * step;
    if (x >= 1.0) break;
    grid.push_back(x);
  }
  grid.push_back(1.0);
  return grid;
}

void insert_sorted(std::vector<double>& grid, double x) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it != grid.end() && *it == x) return;
  grid.insert(it, x);
}

// Bisect the grid intervals flanking (and between) the optimal support.
void refine_near_support(std::vector<double>& grid, const MixedSolution& sol) {
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < sol.weights.size(); ++i) {
    if (sol.weights[i] > 0.0) support.push_back(i);
  }
  std::vector<double> inserts;
  for (std::size_t i : support) {
    if (i > 0) inserts.push_back(0.5 * (grid[i - 1] + grid[i]));
    if (i + 1 < grid.size()) inserts.push_back(0.5 * (grid[i] + grid[i + 1]));
  }
  if (support.size() == 2 && support[1] > support[0] + 1) {
    inserts.push_back(0.5 * (grid[support[0]] + grid[support[1]]));
  }
  for (double x : inserts) insert_sorted(grid, x);
}

void refine_globally(std::vector<double>& grid) {
  if (grid.size() >= kGlobalSplitCap) return;
  std::vector<double> next;
  next.reserve(grid.size() * 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    next.push_back(grid[i]);
    if (i + 1 < grid.size()) next.push_back(0.5 * (grid[i] + grid[i + 1]));
  }
  grid = std::move(next);
}

}  // namespace

MinimaxForecast minimax_forecast(const PayoffFunction& bet, double grid_step,
                                 double slack) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw std::invalid_argument("minimax_forecast: grid step must be in (0,1]");
  }
  if (!(slack > 0.0)) {
    throw std::invalid_argument("minimax_forecast: slack must be positive");
  }

  std::vector<double> grid = uniform_grid(grid_step);
  MixedSolution sol = solve_2xm(game_from_bet(bet, grid));
  double prev_value = kPosInf;
  for (int stage = 0; sol.value > slack; ++stage) {
    if (stage >= kMaxRefineStages) {
      throw SlackNotMet(sol.value, slack, static_cast<int>(grid.size()));
    }
    // Value is non-increasing under grid refinement; a stall means the
    // binding structure lies away from the current support.
    if (sol.value > 0.999 * prev_value) {
      refine_globally(grid);
    }
    prev_value = sol.value;
    refine_near_support(grid, sol);
    sol = solve_2xm(game_from_bet(bet, grid));
  }

  std::vector<double> support, weights;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (sol.weights[i] > 0.0) {
      support.push_back(grid[i]);
      weights.push_back(sol.weights[i]);
    }
  }
  return MinimaxForecast{FiniteDistribution(std::move(support), std::move(weights)),
                         sol.value};
}

MinimaxForecaster::MinimaxForecaster(std::function<double(int)> slack_schedule,
                                     std::function<double(int)> grid_schedule)
    : slack_schedule_(std::move(slack_schedule)),
      grid_schedule_(std::move(grid_schedule)) {}

MinimaxForecaster::MinimaxForecaster(double slack0)
    : MinimaxForecaster(
          [slack0](int n) {
            const double nn = static_cast<double>(n);
            return slack0 / (nn * nn);
          },
          [](int) { return 1.0 / 16.0; }) {
  if (!(slack0 > 0.0)) {
    throw std::invalid_argument("MinimaxForecaster: slack0 must be positive");
  }
}

FiniteDistribution MinimaxForecaster::announce_forecast(const History& h) {
  if (h.bet == nullptr) {
    throw std::logic_error("announce_forecast before the bet");
  }
  MinimaxForecast result =
      minimax_forecast(*h.bet, grid_schedule_(h.n), slack_schedule_(h.n));
  last_value_ = result.value;
  return std::move(result.distribution);
}

PayoffFunction MinimaxForecaster::announce_test(const History& h) {
  if (h.bet == nullptr || h.outcome == nullptr) {
    throw std::logic_error("announce_test before bet/outcome");
  }
  const PayoffFunction bet = *h.bet;  // own a copy; the round's locals expire
  const double omega = h.outcome->real();
  std::optional<double> bound;
  if (bet.bound()) bound = *bet.bound();  // |omega - p| <= 1
  return PayoffFunction(
      [bet, omega](double p) { return bet(p) * (omega - p); }, bound);
}

Outcome OakesReality::announce_outcome(const History& h) {
  if (h.forecast == nullptr) {
    throw std::logic_error("announce_outcome before the forecast");
  }
  return Outcome(h.forecast->mass_above(0.5) > 0.5 ? 0 : 1);
}

Outcome DeterministicOakesReality::announce_outcome(const History& h) {
  if (h.forecast == nullptr) {
    throw std::logic_error("announce_outcome before the forecast");
  }
  const FiniteDistribution& dist = *h.forecast;
  const double p = dist.size() == 1 ? dist.support().front() : dist.mean();
  return Outcome(p < 0.5 ? 1 : 0);
}

BernoulliReality::BernoulliReality(double p_one, std::uint64_t seed)
    : p_one_(Prob(p_one).value()), rng_(seed) {}

Outcome BernoulliReality::announce_outcome(const History&) {
  return Outcome(rng_.next_unit() < p_one_ ? 1 : 0);
}

ReplayReality::ReplayReality(std::vector<int> outcomes)
    : outcomes_(std::move(outcomes)) {
  for (int w : outcomes_) {
    if (w != 0 && w != 1) {
      throw std::invalid_argument("ReplayReality: outcomes must be 0/1");
    }
  }
}

ReplayReality ReplayReality::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("ReplayReality: cannot open " + path);
  }
  std::vector<int> outcomes;
  int w;
  while (in >> w) outcomes.push_back(w);
  return ReplayReality(std::move(outcomes));
}

Outcome ReplayReality::announce_outcome(const History& h) {
  if (static_cast<std::size_t>(h.n) > outcomes_.size()) {
    throw std::runtime_error("ReplayReality: outcome sequence exhausted at round " +
                             std::to_string(h.n));
  }
  return Outcome(outcomes_[h.n - 1]);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse " + what + " from '" + s + "'");
  }
}

std::unique_ptr<BaseRule> make_base_rule(const std::vector<std::string>& parts,
                                         std::size_t const_index) {
  if (parts.size() > const_index) {
    return std::make_unique<ConstantRule>(
        parse_real(parts[const_index], "base forecast"));
  }
  return std::make_unique<LaplaceRule>();
}

}  // namespace

std::unique_ptr<Skeptic> make_skeptic(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty skeptic spec");
  if (parts[0] == "skeptic_zero" && parts.size() == 1) {
    return std::make_unique<ZeroSkeptic>();
  }
  if (parts[0] == "skeptic_t2" && parts.size() <= 2) {
    SkepticParams params;
    if (parts.size() == 2) {
      params.depth = static_cast<int>(parse_real(parts[1], "skeptic depth"));
    }
    return std::make_unique<MixtureSkeptic>(params);
  }
  throw std::invalid_argument("unknown skeptic spec '" + spec + "'");
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty forecaster spec");
  const std::string& kind = parts[0];
  if (kind == "point" && parts.size() <= 2) {
    return std::make_unique<PointMassForecaster>(make_base_rule(parts, 1));
  }
  if ((kind == "uniform" || kind == "kf") && parts.size() >= 2 && parts.size() <= 3) {
    const double step = parse_real(parts[1], "grid step");
    const auto tag = kind == "uniform" ? RoundingForecaster::Kind::Uniform
                                       : RoundingForecaster::Kind::KakadeFoster;
    return std::make_unique<RoundingForecaster>(tag, step, make_base_rule(parts, 2));
  }
  if (kind == "minimax" && parts.size() == 2) {
    return std::make_unique<MinimaxForecaster>(parse_real(parts[1], "slack"));
  }
  throw std::invalid_argument("unknown forecaster spec '" + spec + "'");
}

std::unique_ptr<Reality> make_reality(const std::string& spec,
                                      std::uint64_t game_seed) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty reality spec");
  if (parts[0] == "oakes" && parts.size() == 1) {
    return std::make_unique<OakesReality>();
  }
  if (parts[0] == "oakes2" && parts.size() == 1) {
    return std::make_unique<DeterministicOakesReality>();
  }
  if (parts[0] == "bernoulli" && parts.size() == 2) {
    // Distinct stream from the sampling source for the same game seed.
    const std::uint64_t seed = game_seed ^ 0x9e3779b97f4a7c15ull;
    return std::make_unique<BernoulliReality>(parse_real(parts[1], "bernoulli p"),
                                              seed);
  }
  if (parts[0] == "replay" && parts.size() == 2) {
    return std::make_unique<ReplayReality>(ReplayReality::from_file(parts[1]));
  }
  throw std::invalid_argument("unknown reality spec '" + spec + "'");
}

}  // namespace bfg
