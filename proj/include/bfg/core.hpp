#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfg/logspace.hpp"

namespace bfg {

/// Probability value, range-checked to [0,1] at construction.
class Prob {
 public:
  Prob() = default;
  explicit Prob(double v);
  double value() const { return v_; }
  friend bool operator==(Prob a, Prob b) { return a.v_ == b.v_; }
  friend auto operator<=>(Prob a, Prob b) { return a.v_ <=> b.v_; }

 private:
  double v_ = 0.0;
};

/// Binary outcome, 0 or 1.
class Outcome {
 public:
  Outcome() = default;
  explicit Outcome(int v);
  int value() const { return v_; }
  double real() const { return static_cast<double>(v_); }
  friend bool operator==(Outcome a, Outcome b) { return a.v_ == b.v_; }

 private:
  int v_ = 0;
};

// Cell split used throughout the game: 0.5 belongs to the low cell.
inline bool low_cell(double p) { return p <= 0.5; }

/// Forecast distribution with finite support on [0,1].
///
/// Constructors sort the support, merge exactly-equal points by summing
/// their weights, and validate: nonempty support, every point in [0,1],
/// weights nonnegative and summing to 1 within 1e-12. Tiny weights are
/// kept, not pruned, so the declared support is preserved.
class FiniteDistribution {
 public:
  FiniteDistribution(std::vector<double> support, std::vector<double> weights);
  static FiniteDistribution point_mass(double p);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }

  /// Exact finite sum  sum_i w_i * f(p_i).
  double expectation(const std::function<double(double)>& f) const;
  double mean() const;

  /// Minimum gap between adjacent support points; +inf for a single point.
  double min_gap() const;

  /// Total weight of support points strictly above `threshold`.
  double mass_above(double threshold) const;

 private:
  std::vector<double> support_;
  std::vector<double> weights_;
};

/// Evaluable payoff map on [0,1] with an optional declared bound
/// (|f(p)| <= bound for all p when declared).
class PayoffFunction {
 public:
  PayoffFunction() : fn_([](double) { return 0.0; }), bound_(0.0) {}
  explicit PayoffFunction(std::function<double(double)> fn,
                          std::optional<double> bound = std::nullopt)
      : fn_(std::move(fn)), bound_(bound) {}

  double operator()(double p) const { return fn_(p); }
  std::optional<double> bound() const { return bound_; }

 private:
  std::function<double(double)> fn_;
  std::optional<double> bound_;
};

/// Seeded uniform source. mt19937_64 under a 53-bit mantissa mapping:
/// draws are (x >> 11) * 2^-53, uniform on [0,1) and identical for equal
/// seeds on any platform with IEEE doubles.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}
  std::uint64_t seed() const { return seed_; }
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Inverse CDF at a fixed draw u in [0,1): cumulative sums left-to-right
/// over the ordered support; returns the first point whose cumulative
/// weight strictly exceeds u.
Prob sample_at(const FiniteDistribution& dist, double u);

/// sample_at with one uniform draw from rng.
Prob sample(const FiniteDistribution& dist, RandomSource& rng);

/// One completed pass of the protocol loop.
struct RoundRecord {
  int n = 0;
  FiniteDistribution distribution;
  Outcome omega;
  Prob sampled_p;
  double s_at_p = 0.0;
  double f_at_p = 0.0;
  double q_increment = 0.0;  // == s_at_p * (omega - sampled_p)
  double f_increment = 0.0;  // == f_at_p
  double log_capital_q = 0.0;
  double log_capital_f = 0.0;
  double log_capital_k = 0.0;  // log(Q + F)
  double delta_n = 0.0;        // support min-gap of this round's forecast
  double theta1 = 0.0;         // running sum over p > 0.5 of (omega - p)
  double theta2 = 0.0;         // running sum over p <= 0.5 of (omega - p)
  double f_expectation = 0.0;  // checked value of the f-restriction
  // Dead-account bitmasks for structured ledgers (bit k-1 = level k).
  std::uint64_t dead_q1_mask = 0;
  std::uint64_t dead_q2_mask = 0;
  std::uint64_t dead_f_mask = 0;
};

/// Full per-round history of one game.
struct GameTrace {
  std::string fingerprint;
  double initial_log_q = 0.0;
  double initial_log_f = 0.0;
  std::vector<RoundRecord> records;  // indexed 1..n contiguously
};

}  // namespace bfg
