#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfg/core.hpp"

namespace bfg {

/// Which player announces the test function f_n.
/// ForecasterTest: the original game, Forecaster owns f_n and a separate
/// capital F. SkepticTest: the modified game, Skeptic owns f_n and splits
/// his capital into Q + F.
enum class GameMode { ForecasterTest, SkepticTest };

std::string to_string(GameMode mode);

enum class ViolationKind { FConstraint, NegativeCapital };

/// A player's move broke one of the protocol restrictions.
class RestrictionViolation : public std::runtime_error {
 public:
  RestrictionViolation(ViolationKind kind, int round, double magnitude);

  ViolationKind kind() const { return kind_; }
  int round() const { return round_; }
  double magnitude() const { return magnitude_; }

  /// Rounds completed before the abort; attached by run_game.
  std::shared_ptr<const GameTrace> partial_trace;

 private:
  ViolationKind kind_;
  int round_;
  double magnitude_;
};

/// Multiplicative per-account updates for one round of a structured
/// skeptic: account *= (1 + delta). Deltas, not factors, so log1p keeps
/// full precision. f may be empty when the f side is unstructured.
struct AccountDeltas {
  std::vector<double> q1;
  std::vector<double> q2;
  std::vector<double> f;
};

/// Split capital bookkeeping, log-space.
///
/// Each side (Q and F) is either flat (one account, additive updates kept
/// in linear arithmetic) or structured (per-level accounts at stakes
/// eps_k = 2^-k, multiplicative updates kept as log capitals). Totals:
///   Q = sum_k 0.5 * eps_k * (Q1_k + Q2_k)     (or the flat account)
///   F = sum_k eps_k * F_k                     (or the flat account)
///   K = Q + F
/// A structured side starts at 1 - 2^-K total; a flat side starts at the
/// same value as the opposite side so both capitals begin equal.
class CapitalLedger {
 public:
  CapitalLedger(GameMode mode, int q_depth, int f_depth);

  GameMode mode() const { return mode_; }
  int q_depth() const { return q_depth_; }
  int f_depth() const { return f_depth_; }

  double log_q_total() const { return log_q_total_; }
  double log_f_total() const { return log_f_total_; }
  double log_k_total() const { return log_k_total_; }

  // 1-based level accessors, valid when the side is structured.
  double log_q1(int k) const { return log_q1_.at(k - 1); }
  double log_q2(int k) const { return log_q2_.at(k - 1); }
  double log_f(int k) const { return log_f_.at(k - 1); }
  std::span<const double> log_q1_all() const { return log_q1_; }
  std::span<const double> log_q2_all() const { return log_q2_; }
  std::span<const double> log_f_all() const { return log_f_; }

  std::uint64_t dead_q1_mask() const { return dead_q1_; }
  std::uint64_t dead_q2_mask() const { return dead_q2_; }
  std::uint64_t dead_f_mask() const { return dead_f_; }

  void apply_q_deltas(std::span<const double> dq1, std::span<const double> dq2,
                      int round);
  void apply_q_flat(double increment, int round);
  void apply_f_deltas(std::span<const double> df, int round);
  void apply_f_flat(double increment, int round);
  void refresh_totals();

  /// Ledger with explicitly set structured account logs (replay and
  /// property tests).
  static CapitalLedger with_accounts(GameMode mode, std::vector<double> log_q1,
                                     std::vector<double> log_q2,
                                     std::vector<double> log_f);

 private:
  GameMode mode_;
  int q_depth_;
  int f_depth_;
  std::vector<double> log_q1_, log_q2_, log_f_;
  double q_linear_ = 1.0;  // flat side state
  double f_linear_ = 1.0;
  std::uint64_t dead_q1_ = 0, dead_q2_ = 0, dead_f_ = 0;
  double log_q_total_ = 0.0, log_f_total_ = 0.0, log_k_total_ = 0.0;
};

/// What a strategy may see at its decision point. Fields are filled in
/// protocol order: completed rounds always; the current round's bet,
/// forecast and outcome only once announced.
struct History {
  std::span<const RoundRecord> rounds;
  int n = 1;
  const PayoffFunction* bet = nullptr;            // S_n
  const FiniteDistribution* forecast = nullptr;   // P_n
  const Outcome* outcome = nullptr;               // omega_n
};

class Skeptic {
 public:
  virtual ~Skeptic() = default;
  /// S_n, announced first each round.
  virtual PayoffFunction announce_bet(const History& h, const CapitalLedger& ledger) = 0;
  /// f_n in the skeptic-test game (history carries P_n and omega_n).
  /// Must satisfy integral of f dP <= 0.
  virtual PayoffFunction announce_test(const History& h, const CapitalLedger& ledger);
  /// Number of eps_k account levels, 0 for an unstructured skeptic.
  virtual int account_depth() const { return 0; }
  /// Per-account deltas for this round; required when account_depth() > 0.
  virtual AccountDeltas settle(const CapitalLedger& ledger, Prob p, Outcome omega,
                               const FiniteDistribution& forecast);
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual FiniteDistribution announce_forecast(const History& h) = 0;
  /// f_n in the forecaster-test game. Default: the zero function.
  virtual PayoffFunction announce_test(const History& h);
  /// True when announce_test returns f_n(p) = S_n(p)(omega_n - p); the
  /// engine then checks F_n = K_n each round.
  virtual bool mirrors_bet() const { return false; }
  /// Declared bound on the test-function expectation at round n. A
  /// finite-grid minimax forecast only guarantees the integral up to the
  /// round's slack, so the engine widens its restriction check by this.
  virtual double test_slack(int) const { return 0.0; }
};

class Reality {
 public:
  virtual ~Reality() = default;
  virtual Outcome announce_outcome(const History& h) = 0;
};

/// One game in progress. Strictly sequential; one round per play_round call.
class GameSession {
 public:
  GameSession(GameMode mode, Skeptic& skeptic, Forecaster& forecaster,
              Reality& reality, RandomSource& rng, std::string fingerprint = "");

  /// Executes the five announcements in protocol order, enforces the
  /// restrictions, updates the ledger, appends and returns the record.
  const RoundRecord& play_round();

  const GameTrace& trace() const { return trace_; }
  const CapitalLedger& ledger() const { return ledger_; }
  int rounds_played() const { return static_cast<int>(trace_.records.size()); }

  GameTrace take_trace() { return std::move(trace_); }

 private:
  GameMode mode_;
  Skeptic& skeptic_;
  Forecaster& forecaster_;
  Reality& reality_;
  RandomSource& rng_;
  CapitalLedger ledger_;
  GameTrace trace_;
  double theta1_ = 0.0;
  double theta2_ = 0.0;
};

struct GameResult {
  GameMode mode = GameMode::SkepticTest;
  GameTrace trace;
  CapitalLedger final_ledger;
};

/// Plays rounds 1..rounds. Throws RestrictionViolation (with the partial
/// trace attached) if a strategy breaks a restriction.
GameResult run_game(GameMode mode, int rounds, Skeptic& skeptic,
                    Forecaster& forecaster, Reality& reality, RandomSource& rng,
                    std::string fingerprint = "");

struct LedgerReport {
  double max_log_discrepancy = 0.0;  // recorded vs recomputed capitals
  int worst_round = 0;
  std::optional<int> first_flagged_round;  // first round beyond flag_threshold
  double max_split_error = 0.0;            // |K - (Q + F)| / K
  bool dead_monotone_ok = true;
  int rounds_checked = 0;
};

/// Recomputes all capitals from the recorded increments along an
/// independent path (linear long-double accumulation, log1p chain at
/// extreme magnitudes) and reports the worst deviation from the recorded
/// ledger values, plus dead-account monotonicity.
LedgerReport verify_ledger(const GameTrace& trace, double flag_threshold = 1e-7);

}  // namespace bfg
