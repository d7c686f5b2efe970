#include "bfg/engine.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bfg {

namespace {

constexpr double kFConstraintTol = 1e-9;
constexpr double kNegCapTol = 1e-12;
constexpr double kMirrorTol = 1e-9;

std::string violation_message(ViolationKind kind, int round, double magnitude) {
  std::ostringstream os;
  os << "round " << round << ": ";
  if (kind == ViolationKind::FConstraint) {
    os << "test function expectation " << magnitude << " > " << kFConstraintTol;
  } else {
    os << "account capital would become negative (" << magnitude << ")";
  }
  return os.str();
}

}  // namespace

std::string to_string(GameMode mode) {
  return mode == GameMode::ForecasterTest ? "forecaster-test" : "skeptic-test";
}

RestrictionViolation::RestrictionViolation(ViolationKind kind, int round,
                                           double magnitude)
    : std::runtime_error(violation_message(kind, round, magnitude)),
      kind_(kind),
      round_(round),
      magnitude_(magnitude) {}

PayoffFunction Skeptic::announce_test(const History&, const CapitalLedger&) {
  return PayoffFunction{};
}

AccountDeltas Skeptic::settle(const CapitalLedger&, Prob, Outcome,
                              const FiniteDistribution&) {
  throw std::logic_error("structured skeptic must implement settle()");
}

PayoffFunction Forecaster::announce_test(const History&) {
  return PayoffFunction{};
}

CapitalLedger::CapitalLedger(GameMode mode, int q_depth, int f_depth)
    : mode_(mode), q_depth_(q_depth), f_depth_(f_depth) {
  if (q_depth < 0 || q_depth > 60 || f_depth < 0 || f_depth > 60) {
    throw std::invalid_argument("CapitalLedger: depth out of [0,60]");
  }
  log_q1_.assign(q_depth_, 0.0);
  log_q2_.assign(q_depth_, 0.0);
  log_f_.assign(f_depth_, 0.0);
  // Both sides start at the same capital: the truncated mixture total
  // 1 - 2^-K when either side is structured, otherwise 1.
  const int depth = std::max(q_depth_, f_depth_);
  const double initial = depth > 0 ? 1.0 - std::ldexp(1.0, -depth) : 1.0;
  q_linear_ = initial;
  f_linear_ = initial;
  refresh_totals();
}

CapitalLedger CapitalLedger::with_accounts(GameMode mode, std::vector<double> log_q1,
                                           std::vector<double> log_q2,
                                           std::vector<double> log_f) {
  if (log_q1.size() != log_q2.size()) {
    throw std::invalid_argument("with_accounts: q1/q2 size mismatch");
  }
  CapitalLedger ledger(mode, static_cast<int>(log_q1.size()),
                       static_cast<int>(log_f.size()));
  ledger.log_q1_ = std::move(log_q1);
  ledger.log_q2_ = std::move(log_q2);
  ledger.log_f_ = std::move(log_f);
  for (int k = 0; k < ledger.q_depth_; ++k) {
    if (ledger.log_q1_[k] == kNegInf) ledger.dead_q1_ |= 1ull << k;
    if (ledger.log_q2_[k] == kNegInf) ledger.dead_q2_ |= 1ull << k;
  }
  for (int k = 0; k < ledger.f_depth_; ++k) {
    if (ledger.log_f_[k] == kNegInf) ledger.dead_f_ |= 1ull << k;
  }
  ledger.refresh_totals();
  return ledger;
}

namespace {

// account *= (1 + delta), in log space. Deltas below -1 kill the account;
// anything further negative than the tolerance is a strategy bug.
void apply_delta(std::vector<double>& logs, std::uint64_t& dead, int k, double delta,
                 int round) {
  if (dead & (1ull << k)) return;  // dead accounts stay dead
  if (std::isnan(delta)) {
    throw RestrictionViolation(ViolationKind::NegativeCapital, round, delta);
  }
  const double factor = 1.0 + delta;
  if (factor < -kNegCapTol) {
    throw RestrictionViolation(ViolationKind::NegativeCapital, round, factor);
  }
  if (factor <= 0.0) {
    logs[k] = kNegInf;
    dead |= 1ull << k;
  } else {
    logs[k] += std::log1p(delta);
  }
}

double flat_apply(double value, double increment, int round) {
  const double next = value + increment;
  if (next < -kNegCapTol) {
    throw RestrictionViolation(ViolationKind::NegativeCapital, round, next);
  }
  return next < 0.0 ? 0.0 : next;
}

}  // namespace

void CapitalLedger::apply_q_deltas(std::span<const double> dq1,
                                   std::span<const double> dq2, int round) {
  if (static_cast<int>(dq1.size()) != q_depth_ ||
      static_cast<int>(dq2.size()) != q_depth_) {
    throw std::invalid_argument("apply_q_deltas: depth mismatch");
  }
  for (int k = 0; k < q_depth_; ++k) {
    apply_delta(log_q1_, dead_q1_, k, dq1[k], round);
    apply_delta(log_q2_, dead_q2_, k, dq2[k], round);
  }
}

void CapitalLedger::apply_q_flat(double increment, int round) {
  if (q_depth_ != 0) throw std::logic_error("apply_q_flat on structured side");
  q_linear_ = flat_apply(q_linear_, increment, round);
}

void CapitalLedger::apply_f_deltas(std::span<const double> df, int round) {
  if (static_cast<int>(df.size()) != f_depth_) {
    throw std::invalid_argument("apply_f_deltas: depth mismatch");
  }
  for (int k = 0; k < f_depth_; ++k) {
    apply_delta(log_f_, dead_f_, k, df[k], round);
  }
}

void CapitalLedger::apply_f_flat(double increment, int round) {
  if (f_depth_ != 0) throw std::logic_error("apply_f_flat on structured side");
  f_linear_ = flat_apply(f_linear_, increment, round);
}

void CapitalLedger::refresh_totals() {
  if (q_depth_ > 0) {
    std::vector<double> terms;
    terms.reserve(2 * q_depth_);
    for (int k = 0; k < q_depth_; ++k) {
      const double log_half_eps = -(k + 2) * std::numbers::ln2;  // log(0.5 * 2^-(k+1))
      terms.push_back(log_half_eps + log_q1_[k]);
      terms.push_back(log_half_eps + log_q2_[k]);
    }
    log_q_total_ = log_sum(terms);
  } else {
    log_q_total_ = std::log(q_linear_);
  }
  if (f_depth_ > 0) {
    std::vector<double> terms;
    terms.reserve(f_depth_);
    for (int k = 0; k < f_depth_; ++k) {
      terms.push_back(-(k + 1) * std::numbers::ln2 + log_f_[k]);
    }
    log_f_total_ = log_sum(terms);
  } else {
    log_f_total_ = std::log(f_linear_);
  }
  log_k_total_ = log_add(log_q_total_, log_f_total_);
}

GameSession::GameSession(GameMode mode, Skeptic& skeptic, Forecaster& forecaster,
                         Reality& reality, RandomSource& rng, std::string fingerprint)
    : mode_(mode),
      skeptic_(skeptic),
      forecaster_(forecaster),
      reality_(reality),
      rng_(rng),
      ledger_(mode, skeptic.account_depth(),
              mode == GameMode::SkepticTest ? skeptic.account_depth() : 0) {
  trace_.fingerprint = std::move(fingerprint);
  trace_.initial_log_q = ledger_.log_q_total();
  trace_.initial_log_f = ledger_.log_f_total();
}

const RoundRecord& GameSession::play_round() {
  const int n = rounds_played() + 1;
  History h;
  h.rounds = trace_.records;
  h.n = n;

  PayoffFunction bet = skeptic_.announce_bet(h, ledger_);
  h.bet = &bet;
  FiniteDistribution forecast = forecaster_.announce_forecast(h);
  h.forecast = &forecast;
  Outcome omega = reality_.announce_outcome(h);
  h.outcome = &omega;
  PayoffFunction test = mode_ == GameMode::SkepticTest
                            ? skeptic_.announce_test(h, ledger_)
                            : forecaster_.announce_test(h);

  const double f_exp = forecast.expectation([&](double p) { return test(p); });
  const double f_tol = mode_ == GameMode::ForecasterTest
                           ? kFConstraintTol + forecaster_.test_slack(n)
                           : kFConstraintTol;
  if (f_exp > f_tol) {
    throw RestrictionViolation(ViolationKind::FConstraint, n, f_exp);
  }

  const Prob p = sample(forecast, rng_);
  const double s_at_p = bet(p.value());
  const double f_at_p = test(p.value());
  const double err = omega.real() - p.value();
  const double q_increment = s_at_p * err;
  const double f_increment = f_at_p;

  if (skeptic_.account_depth() > 0) {
    const AccountDeltas deltas = skeptic_.settle(ledger_, p, omega, forecast);
    ledger_.apply_q_deltas(deltas.q1, deltas.q2, n);
    if (mode_ == GameMode::SkepticTest) {
      ledger_.apply_f_deltas(deltas.f, n);
    } else {
      ledger_.apply_f_flat(f_increment, n);
    }
  } else {
    ledger_.apply_q_flat(q_increment, n);
    ledger_.apply_f_flat(f_increment, n);
  }
  ledger_.refresh_totals();

  if (low_cell(p.value())) {
    theta2_ += err;
  } else {
    theta1_ += err;
  }

  if (mode_ == GameMode::ForecasterTest && forecaster_.mirrors_bet()) {
    const double lq = ledger_.log_q_total();
    const double lf = ledger_.log_f_total();
    if (!(lq == lf) && std::abs(lq - lf) > kMirrorTol) {
      throw std::logic_error("mirror test function but F_n != K_n at round " +
                             std::to_string(n));
    }
  }

  const double delta_n = forecast.min_gap();
  trace_.records.push_back(RoundRecord{
      .n = n,
      .distribution = std::move(forecast),
      .omega = omega,
      .sampled_p = p,
      .s_at_p = s_at_p,
      .f_at_p = f_at_p,
      .q_increment = q_increment,
      .f_increment = f_increment,
      .log_capital_q = ledger_.log_q_total(),
      .log_capital_f = ledger_.log_f_total(),
      .log_capital_k = ledger_.log_k_total(),
      .delta_n = delta_n,
      .theta1 = theta1_,
      .theta2 = theta2_,
      .f_expectation = f_exp,
      .dead_q1_mask = ledger_.dead_q1_mask(),
      .dead_q2_mask = ledger_.dead_q2_mask(),
      .dead_f_mask = ledger_.dead_f_mask(),
  });
  return trace_.records.back();
}

GameResult run_game(GameMode mode, int rounds, Skeptic& skeptic,
                    Forecaster& forecaster, Reality& reality, RandomSource& rng,
                    std::string fingerprint) {
  if (rounds < 1) {
    throw std::invalid_argument("run_game: rounds must be >= 1");
  }
  GameSession session(mode, skeptic, forecaster, reality, rng,
                      std::move(fingerprint));
  try {
    for (int n = 0; n < rounds; ++n) session.play_round();
  } catch (RestrictionViolation& violation) {
    violation.partial_trace =
        std::make_shared<const GameTrace>(session.take_trace());
    throw;
  }
  CapitalLedger final_ledger = session.ledger();
  return GameResult{mode, session.take_trace(), std::move(final_ledger)};
}

namespace {

// Running capital recomputed from additive increments. Linear long-double
// accumulation, falling over to a log1p chain when the magnitude leaves
// the representable range.
class IncrementChain {
 public:
  explicit IncrementChain(double initial_log) {
    if (initial_log == kNegInf) {
      linear_ = 0.0L;
    } else {
      linear_ = std::exp(static_cast<long double>(initial_log));
    }
  }

  void add(double increment) {
    if (!in_log_mode_) {
      linear_ += static_cast<long double>(increment);
      if (linear_ < 0.0L) linear_ = 0.0L;  // engine clamps sub-tolerance dips
      if (linear_ > 1e4500L) {
        log_value_ = static_cast<double>(std::log(linear_));
        in_log_mode_ = true;
      }
      return;
    }
    if (increment == 0.0 || log_value_ == kNegInf) {
      if (log_value_ == kNegInf && increment > 0.0) {
        log_value_ = std::log(increment);
      }
      return;
    }
    const double ratio = std::copysign(
        std::exp(std::log(std::abs(increment)) - log_value_), increment);
    if (ratio <= -1.0) {
      log_value_ = kNegInf;
    } else {
      log_value_ += std::log1p(ratio);
    }
  }

  double log_value() const {
    if (in_log_mode_) return log_value_;
    return linear_ > 0.0L ? static_cast<double>(std::log(linear_)) : kNegInf;
  }

 private:
  long double linear_ = 0.0L;
  double log_value_ = 0.0;
  bool in_log_mode_ = false;
};

double log_discrepancy(double recorded, double recomputed) {
  if (recorded == kNegInf && recomputed == kNegInf) return 0.0;
  return std::abs(recorded - recomputed);
}

}  // namespace

LedgerReport verify_ledger(const GameTrace& trace, double flag_threshold) {
  LedgerReport report;
  report.rounds_checked = static_cast<int>(trace.records.size());

  IncrementChain q(trace.initial_log_q);
  IncrementChain f(trace.initial_log_f);
  std::uint64_t prev_q1 = 0, prev_q2 = 0, prev_f = 0;

  for (const RoundRecord& rec : trace.records) {
    q.add(rec.q_increment);
    f.add(rec.f_increment);
    const double dq = log_discrepancy(rec.log_capital_q, q.log_value());
    const double df = log_discrepancy(rec.log_capital_f, f.log_value());
    const double dk = log_discrepancy(rec.log_capital_k,
                                      log_add(rec.log_capital_q, rec.log_capital_f));
    const double worst = std::max({dq, df});
    if (worst > report.max_log_discrepancy) {
      report.max_log_discrepancy = worst;
      report.worst_round = rec.n;
    }
    report.max_split_error = std::max(report.max_split_error, dk);
    if (worst > flag_threshold && !report.first_flagged_round) {
      report.first_flagged_round = rec.n;
    }
    if ((prev_q1 & ~rec.dead_q1_mask) || (prev_q2 & ~rec.dead_q2_mask) ||
        (prev_f & ~rec.dead_f_mask)) {
      report.dead_monotone_ok = false;
    }
    prev_q1 = rec.dead_q1_mask;
    prev_q2 = rec.dead_q2_mask;
    prev_f = rec.dead_f_mask;
  }
  return report;
}

}  // namespace bfg
