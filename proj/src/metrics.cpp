#include "bfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bfg {

namespace {
constexpr double kDriftTol = 1e-12;

void check_prefix(const GameTrace& trace, int n) {
  if (n < 0 || n > static_cast<int>(trace.records.size())) {
    throw std::out_of_range("metrics: n exceeds trace length");
  }
}
}  // namespace

std::string IntervalSelector::label() const {
  std::string s;
  s += lower_closed ? '[' : '(';
  s += std::to_string(lower);
  // trim trailing zeros for readability
  auto trim = [](std::string& v) {
    if (v.find('.') == std::string::npos) return;
    while (v.back() == '0') v.pop_back();
    if (v.back() == '.') v.pop_back();
  };
  trim(s);
  s += ',';
  std::string hi = std::to_string(upper);
  trim(hi);
  s += hi;
  s += upper_closed ? ']' : ')';
  return s;
}

std::optional<double> calibration_ratio(const GameTrace& trace,
                                        const IntervalSelector& selector, int n) {
  check_prefix(trace, n);
  CompensatedSum num;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    const RoundRecord& rec = trace.records[i];
    const double p = rec.sampled_p.value();
    if (!selector.contains(p)) continue;
    num.add(rec.omega.real() - p);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return num.value() / static_cast<double>(count);
}

double kf_error(const GameTrace& trace, const IntervalSelector& selector, int n) {
  if (n < 1) throw std::out_of_range("kf_error: n must be >= 1");
  check_prefix(trace, n);
  CompensatedSum num;
  for (int i = 0; i < n; ++i) {
    const RoundRecord& rec = trace.records[i];
    const double p = rec.sampled_p.value();
    if (selector.contains(p)) num.add(rec.omega.real() - p);
  }
  return std::abs(num.value()) / static_cast<double>(n);
}

std::pair<double, double> theta(const GameTrace& trace, int n) {
  check_prefix(trace, n);
  CompensatedSum t1, t2;
  for (int i = 0; i < n; ++i) {
    const RoundRecord& rec = trace.records[i];
    const double p = rec.sampled_p.value();
    const double err = rec.omega.real() - p;
    if (low_cell(p)) {
      t2.add(err);
    } else {
      t1.add(err);
    }
  }
  return {t1.value(), t2.value()};
}

std::pair<double, double> p_plus_minus(const FiniteDistribution& dist) {
  double p_minus = 0.0;  // padded with 0
  double p_plus = 1.0;   // padded with 1
  for (double p : dist.support()) {
    if (low_cell(p)) {
      p_minus = std::max(p_minus, p);
    } else {
      p_plus = std::min(p_plus, p);
      break;  // support is sorted; first high point is the minimum
    }
  }
  return {p_minus, p_plus};
}

DriftReport drift_check(const GameTrace& trace, int n) {
  check_prefix(trace, n);
  DriftReport report;
  for (int i = 0; i < n; ++i) {
    const RoundRecord& rec = trace.records[i];
    const double omega = rec.omega.real();
    const double expected_g =
        rec.distribution.expectation([&](double p) { return g_value(p, omega); });
    const auto [p_minus, p_plus] = p_plus_minus(rec.distribution);
    const double margin = expected_g - 0.5 * (p_plus - p_minus);
    report.min_margin = std::min(report.min_margin, margin);
    if (margin < -kDriftTol) {
      ++report.violations;
      if (!report.first_violation) report.first_violation = rec.n;
      report.max_violation = std::max(report.max_violation, -margin);
    }
  }
  return report;
}

GrowthSummary growth_summary(const GameResult& result) {
  GrowthSummary summary;
  const auto& records = result.trace.records;
  if (records.empty()) return summary;
  const double n = static_cast<double>(records.size());

  for (const RoundRecord& rec : records) {
    if (std::isfinite(rec.delta_n)) {
      summary.delta_hat = std::min(summary.delta_hat, rec.delta_n);
    }
  }
  summary.final_log_k = records.back().log_capital_k;
  summary.log_k_over_n = summary.final_log_k / n;

  const CapitalLedger& ledger = result.final_ledger;
  const double delta = std::isfinite(summary.delta_hat) ? summary.delta_hat : 0.0;
  for (int k = 1; k <= ledger.q_depth(); ++k) {
    GrowthLevel level;
    level.k = k;
    level.epsilon = std::ldexp(1.0, -k);
    level.log_q1 = ledger.log_q1(k);
    level.log_q2 = ledger.log_q2(k);
    level.rate = (level.log_q1 + level.log_q2) / n;
    level.bound = 0.5 * level.epsilon * delta - 2.0 * level.epsilon * level.epsilon;
    summary.levels.push_back(level);
  }
  return summary;
}

std::vector<DiagnosticsRow> diagnostics(const GameTrace& trace) {
  std::vector<DiagnosticsRow> rows;
  rows.reserve(trace.records.size());
  CompensatedSum g_drift, half_gap;
  double delta_running = kPosInf;
  for (const RoundRecord& rec : trace.records) {
    const double omega = rec.omega.real();
    g_drift.add(
        rec.distribution.expectation([&](double p) { return g_value(p, omega); }));
    const auto [p_minus, p_plus] = p_plus_minus(rec.distribution);
    half_gap.add(0.5 * (p_plus - p_minus));
    if (std::isfinite(rec.delta_n)) {
      delta_running = std::min(delta_running, rec.delta_n);
    }
    DiagnosticsRow row;
    row.n = rec.n;
    row.theta1 = rec.theta1;
    row.theta2 = rec.theta2;
    row.g_sum = rec.theta2 - rec.theta1;
    row.g_drift = g_drift.value();
    row.half_gap_sum = half_gap.value();
    row.log_growth = rec.log_capital_k / rec.n;
    row.delta_running = delta_running;
    rows.push_back(row);
  }
  return rows;
}

double trailing_max_theta_over_n(const GameTrace& trace, double window_fraction) {
  const int n = static_cast<int>(trace.records.size());
  if (n == 0) return 0.0;
  const int window = std::max(1, static_cast<int>(n * window_fraction));
  double best = 0.0;
  for (int i = n - window; i < n; ++i) {
    const RoundRecord& rec = trace.records[i];
    const double stat =
        std::max(std::abs(rec.theta1), std::abs(rec.theta2)) / rec.n;
    best = std::max(best, stat);
  }
  return best;
}

}  // namespace bfg
