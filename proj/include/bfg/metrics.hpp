#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bfg/core.hpp"
#include "bfg/engine.hpp"

namespace bfg {

/// Subinterval of [0,1] used as a calibration selection rule.
struct IntervalSelector {
  double lower = 0.0;
  double upper = 1.0;
  bool lower_closed = true;
  bool upper_closed = true;

  bool contains(double p) const {
    const bool above = lower_closed ? p >= lower : p > lower;
    const bool below = upper_closed ? p <= upper : p < upper;
    return above && below;
  }

  static IntervalSelector closed(double a, double b) { return {a, b, true, true}; }
  static IntervalSelector closed_open(double a, double b) { return {a, b, true, false}; }
  static IntervalSelector open_closed(double a, double b) { return {a, b, false, true}; }
  static IntervalSelector open(double a, double b) { return {a, b, false, false}; }

  std::string label() const;
};

/// g_n(p) = (2 xi(p <= 0.5) - 1) (omega - p).
inline double g_value(double p, double omega) {
  return (low_cell(p) ? 1.0 : -1.0) * (omega - p);
}

/// Count-normalized calibration error over the selected rounds:
/// sum I(p_i)(omega_i - p_i) / sum I(p_i). Empty selection gives nullopt.
std::optional<double> calibration_ratio(const GameTrace& trace,
                                        const IntervalSelector& selector, int n);

/// n-normalized selected error |sum I(p_i)(omega_i - p_i)| / n.
double kf_error(const GameTrace& trace, const IntervalSelector& selector, int n);

/// Running signed errors split by forecast cell:
/// theta1 over p > 0.5, theta2 over p <= 0.5.
std::pair<double, double> theta(const GameTrace& trace, int n);

/// Support straddle of 0.5 with the 0/1 padding rule: p- is the largest
/// support point <= 0.5 (0 if none), p+ the smallest above 0.5 (1 if none).
std::pair<double, double> p_plus_minus(const FiniteDistribution& dist);

struct DriftReport {
  int violations = 0;
  std::optional<int> first_violation;
  double max_violation = 0.0;  // worst shortfall of E[g_j] below the half-gap
  double min_margin = kPosInf; // tightest margin seen
};

/// Checks E_{P_j}(g_j) >= 0.5 (p_j+ - p_j-) - 1e-12 for every j <= n.
DriftReport drift_check(const GameTrace& trace, int n);

struct GrowthLevel {
  int k = 0;
  double epsilon = 0.0;
  double log_q1 = 0.0;
  double log_q2 = 0.0;
  double rate = 0.0;   // (log Q1_k + log Q2_k) / n
  double bound = 0.0;  // 0.5 eps_k delta_hat - 2 eps_k^2
};

struct GrowthSummary {
  std::vector<GrowthLevel> levels;
  double delta_hat = kPosInf;  // min over rounds of the forecast min-gap
  double log_k_over_n = 0.0;
  double final_log_k = 0.0;
};

/// Per-level capital growth rates against the drift bound at the observed
/// running discreteness.
GrowthSummary growth_summary(const GameResult& result);

/// Row of running diagnostics after round n.
struct DiagnosticsRow {
  int n = 0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double g_sum = 0.0;        // theta2 - theta1 (identical by construction)
  double g_drift = 0.0;      // sum of E_{P_j}(g_j)
  double half_gap_sum = 0.0; // sum of (p_j+ - p_j-)/2
  double log_growth = 0.0;   // log K_n / n
  double delta_running = kPosInf;
};

std::vector<DiagnosticsRow> diagnostics(const GameTrace& trace);

/// Finite-horizon limsup surrogate: max over the trailing window (last
/// `window_fraction` of rounds) of max_i |theta_{n,i}| / n.
double trailing_max_theta_over_n(const GameTrace& trace,
                                 double window_fraction = 0.1);

}  // namespace bfg
