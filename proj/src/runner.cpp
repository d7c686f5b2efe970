#include "bfg/runner.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "bfg/metrics.hpp"
#include "bfg/strategies.hpp"

namespace bfg {

namespace {

using ordered_json = nlohmann::ordered_json;

// Non-finite doubles have no JSON number form; encode them as strings.
ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

ordered_json error_json(const std::string& kind, const std::string& message) {
  ordered_json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int log_level() {
  const char* env = std::getenv("FORECAST_DUEL_LOG");
  return env ? std::atoi(env) : 0;
}

std::string GameConfig::fingerprint() const {
  std::ostringstream os;
  os << to_string(mode) << "|rounds=" << rounds << "|seed=" << seed
     << "|forecaster=" << forecaster << "|reality=" << reality
     << "|skeptic=" << skeptic;
  return os.str();
}

GameResult run_in_memory(const GameConfig& config) {
  if (config.rounds < 1) {
    throw std::invalid_argument("config: rounds must be >= 1");
  }
  if (config.record_every < 1) {
    throw std::invalid_argument("config: record_every must be >= 1");
  }
  auto skeptic = make_skeptic(config.skeptic);
  auto forecaster = make_forecaster(config.forecaster);
  auto reality = make_reality(config.reality, config.seed);
  RandomSource rng(config.seed);
  if (log_level() >= 1) {
    std::cerr << "[forecast_duel] running " << config.fingerprint() << "\n";
  }
  return run_game(config.mode, config.rounds, *skeptic, *forecaster, *reality, rng,
                  config.fingerprint());
}

void write_trace_csv(const std::string& path, const GameTrace& trace,
                     int record_every) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace path " + path);
  out << "n,omega,p_sampled,support_size,delta_n,s_at_p,f_at_p,theta1,theta2,"
         "g_sum,g_drift,log_Q,log_F,log_K\n";
  const auto rows = diagnostics(trace);
  const int last = trace.records.empty() ? 0 : trace.records.back().n;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const RoundRecord& rec = trace.records[i];
    if (rec.n % record_every != 0 && rec.n != last) continue;
    const DiagnosticsRow& d = rows[i];
    out << rec.n << ',' << rec.omega.value() << ','
        << format_double(rec.sampled_p.value()) << ',' << rec.distribution.size()
        << ',' << format_double(rec.delta_n) << ',' << format_double(rec.s_at_p)
        << ',' << format_double(rec.f_at_p) << ',' << format_double(rec.theta1)
        << ',' << format_double(rec.theta2) << ',' << format_double(d.g_sum) << ','
        << format_double(d.g_drift) << ',' << format_double(rec.log_capital_q)
        << ',' << format_double(rec.log_capital_f) << ','
        << format_double(rec.log_capital_k) << '\n';
  }
}

namespace {

ordered_json summary_json(const GameConfig& config, const GameResult& result) {
  const GameTrace& trace = result.trace;
  ordered_json j;
  j["config"] = {{"rounds", config.rounds},
                 {"seed", config.seed},
                 {"mode", to_string(config.mode)},
                 {"forecaster", config.forecaster},
                 {"reality", config.reality},
                 {"skeptic", config.skeptic},
                 {"record_every", config.record_every}};
  j["fingerprint"] = trace.fingerprint;

  const auto rows = diagnostics(trace);
  const DiagnosticsRow& last = rows.back();
  const RoundRecord& rec = trace.records.back();
  j["final"] = {{"n", last.n},
                {"log_Q", json_number(rec.log_capital_q)},
                {"log_F", json_number(rec.log_capital_f)},
                {"log_K", json_number(rec.log_capital_k)},
                {"theta1", last.theta1},
                {"theta2", last.theta2},
                {"g_sum", last.g_sum},
                {"g_drift", last.g_drift},
                {"half_gap_sum", last.half_gap_sum},
                {"log_growth", json_number(last.log_growth)},
                {"delta_running", json_number(last.delta_running)}};

  const auto low = IntervalSelector::closed_open(0.0, 0.5);
  const auto high = IntervalSelector::closed(0.5, 1.0);
  const int n = static_cast<int>(trace.records.size());
  ordered_json calib;
  for (const auto& sel : {low, high}) {
    const auto ratio = calibration_ratio(trace, sel, n);
    calib["ratio" + sel.label()] = ratio ? ordered_json(*ratio) : ordered_json();
    calib["kf_error" + sel.label()] = kf_error(trace, sel, n);
  }
  j["calibration"] = calib;

  j["corollary"] = {
      {"trailing_max_abs_theta_over_n", trailing_max_theta_over_n(trace)},
      {"window_fraction", 0.1}};

  const DriftReport drift = drift_check(trace, n);
  j["drift"] = {{"violations", drift.violations},
                {"first_violation",
                 drift.first_violation ? ordered_json(*drift.first_violation)
                                       : ordered_json()},
                {"max_violation", drift.max_violation},
                {"min_margin", json_number(drift.min_margin)}};

  const GrowthSummary growth = growth_summary(result);
  ordered_json levels = ordered_json::array();
  for (const GrowthLevel& level : growth.levels) {
    levels.push_back({{"k", level.k},
                      {"epsilon", level.epsilon},
                      {"log_q1", json_number(level.log_q1)},
                      {"log_q2", json_number(level.log_q2)},
                      {"rate", json_number(level.rate)},
                      {"bound", level.bound}});
  }
  j["growth"] = {{"delta_hat", json_number(growth.delta_hat)},
                 {"log_K_over_n", json_number(growth.log_k_over_n)},
                 {"levels", levels}};

  const LedgerReport ledger = verify_ledger(trace);
  j["ledger"] = {{"max_log_discrepancy", json_number(ledger.max_log_discrepancy)},
                 {"max_split_error", json_number(ledger.max_split_error)},
                 {"dead_monotone_ok", ledger.dead_monotone_ok}};
  return j;
}

}  // namespace

void write_summary_json(const std::string& path, const GameConfig& config,
                        const GameResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open summary path " + path);
  out << summary_json(config, result).dump(2) << '\n';
}

namespace {

struct Series {
  std::vector<double> xs, ys;
  const char* color;
};

void append_panel(std::string& svg, double top, const std::string& title,
                  const std::vector<Series>& series) {
  constexpr double kLeft = 70.0, kRight = 870.0, kHeight = 240.0;
  const double bottom = top + kHeight;
  double lo = kPosInf, hi = kNegInf, x_hi = 1.0;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.ys[i])) continue;
      lo = std::min(lo, s.ys[i]);
      hi = std::max(hi, s.ys[i]);
      x_hi = std::max(x_hi, s.xs[i]);
    }
  }
  if (!(hi > lo)) {
    lo = lo == kPosInf ? 0.0 : lo - 0.5;
    hi = lo + 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  char buf[256];
  auto addf = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    svg += buf;
  };
  addf("<text x=\"%.1f\" y=\"%.1f\" font-size=\"14\">%s</text>\n", kLeft,
       top - 8.0, title.c_str());
  addf("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
       "stroke=\"#888\"/>\n",
       kLeft, top, kRight - kLeft, kHeight);
  addf("<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\">%.4g</text>\n", 8.0,
       top + 12.0, hi);
  addf("<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\">%.4g</text>\n", 8.0, bottom,
       lo);
  addf("<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\">n=%.0f</text>\n", kRight - 60,
       bottom + 16.0, x_hi);

  for (const Series& s : series) {
    std::string pts;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.ys[i])) continue;
      const double x = kLeft + (kRight - kLeft) * (s.xs[i] / x_hi);
      const double y = bottom - kHeight * ((s.ys[i] - lo) / (hi - lo));
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
      pts += buf;
    }
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += s.color;
    svg += "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
  }
}

}  // namespace

void write_chart_svg(const std::string& path, const GameTrace& trace) {
  const std::size_t n = trace.records.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 1000);
  Series log_k{{}, {}, "#1f77b4"};
  Series t1{{}, {}, "#d62728"};
  Series t2{{}, {}, "#2ca02c"};
  for (std::size_t i = 0; i < n; i += stride) {
    const RoundRecord& rec = trace.records[i];
    log_k.xs.push_back(rec.n);
    log_k.ys.push_back(rec.log_capital_k);
    t1.xs.push_back(rec.n);
    t1.ys.push_back(rec.theta1 / rec.n);
    t2.xs.push_back(rec.n);
    t2.ys.push_back(rec.theta2 / rec.n);
  }

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"640\" "
      "viewBox=\"0 0 900 640\">\n<rect width=\"900\" height=\"640\" "
      "fill=\"white\"/>\n";
  append_panel(svg, 40.0, "log K_n", {log_k});
  append_panel(svg, 360.0,
               "theta_i / n (red: p &gt; 0.5 cell, green: p &lt;= 0.5 cell)",
               {t1, t2});
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open svg path " + path);
  out << svg;
}

int run(const GameConfig& config) { return run(config, std::cout); }

int run(const GameConfig& config, std::ostream& error_out) {
  GameResult result{config.mode, GameTrace{}, CapitalLedger(config.mode, 0, 0)};
  try {
    result = run_in_memory(config);
  } catch (const RestrictionViolation& violation) {
    ordered_json j = error_json("restriction", violation.what());
    j["error"]["violation"] = violation.kind() == ViolationKind::FConstraint
                                  ? "F_CONSTRAINT"
                                  : "NEGATIVE_CAPITAL";
    j["error"]["round"] = violation.round();
    error_out << j.dump(2) << '\n';
    return 3;
  } catch (const std::exception& ex) {
    error_out << error_json("config", ex.what()).dump(2) << '\n';
    return 2;
  }

  try {
    if (!config.trace_path.empty()) {
      write_trace_csv(config.trace_path, result.trace, config.record_every);
    }
    if (!config.summary_path.empty()) {
      write_summary_json(config.summary_path, config, result);
    }
    if (!config.svg_path.empty()) {
      write_chart_svg(config.svg_path, result.trace);
    }
  } catch (const std::exception& ex) {
    error_out << error_json("io", ex.what()).dump(2) << '\n';
    return 2;
  }
  return 0;
}

namespace {

struct CellPlan {
  GameConfig config;
  double delta = std::numeric_limits<double>::quiet_NaN();
};

struct CellResult {
  int exit_code = 0;
  std::string error;
  double final_log_k = std::numeric_limits<double>::quiet_NaN();
  double corollary = std::numeric_limits<double>::quiet_NaN();
  double max_drift_violation = std::numeric_limits<double>::quiet_NaN();
};

// Rewrites the grid step inside a rounding forecaster spec.
std::string forecaster_with_delta(const std::string& spec, double delta) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (kind != "uniform" && kind != "kf") {
    throw std::invalid_argument("delta sweep needs a uniform/kf forecaster, got '" +
                                spec + "'");
  }
  std::string rest;
  if (colon != std::string::npos) {
    const auto second = spec.find(':', colon + 1);
    if (second != std::string::npos) rest = spec.substr(second);  // keep base rule
  }
  return kind + ":" + format_double(delta) + rest;
}

std::optional<double> forecaster_delta(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if ((kind != "uniform" && kind != "kf") || colon == std::string::npos) {
    return std::nullopt;
  }
  const auto second = spec.find(':', colon + 1);
  const std::string step = spec.substr(colon + 1, second == std::string::npos
                                                      ? std::string::npos
                                                      : second - colon - 1);
  try {
    return std::stod(step);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

int sweep(const GameConfig& base, const SweepAxis& axis, int jobs,
          const std::string& aggregate_csv_path) {
  return sweep(base, axis, jobs, aggregate_csv_path, std::cout);
}

int sweep(const GameConfig& base, const SweepAxis& axis, int jobs,
          const std::string& aggregate_csv_path, std::ostream& error_out) {
  const bool by_delta = !axis.deltas.empty();
  const bool by_seed = !axis.seeds.empty();
  if (by_delta == by_seed) {
    error_out << error_json("config",
                            "sweep needs exactly one axis (deltas or seeds)")
                     .dump(2)
              << '\n';
    return 2;
  }

  std::vector<CellPlan> plan;
  try {
    if (by_delta) {
      for (std::size_t i = 0; i < axis.deltas.size(); ++i) {
        CellPlan cell{base, axis.deltas[i]};
        cell.config.forecaster =
            forecaster_with_delta(base.forecaster, axis.deltas[i]);
        cell.config.seed = base.seed ^ static_cast<std::uint64_t>(i);
        plan.push_back(std::move(cell));
      }
    } else {
      for (std::uint64_t seed : axis.seeds) {
        CellPlan cell{base, forecaster_delta(base.forecaster).value_or(
                                std::numeric_limits<double>::quiet_NaN())};
        cell.config.seed = seed;
        plan.push_back(std::move(cell));
      }
    }
  } catch (const std::exception& ex) {
    error_out << error_json("config", ex.what()).dump(2) << '\n';
    return 2;
  }

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::string suffix = ".cell" + std::to_string(i);
    plan[i].config.summary_path = aggregate_csv_path + suffix + ".json";
    plan[i].config.trace_path =
        base.trace_path.empty() ? "" : base.trace_path + suffix + ".csv";
    plan[i].config.svg_path =
        base.svg_path.empty() ? "" : base.svg_path + suffix + ".svg";
  }

  std::vector<CellResult> results(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      CellResult& cell = results[i];
      try {
        const GameResult game = run_in_memory(plan[i].config);
        write_summary_json(plan[i].config.summary_path, plan[i].config, game);
        if (!plan[i].config.trace_path.empty()) {
          write_trace_csv(plan[i].config.trace_path, game.trace,
                          plan[i].config.record_every);
        }
        if (!plan[i].config.svg_path.empty()) {
          write_chart_svg(plan[i].config.svg_path, game.trace);
        }
        cell.final_log_k = game.trace.records.back().log_capital_k;
        cell.corollary = trailing_max_theta_over_n(game.trace);
        cell.max_drift_violation =
            drift_check(game.trace, static_cast<int>(game.trace.records.size()))
                .max_violation;
      } catch (const std::exception& ex) {
        cell.exit_code = 1;
        cell.error = ex.what();
      }
    }
  };

  const int workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(plan.size())));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream out(aggregate_csv_path, std::ios::binary);
  if (!out) {
    error_out << error_json("io", "cannot open " + aggregate_csv_path).dump(2)
              << '\n';
    return 2;
  }
  out << "delta,seed,final_log_K,corollary_stat,max_drift_violation\n";
  int status = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const CellResult& cell = results[i];
    out << format_double(plan[i].delta) << ',' << plan[i].config.seed << ','
        << format_double(cell.final_log_k) << ',' << format_double(cell.corollary)
        << ',' << format_double(cell.max_drift_violation) << '\n';
    if (cell.exit_code != 0) {
      status = 1;
      error_out << error_json("cell", "cell " + std::to_string(i) + ": " +
                                          cell.error)
                       .dump(2)
                << '\n';
    }
  }
  return status;
}

}  // namespace bfg
