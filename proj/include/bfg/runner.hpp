#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bfg/engine.hpp"

namespace bfg {

struct GameConfig {
  int rounds = 1000;
  std::uint64_t seed = 1;
  GameMode mode = GameMode::SkepticTest;
  std::string forecaster = "uniform:0.2";
  std::string reality = "oakes";
  std::string skeptic = "skeptic_t2:16";
  int record_every = 1;  // trace CSV thinning; summaries always use every round
  std::string trace_path;    // empty = skip
  std::string summary_path;  // empty = skip
  std::string svg_path;      // empty = skip

  std::string fingerprint() const;
};

/// Plays the configured game and returns the result without touching the
/// filesystem.
GameResult run_in_memory(const GameConfig& config);

/// Plays the game and writes the configured outputs. Returns the process
/// exit status: 0 success, 2 bad config, 3 restriction violation. On
/// failure a machine-readable error JSON goes to `error_out` (default
/// stdout).
int run(const GameConfig& config);
int run(const GameConfig& config, std::ostream& error_out);

/// One sweep axis: either forecaster grid steps or seeds, not both.
struct SweepAxis {
  std::vector<double> deltas;
  std::vector<std::uint64_t> seeds;
};

/// Runs one game per axis value (cells are independent; up to `jobs` in
/// parallel). Writes a summary JSON per cell next to the aggregate CSV
/// (<aggregate>.cell<i>.json) plus one aggregate row per cell. Delta-axis
/// cells derive their seed as base seed XOR cell index.
int sweep(const GameConfig& base, const SweepAxis& axis, int jobs,
          const std::string& aggregate_csv_path);
int sweep(const GameConfig& base, const SweepAxis& axis, int jobs,
          const std::string& aggregate_csv_path, std::ostream& error_out);

// Output writers, exposed for tests.
void write_trace_csv(const std::string& path, const GameTrace& trace,
                     int record_every);
void write_summary_json(const std::string& path, const GameConfig& config,
                        const GameResult& result);
void write_chart_svg(const std::string& path, const GameTrace& trace);

/// Shortest round-trip decimal representation; infinities serialize as
/// "inf" / "-inf".
std::string format_double(double v);

/// Diagnostic verbosity from the FORECAST_DUEL_LOG environment variable.
int log_level();

}  // namespace bfg
