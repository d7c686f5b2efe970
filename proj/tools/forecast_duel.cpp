#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bfg/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "forecast_duel: binary forecasting game simulator. Plays pluggable "
      "skeptic/forecaster/reality strategies against each other and writes "
      "capital traces, summaries and charts."};

  bfg::GameConfig config;
  std::string mode = "skeptic-test";
  std::vector<double> sweep_deltas;
  std::vector<std::uint64_t> sweep_seeds;
  int jobs = 1;

  app.add_option("--rounds", config.rounds, "number of rounds (>= 1)")
      ->capture_default_str();
  app.add_option("--seed", config.seed, "game seed")->capture_default_str();
  app.add_option("--mode", mode, "forecaster-test | skeptic-test")
      ->check(CLI::IsMember({"forecaster-test", "skeptic-test"}))
      ->capture_default_str();
  app.add_option("--forecaster", config.forecaster,
                 "point[:c] | uniform:STEP[:c] | kf:STEP[:c] | minimax:SLACK0")
      ->capture_default_str();
  app.add_option("--reality", config.reality,
                 "oakes | oakes2 | bernoulli:Q | replay:PATH")
      ->capture_default_str();
  app.add_option("--skeptic", config.skeptic, "skeptic_zero | skeptic_t2:K")
      ->capture_default_str();
  app.add_option("--record-every", config.record_every,
                 "write every k-th round to the trace CSV")
      ->capture_default_str();
  app.add_option("--trace", config.trace_path, "trace CSV output path");
  app.add_option("--summary", config.summary_path,
                 "summary JSON path (aggregate CSV path in sweep mode)");
  app.add_option("--svg", config.svg_path, "chart SVG output path");
  app.add_option("--sweep-delta", sweep_deltas,
                 "comma-separated grid steps; one game per value")
      ->delimiter(',');
  app.add_option("--sweep-seed", sweep_seeds,
                 "comma-separated seeds; one game per value")
      ->delimiter(',');
  app.add_option("--jobs", jobs, "parallel sweep cells")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  config.mode = mode == "forecaster-test" ? bfg::GameMode::ForecasterTest
                                          : bfg::GameMode::SkepticTest;

  if (!sweep_deltas.empty() || !sweep_seeds.empty()) {
    if (config.summary_path.empty()) {
      std::cout << "{\"error\":{\"kind\":\"config\",\"message\":\"sweep mode "
                   "needs --summary for the aggregate CSV\"}}\n";
      return 2;
    }
    bfg::SweepAxis axis{sweep_deltas, sweep_seeds};
    return bfg::sweep(config, axis, jobs, config.summary_path);
  }
  return bfg::run(config);
}
