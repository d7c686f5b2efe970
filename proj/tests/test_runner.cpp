#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "bfg/runner.hpp"

using namespace bfg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

long count_lines(const std::string& text) {
  long lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("forecast_duel_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("zero strategies produce a constant-capital csv") {
  TempDir dir;
  GameConfig config;
  config.rounds = 3;
  config.skeptic = "skeptic_zero";
  config.forecaster = "point:0.5";
  config.reality = "oakes2";
  config.trace_path = dir.file("trace.csv");
  std::ostringstream err;
  CHECK(run(config, err) == 0);
  const std::string csv = slurp(config.trace_path);
  CHECK(count_lines(csv) == 4);  // header + 3 rows
  CHECK(csv.starts_with(
      "n,omega,p_sampled,support_size,delta_n,s_at_p,f_at_p,theta1,theta2,"
      "g_sum,g_drift,log_Q,log_F,log_K\n"));
  // point-mass forecasts have an infinite min gap
  CHECK(csv.find(",inf,") != std::string::npos);
}

TEST_CASE("same config and seed give byte-identical outputs") {
  TempDir dir;
  GameConfig config;
  config.rounds = 1000;
  config.seed = 7;
  config.trace_path = dir.file("a.csv");
  config.summary_path = dir.file("a.json");
  std::ostringstream err;
  REQUIRE(run(config, err) == 0);
  const std::string csv_a = slurp(config.trace_path);
  const std::string json_a = slurp(config.summary_path);

  config.trace_path = dir.file("b.csv");
  config.summary_path = dir.file("b.json");
  REQUIRE(run(config, err) == 0);
  CHECK(slurp(config.trace_path) == csv_a);
  CHECK(slurp(config.summary_path) == json_a);
}

TEST_CASE("trace thinning never affects the summary") {
  TempDir dir;
  GameConfig config;
  config.rounds = 500;
  config.seed = 3;
  config.trace_path = dir.file("full.csv");
  config.summary_path = dir.file("full.json");
  std::ostringstream err;
  REQUIRE(run(config, err) == 0);

  GameConfig thinned = config;
  thinned.record_every = 50;
  thinned.trace_path = dir.file("thin.csv");
  thinned.summary_path = dir.file("thin.json");
  REQUIRE(run(thinned, err) == 0);

  CHECK(count_lines(slurp(thinned.trace_path)) == 11);  // header + 10 rows
  nlohmann::json full = nlohmann::json::parse(slurp(config.summary_path));
  nlohmann::json thin = nlohmann::json::parse(slurp(thinned.summary_path));
  full.erase("config");
  thin.erase("config");
  CHECK(full == thin);
}

TEST_CASE("summary carries the documented sections") {
  TempDir dir;
  GameConfig config;
  config.rounds = 200;
  config.summary_path = dir.file("summary.json");
  std::ostringstream err;
  REQUIRE(run(config, err) == 0);
  const auto j = nlohmann::json::parse(slurp(config.summary_path));
  CHECK(j.contains("config"));
  CHECK(j.contains("final"));
  CHECK(j["calibration"].contains("ratio[0,0.5)"));
  CHECK(j["calibration"].contains("ratio[0.5,1]"));
  CHECK(j["corollary"].contains("trailing_max_abs_theta_over_n"));
  CHECK(j["drift"]["violations"] == 0);
  CHECK(j["growth"]["levels"].size() == 16);
  CHECK(j["ledger"]["dead_monotone_ok"] == true);
}

TEST_CASE("svg chart is written with two panels") {
  TempDir dir;
  GameConfig config;
  config.rounds = 100;
  config.svg_path = dir.file("chart.svg");
  std::ostringstream err;
  REQUIRE(run(config, err) == 0);
  const std::string svg = slurp(config.svg_path);
  CHECK(svg.starts_with("<svg"));
  CHECK(count_lines(svg) > 5);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("log K_n") != std::string::npos);
}

TEST_CASE("bad configs exit 2 with an error json") {
  GameConfig config;
  config.rounds = 0;
  std::ostringstream err;
  CHECK(run(config, err) == 2);
  const auto j = nlohmann::json::parse(err.str());
  CHECK(j["error"]["kind"] == "config");

  GameConfig unknown;
  unknown.forecaster = "psychic";
  std::ostringstream err2;
  CHECK(run(unknown, err2) == 2);
  CHECK(nlohmann::json::parse(err2.str())["error"]["kind"] == "config");
}

TEST_CASE("sweep over grid steps writes cells and an aggregate") {
  TempDir dir;
  GameConfig base;
  base.rounds = 400;
  base.seed = 11;
  const std::string aggregate = dir.file("sweep.csv");
  SweepAxis axis;
  axis.deltas = {0.05, 0.1, 0.2};
  std::ostringstream err;
  REQUIRE(sweep(base, axis, 2, aggregate, err) == 0);

  const std::string csv = slurp(aggregate);
  CHECK(count_lines(csv) == 4);
  CHECK(csv.starts_with("delta,seed,final_log_K,corollary_stat,max_drift_violation\n"));
  for (int i = 0; i < 3; ++i) {
    CHECK(fs::exists(aggregate + ".cell" + std::to_string(i) + ".json"));
  }
  // delta-axis seeds derive as base seed XOR cell index
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.find(",11,") != std::string::npos);
  std::getline(lines, line);
  CHECK(line.find(",10,") != std::string::npos);  // 11 ^ 1
}

TEST_CASE("sweep over seeds") {
  TempDir dir;
  GameConfig base;
  base.rounds = 300;
  const std::string aggregate = dir.file("seeds.csv");
  SweepAxis axis;
  axis.seeds = {1, 2, 3, 4};
  std::ostringstream err;
  REQUIRE(sweep(base, axis, 4, aggregate, err) == 0);
  CHECK(count_lines(slurp(aggregate)) == 5);
}

TEST_CASE("sweep needs exactly one axis") {
  TempDir dir;
  GameConfig base;
  std::ostringstream err;
  CHECK(sweep(base, SweepAxis{}, 1, dir.file("x.csv"), err) == 2);
  SweepAxis both;
  both.deltas = {0.1};
  both.seeds = {1};
  std::ostringstream err2;
  CHECK(sweep(base, both, 1, dir.file("y.csv"), err2) == 2);
}

TEST_CASE("delta sweep rejects forecasters without a grid step") {
  TempDir dir;
  GameConfig base;
  base.forecaster = "minimax:1";
  SweepAxis axis;
  axis.deltas = {0.1};
  std::ostringstream err;
  CHECK(sweep(base, axis, 1, dir.file("z.csv"), err) == 2);
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-kPosInf) == "-inf");
  CHECK(format_double(kPosInf) == "inf");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}
