#pragma once

#include <span>
#include <utility>
#include <vector>

#include "bfg/core.hpp"

namespace bfg {

/// Per-round zero-sum game between the forecast chooser and the outcome
/// chooser. points[i] = (a_i, b_i): payoff to the bettor when the outcome
/// is 0 resp. 1 and pure forecast i is played.
struct TwoByMGame {
  std::vector<std::pair<double, double>> points;
};

struct MixedSolution {
  std::vector<double> weights;  // mixture over the game's points
  double value = 0.0;           // max(sum w*a, sum w*b) at the optimum
};

/// Payoff vectors (-p*S(p), (1-p)*S(p)) over a forecast grid.
TwoByMGame game_from_bet(const PayoffFunction& bet, std::span<const double> grid);

/// Exact optimum of min over mixtures of max(w*a, w*b).
///
/// The optimum of the max of two linear functions over the simplex sits on
/// a support of size <= 2, so singletons and crossing pairs are enumerated
/// exhaustively. First strict improvement wins, which breaks ties toward
/// the lowest indices.
MixedSolution solve_2xm(const TwoByMGame& game);

/// Independent dual-side value: max over outcome mixtures q of
/// min over grid p of S(p)(q - p). Scans a uniform q mesh plus every
/// pairwise line intersection, which makes the scan exact for the
/// piecewise-linear concave lower envelope.
double reality_value_oracle(const PayoffFunction& bet, std::span<const double> grid,
                            int q_resolution);

}  // namespace bfg
