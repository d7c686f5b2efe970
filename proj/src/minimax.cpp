#include "bfg/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bfg {

TwoByMGame game_from_bet(const PayoffFunction& bet, std::span<const double> grid) {
  TwoByMGame game;
  game.points.reserve(grid.size());
  for (double p : grid) {
    const double s = bet(p);
    game.points.emplace_back(-p * s, (1.0 - p) * s);
  }
  return game;
}

MixedSolution solve_2xm(const TwoByMGame& game) {
  const auto& pts = game.points;
  if (pts.empty()) {
    throw std::invalid_argument("solve_2xm: empty game");
  }
  for (const auto& [a, b] : pts) {
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw std::invalid_argument("solve_2xm: nonfinite payoff");
    }
  }

  const std::size_t m = pts.size();
  double best = kPosInf;
  std::size_t best_i = 0, best_j = 0;
  double best_lambda = 1.0;  // weight on best_i; best_i == best_j means singleton

  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::max(pts[i].first, pts[i].second);
    if (v < best) {
      best = v;
      best_i = best_j = i;
      best_lambda = 1.0;
    }
  }

  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double di = pts[i].second - pts[i].first;
    if (di == 0.0) continue;  // flat line: its singleton already covers it
    for (std::size_t j = i + 1; j < m; ++j) {
      const double dj = pts[j].second - pts[j].first;
      if (!((di > 0.0 && dj < 0.0) || (di < 0.0 && dj > 0.0))) continue;
      const double lambda = dj / (dj - di);  // weight on i; in (0,1) by the sign test
      const double v = lambda * pts[i].first + (1.0 - lambda) * pts[j].first;
      if (v < best) {
        best = v;
        best_i = i;
        best_j = j;
        best_lambda = lambda;
      }
    }
  }

  MixedSolution sol;
  sol.value = best;
  sol.weights.assign(m, 0.0);
  if (best_i == best_j) {
    sol.weights[best_i] = 1.0;
  } else {
    sol.weights[best_i] = best_lambda;
    sol.weights[best_j] = 1.0 - best_lambda;
  }
  return sol;
}

double reality_value_oracle(const PayoffFunction& bet, std::span<const double> grid,
                            int q_resolution) {
  if (q_resolution < 2) {
    throw std::invalid_argument("reality_value_oracle: q_resolution must be >= 2");
  }
  if (grid.empty()) {
    throw std::invalid_argument("reality_value_oracle: empty grid");
  }

  std::vector<double> slope(grid.size()), offset(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    slope[i] = bet(grid[i]);             // line L_i(q) = S(p_i) * (q - p_i)
    offset[i] = -slope[i] * grid[i];
  }

  auto envelope = [&](double q) {
    double lo = kPosInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      lo = std::min(lo, slope[i] * q + offset[i]);
    }
    return lo;
  };

  double best = std::max(envelope(0.0), envelope(1.0));
  for (int t = 1; t + 1 < q_resolution; ++t) {
    const double q = static_cast<double>(t) / (q_resolution - 1);
    best = std::max(best, envelope(q));
  }
  // Breakpoints of the lower envelope are pairwise line intersections.
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double ds = slope[i] - slope[j];
      if (ds == 0.0) continue;
      const double q = (offset[j] - offset[i]) / ds;
      if (q > 0.0 && q < 1.0) best = std::max(best, envelope(q));
    }
  }
  return best;
}

}  // namespace bfg
