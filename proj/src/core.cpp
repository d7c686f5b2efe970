#include "bfg/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bfg {

namespace {
constexpr double kWeightSumTol = 1e-12;
}

Prob::Prob(double v) : v_(v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("Prob out of [0,1]: " + std::to_string(v));
  }
}

Outcome::Outcome(int v) : v_(v) {
  if (v != 0 && v != 1) {
    throw std::invalid_argument("Outcome must be 0 or 1");
  }
}

FiniteDistribution::FiniteDistribution(std::vector<double> support,
                                       std::vector<double> weights) {
  if (support.empty()) {
    throw std::invalid_argument("FiniteDistribution: empty support");
  }
  if (support.size() != weights.size()) {
    throw std::invalid_argument("FiniteDistribution: support/weights size mismatch");
  }
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });

  support_.reserve(support.size());
  weights_.reserve(weights.size());
  for (std::size_t idx : order) {
    const double p = support[idx];
    const double w = weights[idx];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("FiniteDistribution: support point out of [0,1]");
    }
    if (!(w >= 0.0)) {
      throw std::invalid_argument("FiniteDistribution: negative weight");
    }
    if (!support_.empty() && support_.back() == p) {
      weights_.back() += w;  // merge exact duplicates
    } else {
      support_.push_back(p);
      weights_.push_back(w);
    }
  }

  CompensatedSum total;
  for (double w : weights_) total.add(w);
  if (std::abs(total.value() - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("FiniteDistribution: weights sum to " +
                                std::to_string(total.value()));
  }
}

FiniteDistribution FiniteDistribution::point_mass(double p) {
  return FiniteDistribution({p}, {1.0});
}

double FiniteDistribution::expectation(const std::function<double(double)>& f) const {
  CompensatedSum acc;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    acc.add(weights_[i] * f(support_[i]));
  }
  return acc.value();
}

double FiniteDistribution::mean() const {
  return expectation([](double p) { return p; });
}

double FiniteDistribution::min_gap() const {
  if (support_.size() < 2) return kPosInf;
  double gap = kPosInf;
  for (std::size_t i = 1; i < support_.size(); ++i) {
    gap = std::min(gap, support_[i] - support_[i - 1]);
  }
  return gap;
}

double FiniteDistribution::mass_above(double threshold) const {
  CompensatedSum acc;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] > threshold) acc.add(weights_[i]);
  }
  return acc.value();
}

Prob sample_at(const FiniteDistribution& dist, double u) {
  double cum = 0.0;
  const auto& support = dist.support();
  const auto& weights = dist.weights();
  for (std::size_t i = 0; i < support.size(); ++i) {
    cum += weights[i];
    if (cum > u) return Prob(support[i]);
  }
  // Rounding can leave the final cumulative a hair below the draw.
  return Prob(support.back());
}

Prob sample(const FiniteDistribution& dist, RandomSource& rng) {
  return sample_at(dist, rng.next_unit());
}

}  // namespace bfg
