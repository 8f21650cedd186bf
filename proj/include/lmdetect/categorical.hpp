#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lmdetect/error.hpp"

namespace lmdetect {

/// Neumaier-compensated sum.
inline double stable_sum(std::span<const double> xs) {
  double sum = 0.0;
  double carry = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + carry;
}

/// Probability vector over a finite atom set. Atoms are indexed 0..size()-1;
/// for sequence distributions the index is the base-|A| code of the sequence.
class Categorical {
 public:
  static constexpr double kSumTolerance = 1e-12;

  Categorical() = default;

  /// Validates nonnegativity and unit mass (within `tolerance`).
  explicit Categorical(std::vector<double> probs, double tolerance = kSumTolerance)
      : probs_(std::move(probs)) {
    require(!probs_.empty(), "categorical: empty probability vector");
    for (double p : probs_) {
      require(std::isfinite(p) && p >= 0.0, "categorical: entries must be finite and >= 0");
    }
    const double total = stable_sum(probs_);
    require(std::abs(total - 1.0) <= tolerance,
            "categorical: probabilities sum to " + std::to_string(total) + ", not 1");
  }

  /// Rescales nonnegative weights to unit mass.
  static Categorical normalized(std::vector<double> weights) {
    require(!weights.empty(), "categorical: empty weight vector");
    const double total = stable_sum(weights);
    require(total > 0.0 && std::isfinite(total), "categorical: weights must have positive finite mass");
    for (auto& w : weights) w /= total;
    return Categorical(std::move(weights), 1e-9);
  }

  static Categorical uniform(std::size_t n) {
    require(n > 0, "categorical: uniform over zero atoms");
    return Categorical(std::vector<double>(n, 1.0 / static_cast<double>(n)), 1e-9);
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  double min() const {
    double m = probs_.front();
    for (double p : probs_) m = std::min(m, p);
    return m;
  }

  friend bool operator==(const Categorical&, const Categorical&) = default;

 private:
  std::vector<double> probs_;
};

}  // namespace lmdetect
