#include "lmdetect/hypotest.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lmdetect;

namespace {

const MarkovModel kP = MarkovModel::iid(Categorical({0.5, 0.5}));
const MarkovModel kQ = MarkovModel::iid(Categorical({0.9, 0.1}));
const double kD = 0.5 * std::log(25.0 / 9.0);

// Exact non-randomized NP miss probability for the binary i.i.d. pair by
// binomial summation: S_n is decreasing in the count K of symbol 0, so
// "decide P" is K <= c with c the smallest cut of P-tail mass <= eps.
double exact_log_beta(std::size_t n, double eps) {
  auto log_binom = [&](std::size_t k, double p) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
           (n - k) * std::log1p(-p);
  };
  std::size_t c = 0;
  for (;; ++c) {
    double tail = 0.0;
    for (std::size_t k = c + 1; k <= n; ++k) tail += std::exp(log_binom(k, 0.5));
    if (tail <= eps) break;
  }
  double peak = -1e300;
  for (std::size_t k = 0; k <= c; ++k) peak = std::max(peak, log_binom(k, 0.9));
  double s = 0.0;
  for (std::size_t k = 0; k <= c; ++k) s += std::exp(log_binom(k, 0.9) - peak);
  return peak + std::log(s);
}

}  // namespace

TEST(lrt_statistic, equal_models_and_support) {
  const auto seq = sample(kQ, 100, 1);
  EXPECT_EQ(lrt_statistic(kP, kP, seq).value, 0.0);
  const auto zero = MarkovModel::iid(Categorical({1.0, 0.0}));
  const auto r = lrt_statistic(kP, zero, TokenSeq{0, 1, 0});
  EXPECT_EQ(r.violation, SupportSide::q_zero);
  EXPECT_EQ(r.value, kInf);
  const auto l = lrt_statistic(zero, kP, TokenSeq{0, 1});
  EXPECT_EQ(l.violation, SupportSide::p_zero);
  EXPECT_EQ(l.value, kNegInf);
}

TEST(lrt_statistic, converges_to_divergence_rates) {
  const auto p = MarkovModel::order1({{0.7, 0.3}, {0.4, 0.6}});
  const auto q = MarkovModel::order1({{0.5, 0.5}, {0.2, 0.8}});
  EXPECT_NEAR(lrt_statistic(p, q, sample(p, 400'000, 2)).value, kl_rate(p, q), 3e-3);
  EXPECT_NEAR(lrt_statistic(p, q, sample(q, 400'000, 3)).value, -kl_rate(q, p), 3e-3);
}

TEST(lrt_statistic, streaming_simulation_matches_batch) {
  const auto p = MarkovModel::order1({{0.7, 0.3}, {0.4, 0.6}});
  const auto q = fit_empirical(Alphabet::synthetic(2), sample(p, 50, 9), 2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto seq = sample(p, 40, s);
    const auto batch = lrt_statistic(p, q, seq);
    const auto stream = detail::simulate_statistic(p, p, q, 40, s);
    EXPECT_EQ(batch.violation, stream.violation);
    if (batch.violation == SupportSide::none) {
      EXPECT_NEAR(batch.value, stream.value, 1e-12);
    }
  }
}

TEST(np_threshold, blind_test_is_degenerate) {
  const auto t = np_threshold(kP, kP, 100, 0.1, 2000, 1);
  EXPECT_TRUE(t.degenerate);
  EXPECT_EQ(t.threshold, 0.0);
  EXPECT_EQ(t.false_alarm, 0.0);
  const auto outcome = miss_probability(kP, kP, t, 2000, 2);
  EXPECT_EQ(outcome.beta_hat, 1.0);
}

TEST(np_threshold, holdout_false_alarm) {
  const auto t = np_threshold(kP, kQ, 100, 0.05, 20000, 11);
  EXPECT_FALSE(t.exact);
  // fresh P-samples under another seed
  const auto stats = detail::simulate_statistics(kP, kP, kQ, 100, 20000, 12, 1);
  const double fa = static_cast<double>(std::count_if(stats.begin(), stats.end(),
                                                      [&](double s) { return !detail::at_or_above(s, t.threshold); })) /
                    static_cast<double>(stats.size());
  EXPECT_NEAR(fa, 0.05, 0.01);
  EXPECT_LE(t.false_alarm, 0.05);
}

TEST(np_threshold, nondecreasing_in_epsilon) {
  double prev = -kInf;
  for (double eps : {0.01, 0.05, 0.1, 0.2, 0.4}) {
    const auto t = np_threshold(kP, kQ, 60, eps, 5000, 7);
    EXPECT_GE(t.threshold, prev);
    prev = t.threshold;
  }
}

TEST(np_threshold, preconditions) {
  EXPECT_THROW(np_threshold(kP, kQ, 100, 0.0, 5000, 1), Error);
  EXPECT_THROW(np_threshold(kP, kQ, 100, 0.1, 999, 1), Error);
  EXPECT_NO_THROW(np_threshold(kP, kQ, 10, 0.1, 0, 1));  // exact path needs no trials
}

TEST(np_threshold, exact_and_monte_carlo_agree) {
  HypotestOptions mc;
  mc.force_monte_carlo = true;
  for (std::size_t n : {6, 10, 12}) {
    const auto exact = np_threshold(kP, kQ, n, 0.1, 0, 1);
    ASSERT_TRUE(exact.exact);
    const auto sim = np_threshold(kP, kQ, n, 0.1, 100000, 5, mc);
    EXPECT_NEAR(sim.threshold, exact.threshold, 1e-12) << n;
    const auto be = miss_probability(kP, kQ, exact, 0, 0);
    const auto bm = miss_probability(kP, kQ, exact, 100000, 6, MissEstimator::direct, mc);
    EXPECT_GE(be.beta_hat, bm.ci_low);
    EXPECT_LE(be.beta_hat, bm.ci_high);
    const auto bi = miss_probability(kP, kQ, exact, 100000, 7, MissEstimator::importance, mc);
    EXPECT_NEAR(bi.beta_hat, be.beta_hat, 0.05 * be.beta_hat);
    EXPECT_NEAR(be.log_beta_hat, exact_log_beta(n, 0.1), 1e-9);
  }
}

TEST(clopper_pearson, reference_values) {
  auto [lo, hi] = clopper_pearson(5, 100);
  EXPECT_NEAR(lo, 0.016431879182052155, 1e-12);
  EXPECT_NEAR(hi, 0.11283491110546275, 1e-12);
  std::tie(lo, hi) = clopper_pearson(1, 10);
  EXPECT_NEAR(lo, 0.0025285785444617848, 1e-12);
  EXPECT_NEAR(hi, 0.4450161170281954, 1e-12);
  std::tie(lo, hi) = clopper_pearson(0, 100);
  EXPECT_EQ(lo, 0.0);
  EXPECT_NEAR(hi, 1.0 - std::pow(0.05, 0.01), 1e-15);
}

TEST(miss_probability, direct_zero_misses_is_one_sided) {
  const auto t = np_threshold(kP, kQ, 60, 0.1, 2000, 1);
  const auto o = miss_probability(kP, kQ, t, 2000, 2);
  EXPECT_EQ(o.misses, 0u);
  EXPECT_TRUE(o.one_sided);
  EXPECT_EQ(o.beta_hat, 0.0);
  EXPECT_GT(o.ci_high, 0.0);
}

TEST(miss_probability, importance_estimate_matches_binomial_oracle) {
  const auto t = np_threshold(kP, kQ, 200, 0.1, 100000, 21);
  const auto o = miss_probability(kP, kQ, t, 100000, 22, MissEstimator::importance);
  const double want = exact_log_beta(200, 0.1);
  EXPECT_NEAR(o.log_beta_hat, want, 0.1);
  EXPECT_LE(o.log_ci_low, want + 0.02);
  EXPECT_GE(o.log_ci_high, want - 0.02);
  // exact finite-n exponent sits 15.9% below D at n = 200
  EXPECT_NEAR(-want / 200.0 / kD - 1.0, -0.1589, 1e-3);
}

TEST(miss_probability, nonincreasing_in_n) {
  double prev = 1.0;
  for (std::size_t n : {20, 40, 80, 160}) {
    const auto t = np_threshold(kP, kQ, n, 0.1, 20000, n);
    const auto o = miss_probability(kP, kQ, t, 20000, n + 1, MissEstimator::importance);
    EXPECT_LE(o.beta_hat, prev);
    prev = o.beta_hat;
  }
}

TEST(exponent_fit, blind_and_iid_pair) {
  const std::vector<std::size_t> grid{20, 40, 80};
  const auto blind = exponent_fit(kP, kP, 0.1, grid, 2000, 3);
  EXPECT_NEAR(blind.slope, 0.0, 1e-12);
  const auto fit = exponent_fit(kP, kQ, 0.1, grid, 20000, 4);
  EXPECT_EQ(fit.n_grid.size(), 3u);
  EXPECT_NEAR(fit.theory, kD, 1e-15);
  EXPECT_GT(fit.slope, 0.3);
  EXPECT_LT(fit.slope, kD);
  EXPECT_THROW(exponent_fit(kP, kQ, 0.1, std::vector<std::size_t>{20, 40}, 2000, 1), Error);
}

TEST(exponent_fit, reproducible_across_worker_counts) {
  const std::vector<std::size_t> grid{30, 60, 90};
  HypotestOptions one, four;
  four.workers = 4;
  const auto a = exponent_fit(kP, kQ, 0.1, grid, 5000, 8, MissEstimator::importance, one);
  const auto b = exponent_fit(kP, kQ, 0.1, grid, 5000, 8, MissEstimator::importance, four);
  EXPECT_EQ(a.slope, b.slope);
  EXPECT_EQ(a.neg_log_beta, b.neg_log_beta);
}

TEST(bayes_error, examples) {
  EXPECT_NEAR(bayes_error(kP, kP, 50, 0.5, 10000, 1).estimate, 0.5, 1e-15);
  const auto e = bayes_error(kP, kQ, 50, 0.5, 200000, 2);
  EXPECT_TRUE(e.bound_holds);
  EXPECT_NEAR(e.chernoff_bound, std::exp(-50 * chernoff(Categorical({0.5, 0.5}), Categorical({0.9, 0.1})).value),
              1e-15);
  const auto swapped = bayes_error(kQ, kP, 50, 0.5, 200000, 3);
  EXPECT_NEAR(e.estimate, swapped.estimate, 3 * (e.standard_error + swapped.standard_error) + 1e-4);
  EXPECT_NEAR(bayes_error(kP, kQ, 10, 0.5, 0, 0).estimate, bayes_error(kQ, kP, 10, 0.5, 0, 0).estimate, 1e-15);
}
