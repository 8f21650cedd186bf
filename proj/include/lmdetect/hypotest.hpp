#pragma once

// The detection experiment: H0 "text ~ P (authentic)" against H1 "text ~ Q
// (generated)" with the normalized log-likelihood ratio
//   S_n = (1/n) ln(P_n / Q_n)(y_1..y_n),
// Neyman-Pearson calibration of the threshold on P-samples, and measurement
// of the miss probability beta and its exponent in n.
//
// Decision rule: decide H0 (authentic) iff S_n >= threshold; ties go to H0.
// S_n lives on a lattice for small models, and the same lattice point is
// reached through differently rounded sums, so values within kTieTolerance
// (relative) of the threshold count as ties.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "lmdetect/categorical.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/infometrics.hpp"
#include "lmdetect/markov.hpp"
#include "lmdetect/parallel.hpp"
#include "lmdetect/random.hpp"

namespace lmdetect {

enum class SupportSide { none, p_zero, q_zero, both };

inline std::string_view to_string(SupportSide s) {
  switch (s) {
    case SupportSide::none: return "none";
    case SupportSide::p_zero: return "p_zero";
    case SupportSide::q_zero: return "q_zero";
    case SupportSide::both: return "both";
  }
  return "?";
}

struct LrtResult {
  double value = 0.0;  ///< nats per token; -inf if P_n = 0, +inf if Q_n = 0
  SupportSide violation = SupportSide::none;
};

inline constexpr double kTieTolerance = 1e-9;

namespace detail {

inline bool at_or_above(double s, double t) {
  if (!std::isfinite(t)) return s >= t;
  return s >= t - kTieTolerance * std::max(1.0, std::abs(t));
}

inline LrtResult combine(double lp, double lq, std::size_t n) {
  LrtResult r;
  const bool pz = std::isinf(lp);
  const bool qz = std::isinf(lq);
  if (pz && qz) {
    r.violation = SupportSide::both;
    r.value = std::numeric_limits<double>::quiet_NaN();
  } else if (pz) {
    r.violation = SupportSide::p_zero;
    r.value = kNegInf;
  } else if (qz) {
    r.violation = SupportSide::q_zero;
    r.value = kInf;
  } else {
    r.value = (lp - lq) / static_cast<double>(n);
  }
  return r;
}

}  // namespace detail

/// (1/n)(ln P_n(seq) - ln Q_n(seq)). A context missing from a model counts
/// as a zero-probability event for that model.
inline LrtResult lrt_statistic(const MarkovModel& p, const MarkovModel& q, std::span<const Symbol> seq) {
  require(p.alphabet_size() == q.alphabet_size(), "lrt_statistic: models over different alphabets");
  require(!seq.empty(), "lrt_statistic: empty sequence");
  return detail::combine(detail::log_likelihood_or_zero(p, seq), detail::log_likelihood_or_zero(q, seq),
                         seq.size());
}

// ---------------------------------------------------------------------------
// Simulation engine

namespace detail {

// Incremental log-likelihood of a growing sequence under one model.
class StreamScorer {
 public:
  explicit StreamScorer(const MarkovModel& model) : model_(&model) {}

  void push(Symbol x, std::size_t position) {
    const std::size_t k = model_->order();
    if (position >= k && total_ != kNegInf) {
      const auto* row = model_->find_row(code_);
      total_ += row ? row->log_prob(x) : kNegInf;
    }
    code_ = model_->codec().shift(code_, x);
    if (k > 0 && position + 1 == k) total_ += std::log(model_->init_prob(code_));
  }

  double total() const { return total_; }

 private:
  const MarkovModel* model_;
  std::uint64_t code_ = 0;
  double total_ = 0.0;
};

// Draws a length-n sequence from `gen` and returns its statistic.
inline LrtResult simulate_statistic(const MarkovModel& gen, const MarkovModel& p, const MarkovModel& q,
                                    std::size_t n, std::uint64_t seed) {
  if (n < std::max(p.order(), q.order())) {
    const auto seq = sample(gen, n, seed);
    return lrt_statistic(p, q, seq);
  }
  Rng rng(seed);
  StreamScorer sp(p), sq(q);
  const std::size_t k = gen.order();
  const std::size_t alphabet_size = gen.alphabet_size();
  std::uint64_t ctx = 0;
  std::size_t i = 0;
  if (k > 0) {
    ctx = draw_init(gen, rng);
    for (Symbol s : gen.codec().decode(ctx)) {
      if (i == n) break;
      sp.push(s, i);
      sq.push(s, i);
      ++i;
    }
  }
  for (; i < n; ++i) {
    const Symbol a = gen.row(ctx).draw(rng.uniform(), alphabet_size);
    sp.push(a, i);
    sq.push(a, i);
    ctx = gen.codec().shift(ctx, a);
  }
  return combine(sp.total(), sq.total(), n);
}

inline std::vector<double> simulate_statistics(const MarkovModel& gen, const MarkovModel& p, const MarkovModel& q,
                                               std::size_t n, std::size_t trials, std::uint64_t seed,
                                               std::size_t workers) {
  std::vector<double> stats(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    const auto r = simulate_statistic(gen, p, q, n, derive_seed(seed, i));
    if (r.violation == SupportSide::both) {
      fail(ErrorKind::support, "simulation drew a sequence impossible under both P and Q");
    }
    stats[i] = r.value;
  });
  return stats;
}

// Exact statistic law over all |A|^n sequences, grouped into tie classes.
struct ExactLaw {
  std::vector<double> stat;    // ascending
  std::vector<double> p_mass;
  std::vector<double> q_mass;
};

inline ExactLaw exact_law(const MarkovModel& p, const MarkovModel& q, std::size_t n) {
  const auto pd = sequence_distribution(p, n);
  const auto qd = sequence_distribution(q, n);
  struct Atom {
    double s, pm, qm;
  };
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    if (pd[i] == 0.0 && qd[i] == 0.0) continue;
    double s;
    if (pd[i] == 0.0) {
      s = kNegInf;
    } else if (qd[i] == 0.0) {
      s = kInf;
    } else {
      s = (std::log(pd[i]) - std::log(qd[i])) / static_cast<double>(n);
    }
    atoms.push_back({s, pd[i], qd[i]});
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.s < b.s; });
  ExactLaw law;
  for (const auto& a : atoms) {
    const bool tie = !law.stat.empty() && std::isfinite(a.s) &&
                     std::abs(a.s - law.stat.back()) <= kTieTolerance * std::max(1.0, std::abs(law.stat.back()));
    if (tie || (!law.stat.empty() && !std::isfinite(a.s) && a.s == law.stat.back())) {
      law.p_mass.back() += a.pm;
      law.q_mass.back() += a.qm;
    } else {
      law.stat.push_back(a.s);
      law.p_mass.push_back(a.pm);
      law.q_mass.push_back(a.qm);
    }
  }
  return law;
}

}  // namespace detail

struct HypotestOptions {
  std::size_t workers = 1;
  /// Exact enumeration replaces Monte Carlo when |A|^n is at most this.
  std::uint64_t exact_atom_limit = 4096;
  bool force_monte_carlo = false;
};

namespace detail {
inline bool use_exact(const MarkovModel& p, std::size_t n, const HypotestOptions& o) {
  if (o.force_monte_carlo) return false;
  try {
    return atom_count(p.alphabet_size(), n) <= o.exact_atom_limit;
  } catch (const Error&) {
    return false;
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Neyman-Pearson calibration

struct NpThreshold {
  double threshold = 0.0;   ///< nats per token
  double epsilon = 0.0;
  double false_alarm = 0.0; ///< achieved P(S_n < threshold) on the calibration set (or exactly)
  std::size_t n = 0;
  std::size_t trials = 0;
  bool exact = false;
  bool degenerate = false;  ///< all calibration statistics equal
};

/// Largest threshold t with P(S_n < t) <= epsilon, estimated from `trials`
/// P-samples (the empirical epsilon-quantile) or exactly for small |A|^n.
inline NpThreshold np_threshold(const MarkovModel& p, const MarkovModel& q, std::size_t n, double epsilon,
                                std::size_t trials, std::uint64_t seed, const HypotestOptions& options = {}) {
  require(epsilon > 0.0 && epsilon < 1.0, "np_threshold: epsilon must lie in (0, 1)");
  require(n >= 1, "np_threshold: n must be >= 1");
  require(p.alphabet_size() == q.alphabet_size(), "np_threshold: models over different alphabets");
  NpThreshold out;
  out.epsilon = epsilon;
  out.n = n;
  if (detail::use_exact(p, n, options)) {
    const auto law = detail::exact_law(p, q, n);
    out.exact = true;
    double below = 0.0;
    out.threshold = law.stat.front();
    for (std::size_t g = 0; g < law.stat.size(); ++g) {
      if (below <= epsilon + 1e-15) {
        out.threshold = law.stat[g];
        out.false_alarm = below;
      } else {
        break;
      }
      below += law.p_mass[g];
    }
    double with_p = 0.0;
    for (double m : law.p_mass) with_p += m > 0.0 ? 1.0 : 0.0;
    out.degenerate = with_p <= 1.0;
    return out;
  }
  require(trials >= 1000, "np_threshold: Monte Carlo calibration needs >= 1000 trials");
  auto stats = detail::simulate_statistics(p, p, q, n, trials, seed, options.workers);
  std::sort(stats.begin(), stats.end());
  const auto j = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(trials) + 1e-9));
  out.threshold = stats[std::min(j, trials - 1)];
  const auto below = std::count_if(stats.begin(), stats.end(),
                                   [&](double s) { return !detail::at_or_above(s, out.threshold); });
  out.false_alarm = static_cast<double>(below) / static_cast<double>(trials);
  out.trials = trials;
  out.degenerate = stats.front() == stats.back();
  return out;
}

// ---------------------------------------------------------------------------
// Miss probability

enum class MissEstimator {
  direct,      ///< fraction of Q-samples with S_n >= threshold
  importance,  ///< P-samples weighted by Q_n/P_n = exp(-n S_n)
};

inline std::string_view to_string(MissEstimator e) {
  return e == MissEstimator::direct ? "direct" : "importance";
}

struct TestOutcome {
  std::size_t n = 0;
  double epsilon = 0.0;
  double threshold = 0.0;
  double beta_hat = 0.0;
  double log_beta_hat = kNegInf;  ///< stays finite when beta_hat underflows
  double ci_low = 0.0;            ///< 95% interval
  double ci_high = 1.0;
  double log_ci_low = kNegInf;
  double log_ci_high = 0.0;
  std::size_t trials = 0;
  std::size_t misses = 0;  ///< direct estimator only
  bool one_sided = false;  ///< zero misses: ci is the one-sided 95% upper bound
  bool exact = false;
  MissEstimator estimator = MissEstimator::direct;
};

/// Clopper-Pearson 95% interval for x successes in n trials. With x = 0 the
/// interval is one-sided: [0, 1 - 0.05^(1/n)].
inline std::pair<double, double> clopper_pearson(std::size_t x, std::size_t n) {
  using boost::math::ibeta_inv;
  const double xd = static_cast<double>(x), nd = static_cast<double>(n);
  if (x == 0) return {0.0, 1.0 - std::pow(0.05, 1.0 / nd)};
  const double lo = ibeta_inv(xd, nd - xd + 1.0, 0.025);
  const double hi = x == n ? 1.0 : ibeta_inv(xd + 1.0, nd - xd, 0.975);
  return {lo, hi};
}

inline TestOutcome miss_probability(const MarkovModel& p, const MarkovModel& q, const NpThreshold& threshold,
                                    std::size_t trials, std::uint64_t seed,
                                    MissEstimator estimator = MissEstimator::direct,
                                    const HypotestOptions& options = {}) {
  const std::size_t n = threshold.n;
  TestOutcome out;
  out.n = n;
  out.epsilon = threshold.epsilon;
  out.threshold = threshold.threshold;
  out.estimator = estimator;
  if (detail::use_exact(p, n, options)) {
    const auto law = detail::exact_law(p, q, n);
    double beta = 0.0;
    for (std::size_t g = 0; g < law.stat.size(); ++g) {
      if (detail::at_or_above(law.stat[g], threshold.threshold)) beta += law.q_mass[g];
    }
    out.exact = true;
    out.beta_hat = out.ci_low = out.ci_high = beta;
    out.log_beta_hat = out.log_ci_low = out.log_ci_high = std::log(beta);
    return out;
  }
  require(trials >= 1, "miss_probability: trials must be >= 1");
  out.trials = trials;
  if (estimator == MissEstimator::direct) {
    const auto stats = detail::simulate_statistics(q, p, q, n, trials, seed, options.workers);
    for (double s : stats) out.misses += detail::at_or_above(s, threshold.threshold) ? 1 : 0;
    out.beta_hat = static_cast<double>(out.misses) / static_cast<double>(trials);
    out.log_beta_hat = std::log(out.beta_hat);
    std::tie(out.ci_low, out.ci_high) = clopper_pearson(out.misses, trials);
    out.one_sided = out.misses == 0;
    out.log_ci_low = std::log(out.ci_low);
    out.log_ci_high = std::log(out.ci_high);
    return out;
  }
  // importance sampling under P: E_Q[1{S >= t}] = E_P[1{S >= t} exp(-n S)]
  const auto stats = detail::simulate_statistics(p, p, q, n, trials, seed, options.workers);
  const double nd = static_cast<double>(n);
  double peak = kNegInf;
  for (double s : stats) {
    if (detail::at_or_above(s, threshold.threshold) && std::isfinite(s)) peak = std::max(peak, -nd * s);
  }
  if (peak == kNegInf) {
    out.beta_hat = 0.0;
    return out;
  }
  double s1 = 0.0, s2 = 0.0;
  for (double s : stats) {
    if (detail::at_or_above(s, threshold.threshold) && std::isfinite(s)) {
      const double w = std::exp(-nd * s - peak);
      s1 += w;
      s2 += w * w;
      ++out.misses;
    }
  }
  const double t = static_cast<double>(trials);
  const double mean = s1 / t;  // scaled by exp(-peak)
  const double var = std::max(s2 / t - mean * mean, 0.0);
  const double se = std::sqrt(var / std::max(t - 1.0, 1.0));
  out.log_beta_hat = peak + std::log(mean);
  out.beta_hat = std::exp(out.log_beta_hat);
  out.log_ci_high = peak + std::log(mean + 1.96 * se);
  out.log_ci_low = mean > 1.96 * se ? peak + std::log(mean - 1.96 * se) : kNegInf;
  out.ci_low = std::exp(out.log_ci_low);
  out.ci_high = std::exp(out.log_ci_high);
  return out;
}

// ---------------------------------------------------------------------------
// Exponent fit

struct ExponentFit {
  std::vector<std::size_t> n_grid;     ///< grid points used in the fit
  std::vector<double> neg_log_beta;    ///< -ln beta_hat per used point
  std::vector<std::size_t> excluded;   ///< grid points with no observed misses
  std::vector<TestOutcome> outcomes;   ///< every grid point, in grid order
  double slope = 0.0;                  ///< nats per token
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double theory = 0.0;                 ///< kl_rate(P, Q)
  double epsilon = 0.0;
};

struct LineFit {
  double slope = 0.0, intercept = 0.0, slope_stderr = 0.0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ssr += r * r;
    }
    f.slope_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
  }
  return f;
}

/// Least-squares slope of -ln beta_hat against n over the grid. Grid point j
/// calibrates with seed derive_seed(seed, 2j) and measures beta with
/// derive_seed(seed, 2j+1).
inline ExponentFit exponent_fit(const MarkovModel& p, const MarkovModel& q, double epsilon,
                                std::span<const std::size_t> n_grid, std::size_t trials, std::uint64_t seed,
                                MissEstimator estimator = MissEstimator::importance,
                                const HypotestOptions& options = {}) {
  require(n_grid.size() >= 3, "exponent_fit: need at least 3 grid points");
  require(std::is_sorted(n_grid.begin(), n_grid.end()) &&
              std::adjacent_find(n_grid.begin(), n_grid.end()) == n_grid.end(),
          "exponent_fit: grid must be strictly ascending");
  ExponentFit fit;
  fit.epsilon = epsilon;
  fit.theory = kl_rate(p, q);
  std::vector<double> xs;
  for (std::size_t j = 0; j < n_grid.size(); ++j) {
    const auto thr = np_threshold(p, q, n_grid[j], epsilon, trials, derive_seed(seed, 2 * j), options);
    auto outcome = miss_probability(p, q, thr, trials, derive_seed(seed, 2 * j + 1), estimator, options);
    if (std::isfinite(outcome.log_beta_hat)) {
      fit.n_grid.push_back(n_grid[j]);
      xs.push_back(static_cast<double>(n_grid[j]));
      fit.neg_log_beta.push_back(-outcome.log_beta_hat);
    } else {
      fit.excluded.push_back(n_grid[j]);
    }
    fit.outcomes.push_back(std::move(outcome));
  }
  if (xs.size() < 2) {
    fail(ErrorKind::support, "exponent_fit: fewer than two grid points with observed misses");
  }
  const auto line = least_squares(xs, fit.neg_log_beta);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.slope_stderr = line.slope_stderr;
  return fit;
}

// ---------------------------------------------------------------------------
// Bayesian error

struct BayesErrorEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  double chernoff_bound = std::numeric_limits<double>::quiet_NaN();  ///< exp(-n C), i.i.d. models only
  bool bound_holds = true;  ///< estimate <= bound + 3 stderr (true when no bound applies)
  bool exact = false;
};

/// Bayes error of the MAP rule (decide P iff prior P_n >= (1 - prior) Q_n).
inline BayesErrorEstimate bayes_error(const MarkovModel& p, const MarkovModel& q, std::size_t n, double prior,
                                      std::size_t trials, std::uint64_t seed, const HypotestOptions& options = {}) {
  require(prior > 0.0 && prior < 1.0, "bayes_error: prior must lie in (0, 1)");
  require(n >= 1, "bayes_error: n must be >= 1");
  const double cut = std::log((1.0 - prior) / prior) / static_cast<double>(n);
  BayesErrorEstimate out;
  if (detail::use_exact(p, n, options)) {
    const auto law = detail::exact_law(p, q, n);
    double e = 0.0;
    for (std::size_t g = 0; g < law.stat.size(); ++g) {
      e += detail::at_or_above(law.stat[g], cut) ? (1.0 - prior) * law.q_mass[g] : prior * law.p_mass[g];
    }
    out.estimate = e;
    out.exact = true;
  } else {
    require(trials >= 1, "bayes_error: trials must be >= 1");
    const auto sp = detail::simulate_statistics(p, p, q, n, trials, derive_seed(seed, 0), options.workers);
    const auto sq = detail::simulate_statistics(q, p, q, n, trials, derive_seed(seed, 1), options.workers);
    const double t = static_cast<double>(trials);
    const double false_alarm = static_cast<double>(std::count_if(sp.begin(), sp.end(), [&](double s) { return !detail::at_or_above(s, cut); })) / t;
    const double miss = static_cast<double>(std::count_if(sq.begin(), sq.end(), [&](double s) { return detail::at_or_above(s, cut); })) / t;
    out.estimate = prior * false_alarm + (1.0 - prior) * miss;
    out.standard_error = std::sqrt(prior * prior * false_alarm * (1 - false_alarm) / t +
                            (1 - prior) * (1 - prior) * miss * (1 - miss) / t);
  }
  if (p.order() == 0 && q.order() == 0) {
    const Categorical pl(p.row(0).dense(p.alphabet_size()), 1e-9);
    const Categorical ql(q.row(0).dense(q.alphabet_size()), 1e-9);
    out.chernoff_bound = std::exp(-static_cast<double>(n) * chernoff(pl, ql).value);
    out.bound_holds = out.estimate <= out.chernoff_bound + 3.0 * out.standard_error + 1e-15;
  }
  return out;
}

}  // namespace lmdetect
