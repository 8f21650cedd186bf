#pragma once

// Numerical instruments for the approximation bounds of empirical Markov
// models:
//   - the Csiszar-Talata bound on d-bar(source, fitted k-order model),
//     evaluated (ct_bound) and compared against experiments (ct_experiment);
//   - Marton's transportation inequality d <= (u+1) sqrt(D / 2m);
//   - reverse Pinsker D <= |P-Q|^2 / Q_min;
//   - probes of the conjectured bounds D <= K d-bar^2, which report
//     evidence and never pass or fail.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lmdetect/categorical.hpp"
#include "lmdetect/continuity.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/hash.hpp"
#include "lmdetect/hmm.hpp"
#include "lmdetect/infometrics.hpp"
#include "lmdetect/markov.hpp"
#include "lmdetect/parallel.hpp"
#include "lmdetect/random.hpp"
#include "lmdetect/transport.hpp"

namespace lmdetect {

// ---------------------------------------------------------------------------
// Csiszar-Talata bound

struct CTBoundInputs {
  double m = 0.0;         ///< training length
  double nu = 0.0;        ///< order growth: k = round(nu ln m)
  double mu_param = 0.0;  ///< in (0, 1/2)
  ContinuityProfile profile;
};

struct CTBound {
  double value = 0.0;
  std::size_t k = 0;
  double beta = 0.0;
  double gamma_k = 0.0;
  double approximation_term = 0.0;  ///< beta(k) gamma(k) / p^2
  double sampling_term = 0.0;       ///< m^{-(1/2 - mu)}
};

/// Order used by the bound for training length m: round(nu ln m).
inline std::size_t ct_order(double m, double nu) { return static_cast<std::size_t>(std::llround(nu * std::log(m))); }

/// True iff nu < mu / |ln p|.
inline bool ct_admissible(double nu, double mu_param, double p) { return nu < mu_param / std::abs(std::log(p)); }

/// beta(k) gamma(k) / p^2 + m^{-(1/2 - mu)} with k = round(nu ln m).
inline CTBound ct_bound(const CTBoundInputs& in) {
  require(in.m >= 2.0, "ct_bound: m must be >= 2");
  require(in.nu > 0.0, "ct_bound: nu must be positive");
  require(in.mu_param > 0.0 && in.mu_param < 0.5, "ct_bound: mu must lie in (0, 1/2)");
  in.profile.validate();
  const double p = in.profile.p_floor;
  if (!ct_admissible(in.nu, in.mu_param, p)) {
    fail(ErrorKind::inapplicable, "ct_bound: inadmissible parameters, need nu < mu/|ln p| = " +
                                      std::to_string(in.mu_param / std::abs(std::log(p))));
  }
  CTBound out;
  out.k = ct_order(in.m, in.nu);
  require(out.k >= 1, "ct_bound: k = round(nu ln m) is 0; increase nu or m");
  if (out.k > in.profile.horizon()) {
    fail(ErrorKind::inapplicable, "ct_bound: k = " + std::to_string(out.k) + " beyond the profile horizon " +
                                      std::to_string(in.profile.horizon()));
  }
  out.gamma_k = in.profile.gamma_at(out.k);
  out.beta = beta_coeff(in.profile, out.k);
  out.approximation_term = out.beta / (p * p) * out.gamma_k;
  out.sampling_term = std::pow(in.m, -(0.5 - in.mu_param));
  out.value = out.approximation_term + out.sampling_term;
  return out;
}

// ---------------------------------------------------------------------------
// Source adapters

namespace detail {

inline TokenSeq draw_window(const HiddenMarkovSource& src, std::size_t n, std::uint64_t seed) {
  return hmm_sample(src, n, seed);
}
inline TokenSeq draw_window(const MarkovModel& model, std::size_t n, std::uint64_t seed) {
  return sample(model, n, seed);
}
inline double source_log_probability(const HiddenMarkovSource& src, std::span<const Symbol> seq) {
  return hmm_log_probability(src, seq);
}
inline double source_log_probability(const MarkovModel& model, std::span<const Symbol> seq) {
  return log_likelihood_or_zero(model, seq);
}

// ln Q(seq) for the stationary chain of `model` (law `pi` over contexts).
inline double stationary_log_probability(const MarkovModel& model, const ContextLaw& pi,
                                         std::span<const Symbol> seq) {
  const std::size_t k = model.order();
  if (seq.size() < k) {
    // marginal of a short prefix: sum over completions
    const ContextCodec short_codec(model.alphabet_size(), seq.size());
    const std::uint64_t want = short_codec.encode(seq);
    const std::uint64_t tail = atom_count(model.alphabet_size(), k - seq.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < pi.codes.size(); ++i) {
      if (pi.codes[i] / tail == want) mass += pi.probs[i];
    }
    return mass > 0.0 ? std::log(mass) : kNegInf;
  }
  std::uint64_t ctx = k > 0 ? model.codec().encode(seq.first(k)) : 0;
  const double start = k > 0 ? pi(ctx) : 1.0;
  if (start == 0.0) return kNegInf;
  double total = std::log(start);
  for (std::size_t i = k; i < seq.size(); ++i) {
    const auto* row = model.find_row(ctx);
    if (row == nullptr) return kNegInf;
    total += row->log_prob(seq[i]);
    if (total == kNegInf) return kNegInf;
    ctx = model.codec().shift(ctx, seq[i]);
  }
  return total;
}

// 95% percentile bootstrap interval for the mean of `xs`.
inline std::pair<double, double> bootstrap_mean_ci(std::span<const double> xs, std::size_t resamples,
                                                   std::uint64_t seed) {
  std::vector<double> means(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    Rng rng(derive_seed(seed, b));
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += xs[rng.below(xs.size())];
    means[b] = s / static_cast<double>(xs.size());
  }
  return {percentile(means, 0.025), percentile(means, 0.975)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment: d-bar between a source and models fitted to it

struct CTExperimentOptions {
  std::size_t window = 8;         ///< d-bar is computed on length-w windows
  std::size_t profile_horizon = 10;  ///< context length for the gamma / p sups
  std::size_t bootstrap = 1000;
  std::size_t workers = 1;
};

struct CTExperimentRow {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t trials = 0;
  double dbar_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();  ///< NaN when inadmissible
  bool admissible = false;
  std::size_t violations = 0;  ///< trials with d-bar above the bound
  double violation_rate = 0.0;
  std::vector<double> per_trial;
};

struct CTExperiment {
  ContinuityProfile profile;
  std::size_t window = 0;
  std::vector<CTExperimentRow> rows;

  /// Each estimate at most the upper CI end of the previous grid point.
  bool nonincreasing_within_ci() const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].dbar_mean > rows[i - 1].ci_high) return false;
    }
    return true;
  }
};

/// For each m: draw `trials` training samples of length m from the source,
/// fit the empirical model of order round(nu ln m) and compute the exact
/// d-bar between length-w windows of the source and of the fitted chain.
template <StationaryProcess S>
CTExperiment ct_experiment(const S& source, std::span<const std::size_t> m_grid, double nu, double mu_param,
                           std::size_t trials, std::uint64_t seed, const CTExperimentOptions& opt = {}) {
  require(!m_grid.empty(), "ct_experiment: empty m grid");
  require(trials >= 2, "ct_experiment: need at least 2 trials");
  require(nu > 0.0 && mu_param > 0.0 && mu_param < 0.5, "ct_experiment: need nu > 0 and mu in (0, 1/2)");
  const std::size_t n = process_alphabet_size(source);
  if (atom_count(n, opt.window) > kTransportAtomCap) {
    fail(ErrorKind::capacity, "ct_experiment: |A|^w exceeds the transport atom cap");
  }
  std::size_t k_max = 1;
  for (std::size_t m : m_grid) k_max = std::max(k_max, ct_order(static_cast<double>(m), nu));
  CTExperiment out;
  out.window = opt.window;
  out.profile = continuity_profile(source, k_max, std::max(k_max, opt.profile_horizon));
  const auto source_law = to_sparse(window_law(source, opt.window, kDefaultAtomCap), n, opt.window);
  const Alphabet alphabet = Alphabet::synthetic(n);

  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    CTExperimentRow row;
    row.m = m_grid[g];
    row.k = ct_order(static_cast<double>(row.m), nu);
    row.trials = trials;
    try {
      row.bound = ct_bound({static_cast<double>(row.m), nu, mu_param, out.profile}).value;
      row.admissible = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::inapplicable && e.kind() != ErrorKind::invalid_argument) throw;
    }
    row.per_trial.resize(trials);
    const std::uint64_t grid_seed = derive_seed(seed, g);
    parallel_for(trials, opt.workers, [&](std::size_t t) {
      const auto train = detail::draw_window(source, row.m, derive_seed(grid_seed, t));
      const auto model = fit_empirical(alphabet, train, row.k);
      const auto fitted = to_sparse(window_distribution(model, opt.window), n, opt.window);
      row.per_trial[t] = dbar_exact(source_law, fitted).value;
    });
    double sum = 0.0;
    for (double d : row.per_trial) {
      sum += d;
      if (row.admissible && d > row.bound) ++row.violations;
    }
    row.dbar_mean = sum / static_cast<double>(trials);
    row.violation_rate = static_cast<double>(row.violations) / static_cast<double>(trials);
    std::tie(row.ci_low, row.ci_high) =
        detail::bootstrap_mean_ci(row.per_trial, opt.bootstrap, derive_seed(grid_seed, trials));
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inequality checks

struct MartonCheck {
  double lhs = 0.0;         ///< d-bar
  double rhs = 0.0;         ///< (u+1) sqrt(D / 2m)
  double divergence = 0.0;  ///< D(mu || nu), nats
  bool holds = true;
  bool infinite_divergence = false;  ///< rhs infinite, holds trivially
};

inline MartonCheck marton_check(const Categorical& mu, const Categorical& nu, std::size_t alphabet_size,
                                std::size_t m, double u) {
  require(u >= 0.0, "marton_check: u must be >= 0");
  MartonCheck out;
  out.divergence = kl(mu, nu);
  out.lhs = dbar_exact(mu, nu, alphabet_size, m).value;
  if (std::isinf(out.divergence)) {
    out.infinite_divergence = true;
    out.rhs = kInf;
    return out;
  }
  out.rhs = (u + 1.0) * std::sqrt(out.divergence / (2.0 * static_cast<double>(m)));
  out.holds = out.lhs <= out.rhs + 1e-12;
  return out;
}

enum class NormConvention { tv, l1 };

inline std::string_view to_string(NormConvention c) { return c == NormConvention::tv ? "tv" : "l1"; }

struct ReversePinskerCheck {
  double lhs = 0.0;    ///< D(p || q), nats
  double rhs = 0.0;    ///< |p - q|^2 / q_min
  double ratio = 0.0;  ///< lhs / rhs (0 when both vanish)
  double q_min = 0.0;
  bool holds = true;
};

inline ReversePinskerCheck reverse_pinsker_check(const Categorical& p, const Categorical& q, NormConvention norm) {
  ReversePinskerCheck out;
  out.q_min = q.min();
  if (out.q_min <= 0.0) fail(ErrorKind::support, "reverse_pinsker_check: Q_min = 0");
  const double d = norm == NormConvention::tv ? tv(p, q) : l1_distance(p, q);
  out.lhs = kl(p, q);
  out.rhs = d * d / out.q_min;
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
  out.holds = out.lhs <= out.rhs + 1e-12;
  return out;
}

/// D >= 2 TV^2 in nats.
inline bool forward_pinsker_holds(const Categorical& p, const Categorical& q) {
  const double t = tv(p, q);
  return kl(p, q) >= 2.0 * t * t - 1e-12;
}

// ---------------------------------------------------------------------------
// Probe: D(X || Y) against d-bar(X, Y)^2

enum class ProbeSampler { dirichlet_uniform, boundary_biased };

inline std::string_view to_string(ProbeSampler s) {
  return s == ProbeSampler::dirichlet_uniform ? "dirichlet-uniform" : "boundary-biased";
}

inline ProbeSampler parse_sampler(std::string_view name) {
  if (name == "dirichlet-uniform" || name == "uniform") return ProbeSampler::dirichlet_uniform;
  if (name == "boundary-biased" || name == "boundary") return ProbeSampler::boundary_biased;
  fail(ErrorKind::invalid_argument, "unknown sampler '" + std::string(name) + "'");
}

inline double concentration(ProbeSampler s) { return s == ProbeSampler::dirichlet_uniform ? 1.0 : 0.1; }

struct ProbePoint {
  std::size_t instance = 0;
  double q_min = 0.0;
  double dbar = 0.0;
  double kl = 0.0;
  double tv = 0.0;
  double ratio = 0.0;  ///< kl / dbar^2; NaN for excluded instances
  bool excluded = false;
};

struct ProbeReport {
  std::size_t alphabet_size = 0;
  std::size_t m = 0;
  ProbeSampler sampler = ProbeSampler::dirichlet_uniform;
  std::uint64_t seed = 0;
  std::size_t instance_count = 0;
  std::size_t degenerate = 0;  ///< d-bar < 1e-9 or infinite divergence
  double sup_ratio = 0.0;
  std::size_t argmax = 0;
  std::vector<double> argmax_p, argmax_q;  ///< the maximizing pair
  std::size_t violations = 0;              ///< forward Pinsker failures
  std::vector<ProbePoint> scatter;
  std::string config_hash;

  /// Canonical text of the sampler settings (hashed into config_hash).
  std::string config_text() const {
    std::ostringstream os;
    os << "alphabet_size=" << alphabet_size << "\nm=" << m << "\nn_instances=" << instance_count
       << "\nsampler=" << to_string(sampler) << "\nseed=" << seed << '\n';
    return os.str();
  }
};

inline constexpr double kDegenerateDbar = 1e-9;

/// Draws pairs (X, Y) of laws over A^m from a symmetric Dirichlet and
/// records D(X || Y), d-bar(X, Y) and their ratio D / d-bar^2.
inline ProbeReport conjecture1_probe(std::size_t alphabet_size, std::size_t m, std::size_t n_instances,
                                     ProbeSampler sampler, std::uint64_t seed, std::size_t workers = 1) {
  require(alphabet_size >= 2, "conjecture1_probe: alphabet size must be >= 2");
  require(m >= 1, "conjecture1_probe: m must be >= 1");
  require(n_instances >= 100, "conjecture1_probe: need at least 100 instances");
  const std::uint64_t atoms = atom_count(alphabet_size, m);
  if (atoms > kTransportAtomCap) fail(ErrorKind::capacity, "conjecture1_probe: |A|^m exceeds the atom cap");

  ProbeReport report;
  report.alphabet_size = alphabet_size;
  report.m = m;
  report.sampler = sampler;
  report.seed = seed;
  report.instance_count = n_instances;
  report.scatter.resize(n_instances);
  std::vector<char> pinsker_ok(n_instances, 1);
  const double conc = concentration(sampler);

  parallel_for(n_instances, workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const Categorical p = Categorical::normalized(dirichlet(rng, atoms, conc));
    const Categorical q = Categorical::normalized(dirichlet(rng, atoms, conc));
    ProbePoint& pt = report.scatter[i];
    pt.instance = i;
    pt.q_min = q.min();
    pt.kl = kl(p, q);
    pt.tv = tv(p, q);
    pt.dbar = dbar_exact(p, q, alphabet_size, m).value;
    pinsker_ok[i] = forward_pinsker_holds(p, q);
    if (pt.dbar < kDegenerateDbar || std::isinf(pt.kl)) {
      pt.excluded = true;
      pt.ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      pt.ratio = pt.kl / (pt.dbar * pt.dbar);
    }
  });

  for (const auto& pt : report.scatter) {
    if (!pinsker_ok[pt.instance]) ++report.violations;
    if (pt.excluded) {
      ++report.degenerate;
      continue;
    }
    if (pt.ratio > report.sup_ratio) {
      report.sup_ratio = pt.ratio;
      report.argmax = pt.instance;
    }
  }
  {
    // regenerate the maximizing pair from its seed
    Rng rng(derive_seed(seed, report.argmax));
    const Categorical p = Categorical::normalized(dirichlet(rng, atoms, conc));
    const Categorical q = Categorical::normalized(dirichlet(rng, atoms, conc));
    report.argmax_p.assign(p.probs().begin(), p.probs().end());
    report.argmax_q.assign(q.probs().begin(), q.probs().end());
  }
  report.config_hash = git_blob_hash(report.config_text());
  return report;
}

// ---------------------------------------------------------------------------
// Divergence between a source and its fitted model

struct Conjecture2Options {
  std::size_t window = 12;
  std::size_t windows = 20000;  ///< Monte Carlo windows drawn from the source
  std::size_t profile_horizon = 10;
};

struct Conjecture2Result {
  std::size_t k = 0;
  double inner = 0.0;       ///< the Csiszar-Talata expression
  double rhs = 0.0;         ///< k_hat * inner^2
  double d_estimate = 0.0;  ///< mean of ln(P(window) / Q(window)), i.e. rate x w
  double d_rate = 0.0;      ///< d_estimate / w
  double standard_error = 0.0;
  std::size_t window = 0;
  std::size_t windows = 0;
  bool infinite = false;    ///< a sampled window has probability 0 under the fitted model
  bool consistent = false;  ///< d_estimate <= rhs
};

template <StationaryProcess S>
Conjecture2Result conjecture2_eval(const S& source, std::size_t m, double nu, double mu_param, double k_hat,
                                   std::uint64_t seed, const Conjecture2Options& opt = {}) {
  require(k_hat > 0.0, "conjecture2_eval: K must be positive");
  require(opt.window >= 1 && opt.windows >= 2, "conjecture2_eval: need window >= 1 and >= 2 windows");
  const std::size_t n = process_alphabet_size(source);
  const std::size_t k = ct_order(static_cast<double>(m), nu);
  const auto profile = continuity_profile(source, std::max<std::size_t>(k, 1), std::max(k, opt.profile_horizon));

  Conjecture2Result out;
  out.k = k;
  out.window = opt.window;
  out.windows = opt.windows;
  out.inner = ct_bound({static_cast<double>(m), nu, mu_param, profile}).value;
  out.rhs = k_hat * out.inner * out.inner;

  const auto train = detail::draw_window(source, m, derive_seed(seed, 0));
  const auto model = fit_empirical(Alphabet::synthetic(n), train, k);
  const auto pi = stationary(model);
  double sum = 0.0, sum_sq = 0.0;
  const std::uint64_t window_seed = derive_seed(seed, 1);
  for (std::size_t i = 0; i < opt.windows; ++i) {
    const auto w = detail::draw_window(source, opt.window, derive_seed(window_seed, i));
    const double lq = detail::stationary_log_probability(model, pi, w);
    if (lq == kNegInf) {
      out.infinite = true;
      break;
    }
    const double x = detail::source_log_probability(source, w) - lq;
    sum += x;
    sum_sq += x * x;
  }
  if (out.infinite) {
    out.d_estimate = out.d_rate = kInf;
    out.consistent = false;
    return out;
  }
  const double cnt = static_cast<double>(opt.windows);
  out.d_estimate = sum / cnt;
  out.d_rate = out.d_estimate / static_cast<double>(opt.window);
  out.standard_error = std::sqrt(std::max(0.0, sum_sq / cnt - out.d_estimate * out.d_estimate) / (cnt - 1.0));
  out.consistent = out.d_estimate <= out.rhs;
  return out;
}

}  // namespace lmdetect
