#pragma once

// Hidden Markov sources with finite state and symbol sets. They stand in for
// "genuine language": stationary, non-null when emissions are positive, and
// with a continuity rate that decays geometrically instead of vanishing.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lmdetect/categorical.hpp"
#include "lmdetect/corpus.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/markov.hpp"
#include "lmdetect/random.hpp"

namespace lmdetect {

using Matrix = std::vector<std::vector<double>>;

/// State s_t emits X_t ~ emission[s_t], then moves to s_{t+1} ~ transition[s_t].
struct HiddenMarkovSource {
  Matrix transition;  ///< state_count x state_count, row-stochastic
  Matrix emission;    ///< state_count x |A|, row-stochastic
  Categorical initial_state;

  std::size_t state_count() const noexcept { return transition.size(); }
  std::size_t alphabet_size() const noexcept { return emission.empty() ? 0 : emission.front().size(); }

  void validate() const {
    const std::size_t s = transition.size();
    require(s >= 1, "hmm: no states");
    require(emission.size() == s, "hmm: emission rows differ from state count");
    require(initial_state.size() == s, "hmm: initial law size differs from state count");
    const std::size_t a = emission.front().size();
    require(a >= 2, "hmm: need at least two symbols");
    auto check_row = [](const std::vector<double>& row, std::size_t width, const char* what) {
      require(row.size() == width, std::string("hmm: ragged ") + what + " matrix");
      for (double x : row) require(x >= 0.0 && x <= 1.0, std::string("hmm: ") + what + " entry outside [0,1]");
      require(std::abs(stable_sum(row) - 1.0) <= Categorical::kSumTolerance,
              std::string("hmm: ") + what + " row does not sum to 1");
    };
    for (const auto& r : transition) check_row(r, s, "transition");
    for (const auto& r : emission) check_row(r, a, "emission");
  }

  /// Source whose initial state law is the stationary law of `transition`.
  static HiddenMarkovSource stationary(Matrix transition, Matrix emission) {
    const std::size_t s = transition.size();
    require(s >= 1, "hmm: no states");
    std::vector<double> pi(s, 1.0 / static_cast<double>(s));
    std::vector<double> nxt(s);
    bool converged = false;
    for (std::size_t iter = 0; iter < 1'000'000 && !converged; ++iter) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) nxt[j] += pi[i] * transition[i][j];
      double residual = 0.0;
      for (std::size_t i = 0; i < s; ++i) residual += std::abs(nxt[i] - pi[i]);
      pi.swap(nxt);
      converged = residual < 1e-15;
    }
    if (!converged) fail(ErrorKind::convergence, "hmm: state chain did not converge");
    HiddenMarkovSource src{std::move(transition), std::move(emission), Categorical::normalized(pi)};
    src.validate();
    return src;
  }

  /// Two hidden states that flip with probability `flip`; state i emits
  /// symbol i with probability 1 - `noise`.
  static HiddenMarkovSource binary_flip(double flip, double noise) {
    return stationary({{1.0 - flip, flip}, {flip, 1.0 - flip}}, {{1.0 - noise, noise}, {noise, 1.0 - noise}});
  }

  /// Fully observed order-1 chain (identity emission).
  static HiddenMarkovSource observed_chain(Matrix transition) {
    const std::size_t s = transition.size();
    Matrix eye(s, std::vector<double>(s, 0.0));
    for (std::size_t i = 0; i < s; ++i) eye[i][i] = 1.0;
    return stationary(std::move(transition), std::move(eye));
  }
};

namespace detail {

// Belief over the current state after observing `x` (before it is emitted:
// belief is over s_t; after this call it is over s_{t+1}). Returns the
// one-step probability of x given the past.
inline double hmm_step(const HiddenMarkovSource& src, std::vector<double>& belief, Symbol x) {
  const std::size_t s = src.state_count();
  double px = 0.0;
  std::vector<double> post(s);
  for (std::size_t i = 0; i < s; ++i) {
    post[i] = belief[i] * src.emission[i][x];
    px += post[i];
  }
  if (px == 0.0) return 0.0;
  std::fill(belief.begin(), belief.end(), 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    if (post[i] == 0.0) continue;
    const double w = post[i] / px;
    for (std::size_t j = 0; j < s; ++j) belief[j] += w * src.transition[i][j];
  }
  return px;
}

inline std::vector<double> hmm_emit(const HiddenMarkovSource& src, std::span<const double> belief) {
  std::vector<double> out(src.alphabet_size(), 0.0);
  for (std::size_t i = 0; i < src.state_count(); ++i)
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += belief[i] * src.emission[i][a];
  return out;
}

}  // namespace detail

/// P(X_{t+1} = . | X_{t-m+1..t} = context) by forward filtering.
inline Categorical hmm_conditional(const HiddenMarkovSource& src, std::span<const Symbol> context) {
  std::vector<double> belief(src.initial_state.probs().begin(), src.initial_state.probs().end());
  for (Symbol x : context) {
    require(x < src.alphabet_size(), "hmm_conditional: symbol outside the alphabet");
    if (detail::hmm_step(src, belief, x) == 0.0) {
      fail(ErrorKind::support, "hmm_conditional: context has probability zero");
    }
  }
  return Categorical::normalized(detail::hmm_emit(src, belief));
}

/// Log-probability of `seq` as the first |seq| symbols of the process.
inline double hmm_log_probability(const HiddenMarkovSource& src, std::span<const Symbol> seq) {
  std::vector<double> belief(src.initial_state.probs().begin(), src.initial_state.probs().end());
  double total = 0.0;
  for (Symbol x : seq) {
    const double px = detail::hmm_step(src, belief, x);
    if (px == 0.0) return kNegInf;
    total += std::log(px);
  }
  return total;
}

/// Exact law of a length-m window; atom index = base-|A| code.
inline Categorical hmm_window_distribution(const HiddenMarkovSource& src, std::size_t m,
                                           std::uint64_t atom_cap = kDefaultAtomCap) {
  require(m >= 1, "hmm_window_distribution: m must be >= 1");
  const std::uint64_t atoms = atom_count(src.alphabet_size(), m);
  if (atoms > atom_cap) fail(ErrorKind::capacity, "hmm_window_distribution: |A|^m exceeds atom cap");
  std::vector<double> out(atoms, 0.0);
  const std::size_t n = src.alphabet_size();
  // depth-first over prefixes carrying the unnormalized forward vector
  struct Frame {
    std::uint64_t code;
    std::size_t depth;
    std::vector<double> alpha;  // joint mass of prefix and current state
  };
  std::vector<Frame> stack;
  stack.push_back({0, 0, std::vector<double>(src.initial_state.probs().begin(), src.initial_state.probs().end())});
  const std::size_t s = src.state_count();
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    for (Symbol a = 0; a < n; ++a) {
      std::vector<double> emitted(s);
      double mass = 0.0;
      for (std::size_t i = 0; i < s; ++i) {
        emitted[i] = f.alpha[i] * src.emission[i][a];
        mass += emitted[i];
      }
      if (mass == 0.0) continue;
      const std::uint64_t code = f.code * n + a;
      if (f.depth + 1 == m) {
        out[code] = mass;
        continue;
      }
      std::vector<double> next(s, 0.0);
      for (std::size_t i = 0; i < s; ++i) {
        if (emitted[i] == 0.0) continue;
        for (std::size_t j = 0; j < s; ++j) next[j] += emitted[i] * src.transition[i][j];
      }
      stack.push_back({code, f.depth + 1, std::move(next)});
    }
  }
  return Categorical(std::move(out), 1e-10);
}

inline TokenSeq hmm_sample(const HiddenMarkovSource& src, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&](std::span<const double> probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    std::size_t last = probs.size() - 1;
    while (last > 0 && probs[last] == 0.0) --last;
    return last;
  };
  TokenSeq out;
  out.reserve(n);
  std::size_t state = draw(src.initial_state.probs());
  for (std::size_t t = 0; t < n; ++t) {
    out.push_back(static_cast<Symbol>(draw(src.emission[state])));
    state = draw(src.transition[state]);
  }
  return out;
}

}  // namespace lmdetect
