#pragma once

// Information quantities in nats: entropy, cross-entropy, perplexity, KL
// divergence (single-letter and rate between Markov sources), Chernoff
// information.

#include <algorithm>
#include <cmath>
#include <vector>

#include "lmdetect/categorical.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/markov.hpp"

namespace lmdetect {

inline void require_same_space(const Categorical& p, const Categorical& q, const char* op) {
  require(p.size() == q.size(), std::string(op) + ": distributions over different atom sets");
}

/// -sum p ln p, with 0 ln 0 = 0.
inline double entropy(const Categorical& p) {
  double h = 0.0;
  for (double x : p.probs()) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

/// -sum p ln q. +inf when q misses part of p's support.
inline double cross_entropy(const Categorical& p, const Categorical& q) {
  require_same_space(p, q, "cross_entropy");
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    h -= p[i] * std::log(q[i]);
  }
  return h;
}

/// D(p || q) = sum p ln(p/q). +inf when q misses part of p's support.
inline double kl(const Categorical& p, const Categorical& q) {
  require_same_space(p, q, "kl");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    d += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(d, 0.0);
}

/// True iff q > 0 wherever p > 0.
inline bool covers_support(const Categorical& p, const Categorical& q) {
  require_same_space(p, q, "covers_support");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] == 0.0) return false;
  }
  return true;
}

inline double perplexity(const Categorical& p, const Categorical& q) { return std::exp(cross_entropy(p, q)); }

/// PPL(p, q1) / PPL(p, q2) = exp(H(p, q1) - H(p, q2)).
inline double perplexity_ratio(const Categorical& p, const Categorical& q1, const Categorical& q2) {
  const double h1 = cross_entropy(p, q1);
  const double h2 = cross_entropy(p, q2);
  if (std::isinf(h1) && std::isinf(h2)) return std::nan("");
  return std::exp(h1 - h2);
}

/// Neyman-Pearson error exponent recovered from the two metrics a language
/// model is usually reported with: H(P,Q) - H(P).
inline double exponent_from_metrics(double h_cross, double h_p) {
  const double d = h_cross - h_p;
  if (d < -1e-12) {
    fail(ErrorKind::invalid_argument, "exponent_from_metrics: cross-entropy below entropy by " + std::to_string(-d));
  }
  return std::max(d, 0.0);
}

// ---------------------------------------------------------------------------
// Chernoff information

struct ChernoffResult {
  double value = 0.0;   ///< nats; +inf for disjoint supports
  double lambda = 0.5;  ///< minimizer in [0, 1]
  bool restricted_support = false;  ///< supports differ; computed on the common support
};

/// C(p, q) = -min_{lambda in [0,1]} ln sum_a p(a)^lambda q(a)^(1-lambda),
/// minimized by golden-section search (the objective is convex in lambda).
inline ChernoffResult chernoff(const Categorical& p, const Categorical& q, double lambda_tolerance = 1e-10) {
  require_same_space(p, q, "chernoff");
  ChernoffResult out;
  std::vector<double> lp, lq;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] > 0.0) {
      lp.push_back(std::log(p[i]));
      lq.push_back(std::log(q[i]));
    } else if (p[i] > 0.0 || q[i] > 0.0) {
      out.restricted_support = true;
    }
  }
  if (lp.empty()) {
    out.value = kInf;
    return out;
  }
  auto objective = [&](double lambda) {
    // log-sum-exp of lambda ln p + (1 - lambda) ln q
    double peak = kNegInf;
    for (std::size_t i = 0; i < lp.size(); ++i) peak = std::max(peak, lambda * lp[i] + (1 - lambda) * lq[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) s += std::exp(lambda * lp[i] + (1 - lambda) * lq[i] - peak);
    return peak + std::log(s);
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > lambda_tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  out.lambda = 0.5 * (a + b);
  double best = objective(out.lambda);
  // the minimum may sit on an endpoint
  for (double edge : {0.0, 1.0}) {
    const double f = objective(edge);
    if (f < best) {
      best = f;
      out.lambda = edge;
    }
  }
  out.value = std::max(-best, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Divergence rate between Markov sources

/// lim (1/n) ln(P_n / Q_n) under P:
///   sum_s pi_P(s) sum_a P(a|s) ln(P(a|s) / Q(a|s)),
/// after lifting both models to the larger order. +inf when Q assigns zero
/// probability (or has no row) where P has mass.
inline double kl_rate(const MarkovModel& p, const MarkovModel& q) {
  require(p.alphabet_size() == q.alphabet_size(), "kl_rate: models over different alphabets");
  const std::size_t k = std::max(p.order(), q.order());
  const MarkovModel pl = lift(p, k);
  const MarkovModel ql = lift(q, k);
  const auto pi = stationary(pl);
  const std::size_t n = pl.alphabet_size();
  double rate = 0.0;
  for (std::size_t i = 0; i < pi.codes.size(); ++i) {
    if (pi.probs[i] == 0.0) continue;
    const auto& prow = pl.row(pi.codes[i]);
    const auto* qrow = ql.find_row(pi.codes[i]);
    double inner = 0.0;
    for (Symbol a = 0; a < n; ++a) {
      const double pa = prow.prob(a);
      if (pa == 0.0) continue;
      const double qa = qrow ? qrow->prob(a) : 0.0;
      if (qa == 0.0) return kInf;
      inner += pa * std::log(pa / qa);
    }
    rate += pi.probs[i] * inner;
  }
  return std::max(rate, 0.0);
}

/// Entropy rate of the stationary chain, nats per token.
inline double entropy_rate(const MarkovModel& model) {
  const auto pi = stationary(model);
  double h = 0.0;
  for (std::size_t i = 0; i < pi.codes.size(); ++i) {
    const auto& row = model.row(pi.codes[i]);
    h += pi.probs[i] * entropy(Categorical(row.dense(model.alphabet_size()), 1e-9));
  }
  return h;
}

}  // namespace lmdetect
