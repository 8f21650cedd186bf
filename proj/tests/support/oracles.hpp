#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// min c.x subject to A x = b, x >= 0 (b >= 0), by the two-phase dense
/// tableau simplex with Bland's rule, in long double.
inline long double lp_minimize(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                               const std::vector<double>& c) {
  const std::size_t rows = a.size(), vars = c.size();
  const std::size_t cols = vars + rows;  // structural + artificial
  using Row = std::vector<long double>;
  std::vector<Row> t(rows, Row(cols + 1, 0.0L));
  std::vector<std::size_t> basis(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < vars; ++j) t[i][j] = a[i][j];
    t[i][vars + i] = 1.0L;
    t[i][cols] = b[i];
    basis[i] = vars + i;
  }
  const long double eps = 1e-13L;

  auto run = [&](const Row& cost, std::size_t allowed) {
    for (std::size_t iter = 0; iter < 200000; ++iter) {
      // reduced costs
      std::size_t enter = cols;
      for (std::size_t j = 0; j < allowed; ++j) {
        long double d = cost[j];
        for (std::size_t i = 0; i < rows; ++i) d -= cost[basis[i]] * t[i][j];
        if (d < -eps) {
          enter = j;
          break;
        }
      }
      if (enter == cols) return;
      std::size_t leave = rows;
      long double best = std::numeric_limits<long double>::infinity();
      for (std::size_t i = 0; i < rows; ++i) {
        if (t[i][enter] > eps) {
          const long double r = t[i][cols] / t[i][enter];
          if (r < best - eps || (std::abs(r - best) <= eps && leave < rows && basis[i] < basis[leave])) {
            best = r;
            leave = i;
          }
        }
      }
      if (leave == rows) throw std::runtime_error("lp oracle: unbounded");
      const long double piv = t[leave][enter];
      for (auto& x : t[leave]) x /= piv;
      for (std::size_t i = 0; i < rows; ++i) {
        if (i == leave || t[i][enter] == 0.0L) continue;
        const long double f = t[i][enter];
        for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= f * t[leave][j];
      }
      basis[leave] = enter;
    }
    throw std::runtime_error("lp oracle: iteration cap");
  };

  Row phase1(cols, 0.0L);
  for (std::size_t j = vars; j < cols; ++j) phase1[j] = 1.0L;
  run(phase1, cols);
  // drive remaining (zero-valued) artificials out where possible
  for (std::size_t i = 0; i < rows; ++i) {
    if (basis[i] < vars) continue;
    if (std::abs(t[i][cols]) > 1e-9L) throw std::runtime_error("lp oracle: infeasible");
    for (std::size_t j = 0; j < vars; ++j) {
      if (std::abs(t[i][j]) > 1e-9L) {
        const long double piv = t[i][j];
        for (auto& x : t[i]) x /= piv;
        for (std::size_t r = 0; r < rows; ++r) {
          if (r == i || t[r][j] == 0.0L) continue;
          const long double f = t[r][j];
          for (std::size_t k = 0; k <= cols; ++k) t[r][k] -= f * t[i][k];
        }
        basis[i] = j;
        break;
      }
    }
  }
  Row phase2(cols, 0.0L);
  for (std::size_t j = 0; j < vars; ++j) phase2[j] = c[j];
  // artificials stuck in the basis are redundant rows; keep them out of pricing
  run(phase2, vars);
  long double value = 0.0L;
  for (std::size_t i = 0; i < rows; ++i) value += phase2[basis[i]] * t[i][cols];
  return value;
}

/// Optimal transport value by the generic LP oracle.
inline double transport_lp(const std::vector<double>& mu, const std::vector<double>& nu,
                           const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t r = mu.size(), s = nu.size();
  std::vector<std::vector<double>> a(r + s, std::vector<double>(r * s, 0.0));
  std::vector<double> b(r + s), c(r * s);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      a[i][i * s + j] = 1.0;
      a[r + j][i * s + j] = 1.0;
      c[i * s + j] = cost(i, j);
    }
    b[i] = mu[i];
  }
  for (std::size_t j = 0; j < s; ++j) b[r + j] = nu[j];
  return static_cast<double>(lp_minimize(a, b, c));
}

/// Stationary law of a row-stochastic matrix: solve pi (T - I) = 0 with
/// sum pi = 1 as a least-squares system.
inline std::vector<double> stationary_linear(const std::vector<std::vector<double>>& t) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd m(n + 1, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(j, i) = t[i][j] - (i == j ? 1.0 : 0.0);
  m.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  const Eigen::VectorXd pi = m.colPivHouseholderQr().solve(rhs);
  return std::vector<double>(pi.data(), pi.data() + n);
}

/// P(x_1..x_n) of an HMM by summing over every hidden state path.
inline double hmm_path_probability(const std::vector<std::vector<double>>& trans,
                                   const std::vector<std::vector<double>>& emit, const std::vector<double>& init,
                                   const std::vector<unsigned>& seq) {
  const std::size_t s = trans.size();
  if (seq.empty()) return 1.0;
  std::size_t paths = 1;
  for (std::size_t i = 0; i < seq.size(); ++i) paths *= s;
  double total = 0.0;
  for (std::size_t code = 0; code < paths; ++code) {
    std::size_t rest = code;
    std::vector<std::size_t> states(seq.size());
    for (std::size_t i = seq.size(); i-- > 0;) {
      states[i] = rest % s;
      rest /= s;
    }
    double p = init[states[0]] * emit[states[0]][seq[0]];
    for (std::size_t i = 1; i < seq.size(); ++i) p *= trans[states[i - 1]][states[i]] * emit[states[i]][seq[i]];
    total += p;
  }
  return total;
}

/// -min over a uniform lambda grid of ln sum p^l q^(1-l).
inline double chernoff_grid(const std::vector<double>& p, const std::vector<double>& q, double step) {
  double best = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / step));
  for (std::size_t s = 0; s <= steps; ++s) {
    const double l = static_cast<double>(s) * step;
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0 && q[i] > 0.0) z += std::pow(p[i], l) * std::pow(q[i], 1.0 - l);
    }
    best = std::min(best, std::log(z));
  }
  return -best;
}

/// Exact ln beta of the non-randomized Neyman-Pearson test for i.i.d.
/// binary P = (p0, 1-p0) against Q = (q0, 1-q0) with p0 < q0, by binomial
/// summation. The statistic falls as the count K of symbol 0 rises, so the
/// test decides P iff K <= c, with c the smallest cut whose P-tail mass
/// P(K > c) is at most eps.
inline double binary_np_log_beta(std::size_t n, double eps, double p0, double q0) {
  const double nd = static_cast<double>(n);
  auto log_pmf = [&](std::size_t k, double p) {
    const double kd = static_cast<double>(k);
    return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + kd * std::log(p) +
           (nd - kd) * std::log1p(-p);
  };
  std::vector<double> tail(n + 2, 0.0);  // tail[c] = P(K > c - 1) under P
  for (std::size_t k = n + 1; k-- > 0;) tail[k] = tail[k + 1] + std::exp(log_pmf(k, p0));
  std::size_t c = 0;
  while (tail[c + 1] > eps) ++c;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= c; ++k) peak = std::max(peak, log_pmf(k, q0));
  double s = 0.0;
  for (std::size_t k = 0; k <= c; ++k) s += std::exp(log_pmf(k, q0) - peak);
  return peak + std::log(s);
}

/// Hamming distance between base-a codes of two length-m strings, per letter.
inline double hamming_codes(std::size_t i, std::size_t j, std::size_t a, std::size_t m) {
  std::size_t diff = 0;
  for (std::size_t t = 0; t < m; ++t, i /= a, j /= a) diff += (i % a) != (j % a);
  return static_cast<double>(diff) / static_cast<double>(m);
}

/// d-bar between dense laws over A^m by the generic LP.
inline double dbar_lp(const std::vector<double>& mu, const std::vector<double>& nu, std::size_t a, std::size_t m) {
  return transport_lp(mu, nu, [&](std::size_t i, std::size_t j) { return hamming_codes(i, j, a, m); });
}

/// Law of m i.i.d. draws from p, first draw most significant.
inline std::vector<double> product_power(const std::vector<double>& p, std::size_t m) {
  std::vector<double> out{1.0};
  for (std::size_t t = 0; t < m; ++t) {
    std::vector<double> next;
    next.reserve(out.size() * p.size());
    for (double w : out) {
      for (double x : p) next.push_back(w * x);
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace oracle
