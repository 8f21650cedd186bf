#pragma once

// Ornstein d-bar distance between laws of length-m strings: the minimum
// expected per-letter Hamming distance over couplings with the given
// marginals. Solved exactly as a transportation problem by the primal
// simplex on a spanning-tree basis (least-cost start, MODI potentials),
// with a dual feasibility certificate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "lmdetect/categorical.hpp"
#include "lmdetect/corpus.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/random.hpp"

namespace lmdetect {

inline constexpr std::size_t kTransportAtomCap = 4096;

/// (1/m) #{i : x_i != y_i}.
inline double hamming_cost(std::span<const Symbol> x, std::span<const Symbol> y) {
  require(x.size() == y.size(), "hamming_cost: strings of different length");
  require(!x.empty(), "hamming_cost: empty strings");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < x.size(); ++i) diff += x[i] != y[i];
  return static_cast<double>(diff) / static_cast<double>(x.size());
}

/// sum |p - q|.
inline double l1_distance(const Categorical& p, const Categorical& q) {
  require(p.size() == q.size(), "l1_distance: distributions over different atom sets");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

/// Total variation: (1/2) sum |p - q|.
inline double tv(const Categorical& p, const Categorical& q) { return 0.5 * l1_distance(p, q); }

// ---------------------------------------------------------------------------
// Transportation simplex

struct TransportCell {
  std::size_t row = 0;
  std::size_t col = 0;
  double mass = 0.0;
};

struct TransportSolution {
  double value = 0.0;
  std::vector<TransportCell> flow;  ///< basic cells (mass may be 0 for degenerate ones)
  std::vector<double> u, v;         ///< dual potentials
  double dual_value = 0.0;          ///< sum a u + sum b v
  double max_dual_violation = 0.0;  ///< max(0, -min reduced cost)
  std::size_t iterations = 0;
};

namespace detail {

class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                   std::function<double(std::size_t, std::size_t)> cost)
      : r_(supply.size()), c_(demand.size()), cost_(r_ * c_) {
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < c_; ++j) cost_[i * c_ + j] = cost(i, j);
    least_cost_start(supply, demand);
  }

  TransportSolution solve(std::span<const double> supply, std::span<const double> demand,
                          std::size_t max_iterations) {
    TransportSolution out;
    std::vector<double> u(r_), v(c_);
    for (;;) {
      potentials(u, v);
      // Dantzig pricing: most negative reduced cost enters
      double best = -1e-12;
      std::size_t bi = 0, bj = 0;
      bool found = false;
      for (std::size_t i = 0; i < r_; ++i) {
        for (std::size_t j = 0; j < c_; ++j) {
          const double d = cost_[i * c_ + j] - u[i] - v[j];
          if (d < best) {
            best = d;
            bi = i;
            bj = j;
            found = true;
          }
        }
      }
      if (!found) break;
      if (++out.iterations > max_iterations) {
        fail(ErrorKind::convergence, "dbar: transportation simplex exceeded its iteration cap");
      }
      pivot(bi, bj);
    }
    double dual = 0.0, worst = 0.0, value = 0.0;
    for (std::size_t i = 0; i < r_; ++i) dual += supply[i] * u[i];
    for (std::size_t j = 0; j < c_; ++j) dual += demand[j] * v[j];
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < c_; ++j) worst = std::max(worst, u[i] + v[j] - cost_[i * c_ + j]);
    for (const auto& b : basis_) value += b.mass * cost_[b.row * c_ + b.col];
    out.value = value;
    out.flow = basis_;
    out.u = std::move(u);
    out.v = std::move(v);
    out.dual_value = dual;
    out.max_dual_violation = worst;
    return out;
  }

 private:
  std::size_t r_, c_;
  std::vector<double> cost_;
  std::vector<TransportCell> basis_;  // always r + c - 1 cells forming a spanning tree

  // Least-cost start: repeatedly fill the cheapest open cell and close one
  // line (row or column), which yields r + c - 1 cells forming a tree.
  void least_cost_start(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> a(supply.begin(), supply.end()), b(demand.begin(), demand.end());
    std::vector<std::size_t> order(r_ * c_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return cost_[x] < cost_[y]; });
    std::vector<char> row_closed(r_, 0), col_closed(c_, 0);
    std::size_t rows_left = r_, cols_left = c_;
    for (std::size_t idx : order) {
      if (basis_.size() == r_ + c_ - 1) break;
      const std::size_t i = idx / c_, j = idx % c_;
      if (row_closed[i] || col_closed[j]) continue;
      const double x = std::min(a[i], b[j]);
      basis_.push_back({i, j, x});
      a[i] -= x;
      b[j] -= x;
      if ((a[i] <= b[j] && rows_left > 1) || cols_left == 1) {
        row_closed[i] = 1;
        --rows_left;
      } else {
        col_closed[j] = 1;
        --cols_left;
      }
    }
  }

  // Tree adjacency over nodes 0..r-1 (rows) and r..r+c-1 (columns); each
  // entry is (neighbor, basis index).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency() const {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(r_ + c_);
    for (std::size_t e = 0; e < basis_.size(); ++e) {
      adj[basis_[e].row].push_back({r_ + basis_[e].col, e});
      adj[r_ + basis_[e].col].push_back({basis_[e].row, e});
    }
    return adj;
  }

  // u_i + v_j = c_ij on basic cells, u_0 = 0.
  void potentials(std::vector<double>& u, std::vector<double>& v) const {
    const auto adj = adjacency();
    std::vector<char> seen(r_ + c_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    u[0] = 0.0;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (auto [next, e] : adj[node]) {
        if (seen[next]) continue;
        seen[next] = 1;
        const double c = cost_[basis_[e].row * c_ + basis_[e].col];
        if (next >= r_) {
          v[next - r_] = c - u[node];
        } else {
          u[next] = c - v[node - r_];
        }
        stack.push_back(next);
      }
    }
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // tree path from row node ei to column node r + ej
    const auto adj = adjacency();
    const std::size_t target = r_ + ej;
    std::vector<std::size_t> parent_edge(r_ + c_, SIZE_MAX), parent(r_ + c_, SIZE_MAX);
    std::vector<char> seen(r_ + c_, 0);
    std::vector<std::size_t> queue{ei};
    seen[ei] = 1;
    for (std::size_t h = 0; h < queue.size() && !seen[target]; ++h) {
      const std::size_t node = queue[h];
      for (auto [next, e] : adj[node]) {
        if (seen[next]) continue;
        seen[next] = 1;
        parent[next] = node;
        parent_edge[next] = e;
        queue.push_back(next);
      }
    }
    std::vector<std::size_t> path;  // basis indices from ei towards target
    for (std::size_t node = target; node != ei; node = parent[node]) path.push_back(parent_edge[node]);
    std::reverse(path.begin(), path.end());
    // signs alternate -, +, -, ... starting at the cell sharing row ei
    double theta = kHuge;
    std::size_t leave = SIZE_MAX;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      if (basis_[path[s]].mass < theta) {
        theta = basis_[path[s]].mass;
        leave = path[s];
      }
    }
    for (std::size_t s = 0; s < path.size(); ++s) {
      auto& cell = basis_[path[s]];
      cell.mass = s % 2 == 0 ? cell.mass - theta : cell.mass + theta;
    }
    basis_[leave] = {ei, ej, theta};
  }

  static constexpr double kHuge = 1e300;
};

}  // namespace detail

/// Solves min sum c_ij x_ij subject to row sums `supply`, column sums `demand`.
inline TransportSolution transport(std::span<const double> supply, std::span<const double> demand,
                                   const std::function<double(std::size_t, std::size_t)>& cost) {
  require(!supply.empty() && !demand.empty(), "transport: empty marginal");
  detail::TransportSimplex simplex(supply, demand, cost);
  const std::size_t size = supply.size() + demand.size();
  return simplex.solve(supply, demand, 50 * size * size + 1000);
}

// ---------------------------------------------------------------------------
// d-bar

struct CouplingEntry {
  std::size_t x = 0;  ///< index into row_atoms
  std::size_t y = 0;  ///< index into col_atoms
  double mass = 0.0;
};

/// A joint law with prescribed marginals, stored as sparse triplets over
/// string atoms.
struct Coupling {
  std::vector<TokenSeq> row_atoms, col_atoms;
  std::vector<double> row_marginal, col_marginal;
  std::vector<CouplingEntry> joint;

  /// Largest deviation of the joint's margins from the declared marginals.
  double marginal_error() const {
    std::vector<double> rs(row_atoms.size(), 0.0), cs(col_atoms.size(), 0.0);
    for (const auto& e : joint) {
      rs[e.x] += e.mass;
      cs[e.y] += e.mass;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) err = std::max(err, std::abs(rs[i] - row_marginal[i]));
    for (std::size_t j = 0; j < cs.size(); ++j) err = std::max(err, std::abs(cs[j] - col_marginal[j]));
    return err;
  }
};

struct DbarResult {
  double value = 0.0;
  Coupling coupling;
  double dual_value = 0.0;
  double max_dual_violation = 0.0;
  std::size_t iterations = 0;
};

/// Law over explicit string atoms (all of one length).
struct SparseLaw {
  std::vector<TokenSeq> atoms;
  std::vector<double> mass;
};

inline constexpr double kCertificateTolerance = 1e-9;

inline DbarResult dbar_exact(const SparseLaw& mu, const SparseLaw& nu, std::size_t cap = kTransportAtomCap) {
  require(!mu.atoms.empty() && !nu.atoms.empty(), "dbar: empty law");
  require(mu.atoms.size() == mu.mass.size() && nu.atoms.size() == nu.mass.size(), "dbar: atom/mass mismatch");
  const std::size_t m = mu.atoms.front().size();
  require(m >= 1, "dbar: strings must be nonempty");
  for (const auto* law : {&mu, &nu}) {
    for (const auto& a : law->atoms) require(a.size() == m, "dbar: atoms of different length");
    for (double x : law->mass) require(x >= 0.0, "dbar: negative mass");
    require(std::abs(stable_sum(law->mass) - 1.0) <= 1e-9, "dbar: marginal not normalized");
  }

  // drop zero atoms
  auto compact = [](const SparseLaw& law) {
    SparseLaw out;
    for (std::size_t i = 0; i < law.atoms.size(); ++i) {
      if (law.mass[i] > 0.0) {
        out.atoms.push_back(law.atoms[i]);
        out.mass.push_back(law.mass[i]);
      }
    }
    return out;
  };
  SparseLaw a = compact(mu), b = compact(nu);
  if (a.atoms.size() > cap || b.atoms.size() > cap) {
    fail(ErrorKind::capacity, "dbar: support exceeds " + std::to_string(cap) +
                                  " atoms per side; use a smaller m or fewer distinct atoms");
  }
  // balance the totals exactly against mu's
  const double sa = stable_sum(a.mass), sb = stable_sum(b.mass);
  for (double& x : b.mass) x *= sa / sb;

  const auto sol = transport(a.mass, b.mass, [&](std::size_t i, std::size_t j) {
    return hamming_cost(a.atoms[i], b.atoms[j]);
  });
  if (sol.max_dual_violation > kCertificateTolerance || std::abs(sol.value - sol.dual_value) > kCertificateTolerance) {
    fail(ErrorKind::convergence, "dbar: optimality certificate failed");
  }

  DbarResult out;
  out.value = std::clamp(sol.value, 0.0, 1.0);
  out.dual_value = sol.dual_value;
  out.max_dual_violation = sol.max_dual_violation;
  out.iterations = sol.iterations;
  for (const auto& cell : sol.flow) {
    if (cell.mass > 0.0) out.coupling.joint.push_back({cell.row, cell.col, cell.mass});
  }
  std::sort(out.coupling.joint.begin(), out.coupling.joint.end(),
            [](const CouplingEntry& l, const CouplingEntry& r) { return std::tie(l.x, l.y) < std::tie(r.x, r.y); });
  out.coupling.row_atoms = std::move(a.atoms);
  out.coupling.row_marginal = std::move(a.mass);
  out.coupling.col_atoms = std::move(b.atoms);
  out.coupling.col_marginal = std::move(b.mass);
  return out;
}

/// Converts a dense law over A^m (base-|A| codes) into string atoms.
inline SparseLaw to_sparse(const Categorical& law, std::size_t alphabet_size, std::size_t m) {
  const ContextCodec codec(alphabet_size, m);
  require(law.size() == codec.count(), "dbar: law size is not |A|^m");
  SparseLaw out;
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (law[i] == 0.0) continue;
    out.atoms.push_back(codec.decode(i));
    out.mass.push_back(law[i]);
  }
  return out;
}

/// d-bar between two laws over A^m given as dense vectors of size |A|^m.
inline DbarResult dbar_exact(const Categorical& mu, const Categorical& nu, std::size_t alphabet_size, std::size_t m,
                             std::size_t cap = kTransportAtomCap) {
  require(mu.size() == nu.size(), "dbar: laws over different atom sets");
  return dbar_exact(to_sparse(mu, alphabet_size, m), to_sparse(nu, alphabet_size, m), cap);
}

// ---------------------------------------------------------------------------
// Plug-in estimate from samples

struct DbarEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t resamples = 0;
  std::size_t support = 0;  ///< distinct atoms in the union
};

namespace detail {

inline SparseLaw empirical_law(std::span<const TokenSeq> samples, std::span<const std::size_t> pick) {
  std::map<TokenSeq, double> counts;
  for (std::size_t i : pick) counts[samples[i]] += 1.0;
  SparseLaw law;
  for (auto& [atom, c] : counts) {
    law.atoms.push_back(atom);
    law.mass.push_back(c / static_cast<double>(pick.size()));
  }
  return law;
}

inline double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace detail

/// d-bar between the empirical laws of two samples of equal-length strings,
/// with a 95% basic bootstrap interval.
inline DbarEstimate dbar_empirical(std::span<const TokenSeq> xs, std::span<const TokenSeq> ys,
                                   std::size_t resamples = 200, std::uint64_t seed = 0,
                                   std::size_t cap = kTransportAtomCap) {
  require(xs.size() >= 100 && ys.size() >= 100, "dbar_empirical: need at least 100 samples per side");
  require(resamples >= 200, "dbar_empirical: need at least 200 bootstrap resamples");
  const std::size_t m = xs.front().size();
  for (const auto& s : xs) require(s.size() == m, "dbar_empirical: samples of different length");
  for (const auto& s : ys) require(s.size() == m, "dbar_empirical: samples of different length");

  std::vector<std::size_t> ix(xs.size()), iy(ys.size());
  std::iota(ix.begin(), ix.end(), 0);
  std::iota(iy.begin(), iy.end(), 0);
  const auto lx = detail::empirical_law(xs, ix);
  const auto ly = detail::empirical_law(ys, iy);
  std::size_t union_size = 0;
  {
    std::vector<TokenSeq> uni(lx.atoms);
    uni.insert(uni.end(), ly.atoms.begin(), ly.atoms.end());
    std::sort(uni.begin(), uni.end());
    uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
    if (uni.size() > cap) {
      fail(ErrorKind::capacity, "dbar_empirical: union support of " + std::to_string(uni.size()) +
                                    " atoms exceeds the cap; use a smaller m or fewer distinct atoms");
    }
    union_size = uni.size();
  }
  DbarEstimate out;
  out.value = dbar_exact(lx, ly, cap).value;
  out.support = union_size;
  out.resamples = resamples;

  std::vector<double> boot(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    Rng rng(derive_seed(seed, b));
    for (auto& i : ix) i = rng.below(xs.size());
    for (auto& i : iy) i = rng.below(ys.size());
    boot[b] = dbar_exact(detail::empirical_law(xs, ix), detail::empirical_law(ys, iy), cap).value;
  }
  // basic (reverse percentile) interval: the plug-in estimate is biased
  // upward, and reflecting the bootstrap quantiles about it removes that
  // bias to first order, so identical sources get an interval reaching 0
  out.ci_low = std::clamp(2.0 * out.value - detail::percentile(boot, 0.975), 0.0, 1.0);
  out.ci_high = std::clamp(2.0 * out.value - detail::percentile(boot, 0.025), 0.0, 1.0);
  return out;
}

}  // namespace lmdetect
