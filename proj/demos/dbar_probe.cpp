// d-bar between two Markov chains over growing windows, and the largest
// D / d-bar^2 seen on random pairs of laws.

#include <cstdio>

#include "lmdetect.hpp"

using namespace lmdetect;

int main() {
  const auto a = MarkovModel::order1({{0.8, 0.2}, {0.3, 0.7}});
  const auto b = MarkovModel::order1({{0.6, 0.4}, {0.4, 0.6}});
  std::printf("%3s %10s %10s %10s\n", "m", "d-bar", "tv", "D/m");
  for (std::size_t m = 1; m <= 8; ++m) {
    const auto mu = window_distribution(a, m), nu = window_distribution(b, m);
    const double d = dbar_exact(mu, nu, 2, m).value;
    std::printf("%3zu %10.6f %10.6f %10.6f\n", m, d, tv(mu, nu), kl(mu, nu) / static_cast<double>(m));
  }

  for (std::size_t m = 1; m <= 3; ++m) {
    const auto r = conjecture1_probe(2, m, 1000, ProbeSampler::dirichlet_uniform, 42);
    std::printf("m=%zu: sup D/d-bar^2 = %.3f at Q_min = %.4f (pinsker violations %zu)\n", m, r.sup_ratio,
                r.scatter[r.argmax].q_min, r.violations);
  }
}
