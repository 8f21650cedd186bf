// Miss probability of the Neyman-Pearson test against n for an i.i.d. binary
// pair, next to the Stein rate exp(-n D).

#include <cmath>
#include <cstdio>
#include <vector>

#include "lmdetect.hpp"

using namespace lmdetect;

int main() {
  const auto p = MarkovModel::iid(Categorical({0.5, 0.5}));
  const auto q = MarkovModel::iid(Categorical({0.9, 0.1}));
  const std::vector<std::size_t> grid = {250, 500, 1000, 2000};
  const auto fit = exponent_fit(p, q, 0.1, grid, 20000, 7);

  std::printf("%6s %12s %12s %10s\n", "n", "-ln beta", "n D", "ratio");
  for (const auto& o : fit.outcomes) {
    const double nd = static_cast<double>(o.n) * fit.theory;
    std::printf("%6zu %12.3f %12.3f %10.4f\n", o.n, -o.log_beta_hat, nd, -o.log_beta_hat / nd);
  }
  std::printf("slope %.5f +- %.5f, D(P||Q) = %.5f nats\n", fit.slope, fit.slope_stderr, fit.theory);
}
