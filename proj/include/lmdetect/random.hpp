#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lmdetect {

// splitmix64 finalizer; used to derive independent per-trial seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under base `seed`: mix64(mix64(seed) ^ index).
/// Trials, instances and bootstrap resamples all derive their seeds this way.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ index);
}

/// 64-bit Mersenne Twister with a portable [0,1) draw (53 high bits).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Symmetric Dirichlet(concentration) draw of the given dimension.
inline std::vector<double> dirichlet(Rng& rng, std::size_t dim, double concentration) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> w(dim);
  double total = 0.0;
  do {
    total = 0.0;
    for (auto& x : w) {
      x = gamma(rng.engine());
      total += x;
    }
  } while (!(total > 0.0));
  for (auto& x : w) x /= total;
  return w;
}

}  // namespace lmdetect
