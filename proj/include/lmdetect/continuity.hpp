#pragma once

// Process parameters for stationary finite-alphabet sources: continuity rate
// gamma(k), non-nullness floor p, and the alpha / beta(k) coefficients built
// from them. Infinite sups, sums and products are truncated at a reported
// horizon with the tail taken as zero.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <vector>

#include "lmdetect/categorical.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/hmm.hpp"
#include "lmdetect/markov.hpp"

namespace lmdetect {

inline Categorical window_law(const HiddenMarkovSource& src, std::size_t m, std::uint64_t cap) {
  return hmm_window_distribution(src, m, cap);
}
inline Categorical window_law(const MarkovModel& model, std::size_t m, std::uint64_t cap) {
  return window_distribution(model, m, cap);
}
inline std::size_t process_alphabet_size(const HiddenMarkovSource& src) { return src.alphabet_size(); }
inline std::size_t process_alphabet_size(const MarkovModel& model) { return model.alphabet_size(); }

/// A stationary source whose finite-window laws can be enumerated exactly.
template <class S>
concept StationaryProcess = requires(const S& s, std::size_t m, std::uint64_t cap) {
  { window_law(s, m, cap) } -> std::same_as<Categorical>;
  { process_alphabet_size(s) } -> std::convertible_to<std::size_t>;
};

/// Next-symbol conditionals for every length-m context; contexts of
/// probability zero have no entry.
struct ConditionalTable {
  std::size_t alphabet_size = 0;
  std::size_t context_length = 0;
  std::vector<std::optional<std::vector<double>>> rows;  ///< indexed by packed context
};

template <StationaryProcess S>
ConditionalTable conditional_table(const S& source, std::size_t m, std::uint64_t cap = kDefaultAtomCap) {
  const std::size_t n = process_alphabet_size(source);
  const auto joint = window_law(source, m + 1, cap);
  ConditionalTable table{n, m, {}};
  const std::size_t contexts = joint.size() / n;
  table.rows.resize(contexts);
  for (std::size_t c = 0; c < contexts; ++c) {
    double mass = 0.0;
    for (std::size_t a = 0; a < n; ++a) mass += joint[c * n + a];
    if (mass == 0.0) continue;
    std::vector<double> row(n);
    for (std::size_t a = 0; a < n; ++a) row[a] = joint[c * n + a] / mass;
    table.rows[c] = std::move(row);
  }
  return table;
}

/// Value of a truncated sup/inf together with the context horizon used.
struct HorizonValue {
  double value = 0.0;
  std::size_t horizon = 0;
};

/// gamma(k) for k = 1..k_max: the largest change |P(a|x) - P(a|y)| over
/// context lengths m in [k, m_max] and context pairs x, y that agree on
/// their k most recent symbols.
template <StationaryProcess S>
std::vector<double> continuity_rates(const S& source, std::size_t k_max, std::size_t m_max,
                                     std::uint64_t cap = kDefaultAtomCap) {
  require(k_max >= 1, "continuity_rate: k must be >= 1");
  require(m_max >= k_max, "continuity_rate: horizon m_max must be >= k");
  const std::size_t n = process_alphabet_size(source);
  std::vector<double> gamma(k_max, 0.0);
  for (std::size_t m = 1; m <= m_max; ++m) {
    const auto table = conditional_table(source, m, cap);
    const std::size_t top = std::min(k_max, m);
    for (std::size_t k = 1; k <= top; ++k) {
      const std::uint64_t groups = atom_count(n, k);
      std::vector<double> lo(groups * n, kInf), hi(groups * n, kNegInf);
      for (std::size_t c = 0; c < table.rows.size(); ++c) {
        if (!table.rows[c]) continue;
        const std::size_t g = c % groups;
        for (std::size_t a = 0; a < n; ++a) {
          const double v = (*table.rows[c])[a];
          lo[g * n + a] = std::min(lo[g * n + a], v);
          hi[g * n + a] = std::max(hi[g * n + a], v);
        }
      }
      for (std::size_t i = 0; i < lo.size(); ++i) {
        if (hi[i] >= lo[i]) gamma[k - 1] = std::max(gamma[k - 1], hi[i] - lo[i]);
      }
    }
  }
  return gamma;
}

template <StationaryProcess S>
HorizonValue continuity_rate(const S& source, std::size_t k, std::size_t m_max,
                             std::uint64_t cap = kDefaultAtomCap) {
  return {continuity_rates(source, k, m_max, cap).back(), m_max};
}

struct SmoothingFloor {
  double value = 0.0;
  std::size_t horizon = 0;
  bool non_null = false;  ///< value > 0
};

/// min over contexts of length 0..m_max (of positive probability) of
/// min_a P(a | context).
template <StationaryProcess S>
SmoothingFloor smoothing_floor(const S& source, std::size_t m_max, std::uint64_t cap = kDefaultAtomCap) {
  double floor = 1.0;
  for (std::size_t m = 0; m <= m_max; ++m) {
    const auto table = conditional_table(source, m, cap);
    for (const auto& row : table.rows) {
      if (!row) continue;
      floor = std::min(floor, *std::min_element(row->begin(), row->end()));
    }
  }
  return {floor, m_max, floor > 0.0};
}

// ---------------------------------------------------------------------------
// Profile and coefficients

struct ContinuityProfile {
  std::vector<double> gamma;  ///< gamma[j-1] = gamma(j), j = 1..horizon
  double gamma_sum = 0.0;
  double p_floor = 0.0;
  double alpha = 1.0;
  std::size_t amax = 2;               ///< alphabet size |A|
  std::size_t context_horizon = 0;    ///< m_max used for the sups (0 if supplied by hand)

  std::size_t horizon() const noexcept { return gamma.size(); }

  /// gamma(k), zero beyond the horizon.
  double gamma_at(std::size_t k) const { return k >= 1 && k <= gamma.size() ? gamma[k - 1] : 0.0; }

  void validate() const {
    require(amax >= 2, "profile: alphabet size must be >= 2");
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      require(gamma[j] >= 0.0 && gamma[j] <= 1.0, "profile: gamma(k) outside [0,1]");
      if (j > 0) require(gamma[j] <= gamma[j - 1] + 1e-15, "profile: gamma(k) must be nonincreasing in k");
    }
    require(p_floor > 0.0 && p_floor <= 1.0 / static_cast<double>(amax) + 1e-12,
            "profile: p must lie in (0, 1/|A|]");
  }
};

/// alpha = 1 / prod_j (1 - gamma(j)).
inline double alpha_coeff(const ContinuityProfile& profile) {
  double prod = 1.0;
  for (double g : profile.gamma) {
    if (g >= 1.0) fail(ErrorKind::inapplicable, "alpha: gamma(j) = 1 makes the product vanish");
    prod *= 1.0 - g;
  }
  return 1.0 / prod;
}

/// beta(k) = [1 - (1 - |A| gamma(k))^k] / [k gamma(k) prod_j (1 - |A| gamma(j))^2],
/// extended continuously to |A| / prod_j (1 - |A| gamma(j))^2 at gamma(k) = 0.
inline double beta_coeff(const ContinuityProfile& profile, std::size_t k) {
  require(k >= 1, "beta: k must be >= 1");
  const double a = static_cast<double>(profile.amax);
  double prod = 1.0;
  for (double g : profile.gamma) {
    if (a * g >= 1.0) {
      fail(ErrorKind::inapplicable, "beta: |A| gamma(j) >= 1, bound inapplicable");
    }
    prod *= (1.0 - a * g) * (1.0 - a * g);
  }
  const double gk = profile.gamma_at(k);
  const double kd = static_cast<double>(k);
  double lead;
  if (gk == 0.0) {
    lead = a;
  } else {
    lead = -std::expm1(kd * std::log1p(-a * gk)) / (kd * gk);
  }
  return lead / prod;
}

/// Profile of a source with gammas up to k_max and sups over contexts of
/// length <= m_max.
template <StationaryProcess S>
ContinuityProfile continuity_profile(const S& source, std::size_t k_max, std::size_t m_max,
                                     std::uint64_t cap = kDefaultAtomCap) {
  ContinuityProfile profile;
  profile.amax = process_alphabet_size(source);
  profile.gamma = continuity_rates(source, k_max, m_max, cap);
  for (double g : profile.gamma) profile.gamma_sum += g;
  const auto floor = smoothing_floor(source, m_max, cap);
  if (!floor.non_null) fail(ErrorKind::support, "profile: source is not non-null (p = 0)");
  profile.p_floor = floor.value;
  profile.context_horizon = m_max;
  profile.alpha = alpha_coeff(profile);
  return profile;
}

}  // namespace lmdetect
