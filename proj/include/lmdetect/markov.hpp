#pragma once

// Order-k Markov sources: the empirical maximum-likelihood estimator,
// sampling, likelihood scoring, stationary laws and exact enumeration of
// finite-length sequence distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmdetect/categorical.hpp"
#include "lmdetect/corpus.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/random.hpp"

namespace lmdetect {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default cap on the number of atoms for exact sequence enumeration.
inline constexpr std::uint64_t kDefaultAtomCap = 65536;

/// Next-symbol distribution for one context, stored sparsely: `symbols` holds
/// the explicit entries in ascending order, every other symbol has mass `floor`
/// (zero unless the model was smoothed).
struct TransitionRow {
  std::vector<Symbol> symbols;
  std::vector<double> probs;
  std::vector<double> log_probs;
  std::vector<double> cumulative;
  double floor = 0.0;
  double log_floor = kNegInf;

  double prob(Symbol a) const {
    auto it = std::lower_bound(symbols.begin(), symbols.end(), a);
    if (it != symbols.end() && *it == a) return probs[static_cast<std::size_t>(it - symbols.begin())];
    return floor;
  }

  double log_prob(Symbol a) const {
    auto it = std::lower_bound(symbols.begin(), symbols.end(), a);
    if (it != symbols.end() && *it == a) return log_probs[static_cast<std::size_t>(it - symbols.begin())];
    return log_floor;
  }

  /// Dense copy of the row over an alphabet of `alphabet_size` symbols.
  std::vector<double> dense(std::size_t alphabet_size) const {
    std::vector<double> out(alphabet_size, floor);
    for (std::size_t i = 0; i < symbols.size(); ++i) out[symbols[i]] = probs[i];
    return out;
  }

  Symbol draw(double u, std::size_t alphabet_size) const {
    const double explicit_mass = cumulative.empty() ? 0.0 : cumulative.back();
    if (u < explicit_mass || floor == 0.0) {
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      if (it == cumulative.end()) --it;
      return symbols[static_cast<std::size_t>(it - cumulative.begin())];
    }
    // uniform among the symbols without an explicit entry
    const std::size_t free = alphabet_size - symbols.size();
    auto j = static_cast<std::size_t>((u - explicit_mass) / floor);
    j = std::min(j, free - 1);
    Symbol a = 0;
    std::size_t e = 0;
    for (;; ++a) {
      if (e < symbols.size() && symbols[e] == a) {
        ++e;
        continue;
      }
      if (j-- == 0) return a;
    }
  }

  /// Builds a row from a dense probability vector; zero entries are dropped.
  static TransitionRow from_dense(std::span<const double> probs) {
    TransitionRow row;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      if (probs[a] > 0.0) {
        row.symbols.push_back(static_cast<Symbol>(a));
        row.probs.push_back(probs[a]);
      }
    }
    row.finish();
    return row;
  }

  void finish() {
    log_probs.resize(probs.size());
    cumulative.resize(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      log_probs[i] = std::log(probs[i]);
      acc += probs[i];
      cumulative[i] = acc;
    }
    log_floor = floor > 0.0 ? std::log(floor) : kNegInf;
  }

  double total_mass(std::size_t alphabet_size) const {
    return stable_sum(probs) + floor * static_cast<double>(alphabet_size - symbols.size());
  }
};

/// Order-k Markov model Q(a_1..a_n) = init(a_1..a_k) * prod q(a_i | a_{i-k}..a_{i-1}).
///
/// Rows exist only for contexts that were given (or observed, for fitted
/// models). Scoring or sampling through a context without a row raises
/// ErrorKind::unseen_context unless the model is smoothed, in which case
/// unseen contexts get the uniform row.
class MarkovModel {
 public:
  MarkovModel() = default;

  /// `rows` maps packed context codes (see ContextCodec) to transition rows;
  /// `init` maps packed length-k codes to probabilities with every other
  /// context carrying `init_floor`.
  MarkovModel(Alphabet alphabet, std::size_t order, std::map<std::uint64_t, TransitionRow> rows,
              std::map<std::uint64_t, double> init, double smoothing = 0.0, double init_floor = 0.0)
      : alphabet_(std::move(alphabet)),
        order_(order),
        codec_(alphabet_.size(), order),
        smoothing_(smoothing),
        init_floor_(init_floor) {
    require(smoothing >= 0.0 && smoothing <= 1.0, "markov: smoothing must lie in [0, 1]");
    const std::size_t n = alphabet_.size();
    for (auto& [code, row] : rows) {
      require(code < codec_.count(), "markov: context code out of range");
      for (Symbol s : row.symbols) require(s < n, "markov: row symbol out of range");
      const double mass = row.total_mass(n);
      require(std::abs(mass - 1.0) <= Categorical::kSumTolerance,
              "markov: row for context " + std::to_string(code) + " sums to " + std::to_string(mass));
      row_codes_.push_back(code);
      rows_.push_back(std::move(row));
    }
    double init_mass = 0.0;
    for (const auto& [code, p] : init) {
      require(code < codec_.count(), "markov: init context out of range");
      require(p >= 0.0, "markov: negative init probability");
      if (p > 0.0) {
        init_codes_.push_back(code);
        init_probs_.push_back(p);
        init_mass += p;
      }
    }
    init_mass += init_floor_ * static_cast<double>(codec_.count() - init_codes_.size());
    require(std::abs(init_mass - 1.0) <= 1e-10, "markov: init sums to " + std::to_string(init_mass));
    if (smoothing_ > 0.0) {
      uniform_row_.floor = 1.0 / static_cast<double>(n);
      uniform_row_.finish();
    }
    build_index();
  }

  /// Convenience constructor from dense rows keyed by context tuples.
  static MarkovModel from_dense(Alphabet alphabet, std::size_t order,
                                const std::vector<std::pair<TokenSeq, std::vector<double>>>& rows,
                                const std::vector<std::pair<TokenSeq, double>>& init) {
    ContextCodec codec(alphabet.size(), order);
    std::map<std::uint64_t, TransitionRow> r;
    for (const auto& [ctx, probs] : rows) {
      require(ctx.size() == order, "markov: context length differs from order");
      require(probs.size() == alphabet.size(), "markov: row length differs from alphabet size");
      r.emplace(codec.encode(ctx), TransitionRow::from_dense(probs));
    }
    std::map<std::uint64_t, double> i;
    for (const auto& [ctx, p] : init) {
      require(ctx.size() == order, "markov: init context length differs from order");
      i[codec.encode(ctx)] += p;
    }
    return MarkovModel(std::move(alphabet), order, std::move(r), std::move(i));
  }

  /// I.i.d. source (order 0) with the given symbol law.
  static MarkovModel iid(const Categorical& law) {
    std::map<std::uint64_t, TransitionRow> rows;
    rows.emplace(0, TransitionRow::from_dense(law.probs()));
    return MarkovModel(Alphabet::synthetic(law.size()), 0, std::move(rows), {{0, 1.0}});
  }

  /// Order-1 chain from a row-stochastic matrix; init is its stationary law
  /// when `init` is empty.
  static MarkovModel order1(const std::vector<std::vector<double>>& matrix, std::vector<double> init = {});

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t alphabet_size() const noexcept { return alphabet_.size(); }
  std::size_t order() const noexcept { return order_; }
  const ContextCodec& codec() const noexcept { return codec_; }
  double smoothing() const noexcept { return smoothing_; }
  double init_floor() const noexcept { return init_floor_; }

  std::size_t row_count() const noexcept { return rows_.size(); }
  /// Context codes with an explicit row, ascending.
  std::span<const std::uint64_t> row_codes() const noexcept { return row_codes_; }
  const TransitionRow& row_at(std::size_t i) const { return rows_[i]; }

  std::span<const std::uint64_t> init_codes() const noexcept { return init_codes_; }
  std::span<const double> init_probs() const noexcept { return init_probs_; }

  /// Row for a packed context, the uniform row for unseen contexts of a
  /// smoothed model, or nullptr.
  const TransitionRow* find_row(std::uint64_t code) const {
    if (!dense_index_.empty()) {
      const auto i = dense_index_[code];
      if (i >= 0) return &rows_[static_cast<std::size_t>(i)];
    } else if (auto it = sparse_index_.find(code); it != sparse_index_.end()) {
      return &rows_[it->second];
    }
    return smoothing_ > 0.0 ? &uniform_row_ : nullptr;
  }

  const TransitionRow& row(std::uint64_t code) const {
    if (const auto* r = find_row(code)) return *r;
    fail(ErrorKind::unseen_context, "context " + describe(code) + " has no transition row");
  }

  double init_prob(std::uint64_t code) const {
    auto it = std::lower_bound(init_codes_.begin(), init_codes_.end(), code);
    if (it != init_codes_.end() && *it == code) return init_probs_[static_cast<std::size_t>(it - init_codes_.begin())];
    return init_floor_;
  }

  /// Probability that the first prefix.size() (< order) symbols equal `prefix`.
  double init_prefix_prob(std::span<const Symbol> prefix) const {
    const std::size_t rest = order_ - prefix.size();
    std::uint64_t span_width = 1;
    for (std::size_t i = 0; i < rest; ++i) span_width *= alphabet_size();
    std::uint64_t lo = 0;
    for (Symbol s : prefix) lo = lo * alphabet_size() + s;
    lo *= span_width;
    const std::uint64_t hi = lo + span_width;
    double total = 0.0;
    std::uint64_t explicit_count = 0;
    for (std::size_t i = 0; i < init_codes_.size(); ++i) {
      if (init_codes_[i] >= lo && init_codes_[i] < hi) {
        total += init_probs_[i];
        ++explicit_count;
      }
    }
    return total + init_floor_ * static_cast<double>(span_width - explicit_count);
  }

  std::string describe(std::uint64_t code) const {
    std::string out = "[";
    const auto ctx = codec_.decode(code);
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i) out += ' ';
      out += alphabet_.symbol(ctx[i]);
    }
    return out + "]";
  }

 private:
  void build_index() {
    constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 20;
    if (codec_.count() <= kDenseLimit) {
      dense_index_.assign(codec_.count(), -1);
      for (std::size_t i = 0; i < row_codes_.size(); ++i) {
        dense_index_[row_codes_[i]] = static_cast<std::int64_t>(i);
      }
    } else {
      for (std::size_t i = 0; i < row_codes_.size(); ++i) sparse_index_.emplace(row_codes_[i], i);
    }
  }

  Alphabet alphabet_;
  std::size_t order_ = 0;
  ContextCodec codec_;
  double smoothing_ = 0.0;
  double init_floor_ = 0.0;
  std::vector<std::uint64_t> row_codes_;
  std::vector<TransitionRow> rows_;
  std::vector<std::uint64_t> init_codes_;
  std::vector<double> init_probs_;
  TransitionRow uniform_row_;
  std::vector<std::int64_t> dense_index_;
  std::unordered_map<std::uint64_t, std::size_t> sparse_index_;
};

// ---------------------------------------------------------------------------
// Estimation

/// Empirical order-k Markov approximation of `seq`:
///   q(a | c) = N_m(c a) / N_{m-1}(c)
/// for every context c occurring in the first m-1 tokens. The initial law is
/// N_{m-1}(c) normalized. With smoothing delta > 0 each row becomes
/// (N_m(c a) + delta) / (N_{m-1}(c) + delta |A|) and unseen contexts are uniform.
inline MarkovModel fit_empirical(const Alphabet& alphabet, std::span<const Symbol> seq, std::size_t k,
                                 double smoothing = 0.0) {
  require(seq.size() >= k + 1, "fit_empirical: sequence shorter than k+1 tokens");
  const std::size_t n = alphabet.size();
  for (Symbol s : seq) require(s < n, "fit_empirical: token outside the alphabet");

  const ContextCodec ctx_codec(n, k);
  // (k+1)-gram counts over the whole sequence, grouped by context
  std::map<std::uint64_t, std::map<Symbol, std::uint64_t>> numer;
  std::unordered_map<std::uint64_t, std::map<Symbol, std::uint64_t>*> lookup;
  std::uint64_t ctx = 0;
  const std::uint64_t keep = k == 0 ? 1 : ctx_codec.count() / n;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i >= k) {
      auto it = lookup.find(ctx);
      if (it == lookup.end()) it = lookup.emplace(ctx, &numer[ctx]).first;
      ++(*it->second)[seq[i]];
    }
    if (k > 0) ctx = (ctx % keep) * n + seq[i];
  }

  std::map<std::uint64_t, TransitionRow> rows;
  std::map<std::uint64_t, double> init;
  const double total_windows = static_cast<double>(seq.size() - k);  // = sum of N_{m-1}(c)
  for (const auto& [code, counts] : numer) {
    std::uint64_t denom = 0;
    for (const auto& [a, c] : counts) denom += c;
    TransitionRow row;
    const double scale = static_cast<double>(denom) + smoothing * static_cast<double>(n);
    for (const auto& [a, c] : counts) {
      row.symbols.push_back(a);
      row.probs.push_back((static_cast<double>(c) + smoothing) / scale);
    }
    row.floor = smoothing / scale;
    row.finish();
    rows.emplace(code, std::move(row));
    init[code] = static_cast<double>(denom);
  }

  double init_floor = 0.0;
  const double init_scale =
      total_windows + smoothing * static_cast<double>(smoothing > 0.0 ? ctx_codec.count() : 0);
  for (auto& [code, c] : init) c = (c + smoothing) / init_scale;
  if (smoothing > 0.0) init_floor = smoothing / init_scale;
  return MarkovModel(alphabet, k, std::move(rows), std::move(init), smoothing, init_floor);
}

// ---------------------------------------------------------------------------
// Sampling and scoring

namespace detail {

inline std::uint64_t draw_init(const MarkovModel& model, Rng& rng) {
  const double u = rng.uniform();
  const auto codes = model.init_codes();
  const auto probs = model.init_probs();
  double acc = 0.0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    acc += probs[i];
    if (u < acc) return codes[i];
  }
  if (model.init_floor() == 0.0) return codes.back();
  // uniform among contexts without an explicit init entry
  const std::uint64_t free = model.codec().count() - codes.size();
  auto j = static_cast<std::uint64_t>((u - acc) / model.init_floor());
  j = std::min(j, free - 1);
  std::uint64_t code = 0;
  std::size_t e = 0;
  for (;; ++code) {
    if (e < codes.size() && codes[e] == code) {
      ++e;
      continue;
    }
    if (j-- == 0) return code;
  }
}

}  // namespace detail

/// Draws n tokens: the first k from init, the rest from the rows.
/// Deterministic in `seed`.
inline TokenSeq sample(const MarkovModel& model, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "sample: n must be >= 1");
  Rng rng(seed);
  TokenSeq out;
  out.reserve(n);
  const std::size_t k = model.order();
  std::uint64_t ctx = 0;
  if (k > 0) {
    ctx = detail::draw_init(model, rng);
    for (Symbol s : model.codec().decode(ctx)) {
      if (out.size() < n) out.push_back(s);
    }
  }
  const std::size_t alphabet_size = model.alphabet_size();
  while (out.size() < n) {
    const Symbol a = model.row(ctx).draw(rng.uniform(), alphabet_size);
    out.push_back(a);
    ctx = model.codec().shift(ctx, a);
  }
  return out;
}

/// ln init(a_1..a_k) + sum_i ln q(a_i | context), in nats. Returns -inf when
/// any factor is zero; throws unseen_context when a context has no row.
inline double log_likelihood(const MarkovModel& model, std::span<const Symbol> seq) {
  require(!seq.empty(), "log_likelihood: empty sequence");
  const std::size_t k = model.order();
  for (Symbol s : seq) require(s < model.alphabet_size(), "log_likelihood: token outside the alphabet");
  if (seq.size() < k) return std::log(model.init_prefix_prob(seq));
  const std::uint64_t first = model.codec().encode(seq.first(k));
  double total = k > 0 ? std::log(model.init_prob(first)) : 0.0;
  std::uint64_t ctx = first;
  for (std::size_t i = k; i < seq.size(); ++i) {
    total += model.row(ctx).log_prob(seq[i]);
    ctx = model.codec().shift(ctx, seq[i]);
  }
  return total;
}

namespace detail {

// Log-likelihood where a context without a row counts as probability zero.
inline double log_likelihood_or_zero(const MarkovModel& model, std::span<const Symbol> seq) {
  try {
    return log_likelihood(model, seq);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::unseen_context) return kNegInf;
    throw;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stationary law

/// Sparse law over packed contexts.
struct ContextLaw {
  std::vector<std::uint64_t> codes;  ///< ascending
  std::vector<double> probs;

  double operator()(std::uint64_t code) const {
    auto it = std::lower_bound(codes.begin(), codes.end(), code);
    if (it != codes.end() && *it == code) return probs[static_cast<std::size_t>(it - codes.begin())];
    return 0.0;
  }

  /// Dense Categorical over all |A|^k contexts.
  Categorical dense(std::uint64_t context_count) const {
    std::vector<double> out(context_count, 0.0);
    for (std::size_t i = 0; i < codes.size(); ++i) out[codes[i]] = probs[i];
    return Categorical::normalized(std::move(out));
  }
};

struct StationaryOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 1'000'000;
  std::uint64_t state_cap = kDefaultAtomCap;
};

namespace detail {

// States of the context chain: explicit rows, or all |A|^k contexts for a
// smoothed model.
inline std::vector<std::uint64_t> chain_states(const MarkovModel& model, std::uint64_t cap) {
  std::vector<std::uint64_t> states;
  if (model.smoothing() > 0.0) {
    if (model.codec().count() > cap) {
      fail(ErrorKind::capacity, "stationary: |A|^k = " + std::to_string(model.codec().count()) +
                                    " contexts exceeds the cap");
    }
    states.resize(model.codec().count());
    for (std::uint64_t c = 0; c < states.size(); ++c) states[c] = c;
  } else {
    states.assign(model.row_codes().begin(), model.row_codes().end());
    if (states.size() > cap) fail(ErrorKind::capacity, "stationary: too many contexts");
  }
  return states;
}

}  // namespace detail

/// Stationary law of the context chain by power iteration from the uniform
/// law. Converges when the chain is irreducible and aperiodic; otherwise the
/// iteration cap raises ErrorKind::convergence.
inline ContextLaw stationary(const MarkovModel& model, const StationaryOptions& options = {}) {
  const auto states = detail::chain_states(model, options.state_cap);
  const std::size_t s_count = states.size();
  const std::size_t n = model.alphabet_size();
  std::unordered_map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < s_count; ++i) pos.emplace(states[i], i);

  // sparse transition lists
  std::vector<std::vector<std::pair<std::size_t, double>>> next(s_count);
  for (std::size_t i = 0; i < s_count; ++i) {
    const auto& row = model.row(states[i]);
    for (Symbol a = 0; a < n; ++a) {
      const double p = row.prob(a);
      if (p == 0.0) continue;
      const auto target = model.codec().shift(states[i], a);
      auto it = pos.find(target);
      if (it == pos.end()) {
        fail(ErrorKind::unseen_context,
             "stationary: context " + model.describe(target) + " is reachable but has no row");
      }
      next[i].emplace_back(it->second, p);
    }
  }

  std::vector<double> pi(s_count, 1.0 / static_cast<double>(s_count));
  std::vector<double> nxt(s_count);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (std::size_t i = 0; i < s_count; ++i) {
      if (pi[i] == 0.0) continue;
      for (const auto& [j, p] : next[i]) nxt[j] += pi[i] * p;
    }
    double residual = 0.0;
    for (std::size_t i = 0; i < s_count; ++i) residual += std::abs(nxt[i] - pi[i]);
    pi.swap(nxt);
    if (residual < options.tolerance) {
      const double total = stable_sum(pi);
      ContextLaw law;
      law.codes = states;
      law.probs = std::move(pi);
      for (auto& p : law.probs) p /= total;
      return law;
    }
  }
  fail(ErrorKind::convergence, "stationary: power iteration did not converge (reducible or periodic chain?)");
}

inline MarkovModel MarkovModel::order1(const std::vector<std::vector<double>>& matrix, std::vector<double> init) {
  const std::size_t n = matrix.size();
  std::vector<std::pair<TokenSeq, std::vector<double>>> rows;
  for (std::size_t i = 0; i < n; ++i) rows.emplace_back(TokenSeq{static_cast<Symbol>(i)}, matrix[i]);
  std::vector<std::pair<TokenSeq, double>> init_pairs;
  if (init.empty()) {
    // placeholder init, replaced by the stationary law below
    auto tmp = from_dense(Alphabet::synthetic(n), 1, rows, {{TokenSeq{0}, 1.0}});
    const auto law = stationary(tmp);
    init.assign(n, 0.0);
    for (std::size_t i = 0; i < law.codes.size(); ++i) init[law.codes[i]] = law.probs[i];
  }
  for (std::size_t i = 0; i < n; ++i) init_pairs.emplace_back(TokenSeq{static_cast<Symbol>(i)}, init[i]);
  return from_dense(Alphabet::synthetic(n), 1, rows, init_pairs);
}

// ---------------------------------------------------------------------------
// Exact sequence distributions

namespace detail {

// Depth-first extension of (prefix code, context code, mass) triples through
// the rows until length m.
inline void extend(const MarkovModel& model, std::uint64_t code, std::uint64_t ctx, double mass,
                   std::size_t remaining, std::vector<double>& out) {
  if (remaining == 0) {
    out[code] += mass;
    return;
  }
  const auto& row = model.row(ctx);
  const std::size_t n = model.alphabet_size();
  for (Symbol a = 0; a < n; ++a) {
    const double p = row.prob(a);
    if (p == 0.0) continue;
    extend(model, code * n + a, model.codec().shift(ctx, a), mass * p, remaining - 1, out);
  }
}

}  // namespace detail

/// Exact law of (X_1..X_m) when the first k symbols follow `start`
/// (a law over packed contexts). Atom index = base-|A| code of the sequence.
inline Categorical sequence_distribution(const MarkovModel& model, std::size_t m, const ContextLaw& start,
                                         std::uint64_t atom_cap = kDefaultAtomCap) {
  require(m >= 1, "sequence_distribution: m must be >= 1");
  const std::uint64_t atoms = atom_count(model.alphabet_size(), m);
  if (atoms > atom_cap) {
    fail(ErrorKind::capacity, "sequence_distribution: |A|^m = " + std::to_string(atoms) + " exceeds atom cap");
  }
  const std::size_t k = model.order();
  const std::size_t n = model.alphabet_size();
  std::vector<double> out(atoms, 0.0);
  if (m < k) {
    std::uint64_t tail = 1;
    for (std::size_t i = m; i < k; ++i) tail *= n;
    for (std::size_t i = 0; i < start.codes.size(); ++i) out[start.codes[i] / tail] += start.probs[i];
  } else {
    for (std::size_t i = 0; i < start.codes.size(); ++i) {
      if (start.probs[i] == 0.0) continue;
      detail::extend(model, start.codes[i], start.codes[i], start.probs[i], m - k, out);
    }
  }
  return Categorical(std::move(out), 1e-10);
}

/// Law of the model's initial contexts (explicit entries plus floor).
inline ContextLaw init_law(const MarkovModel& model, std::uint64_t cap = kDefaultAtomCap) {
  ContextLaw law;
  if (model.init_floor() > 0.0) {
    if (model.codec().count() > cap) fail(ErrorKind::capacity, "init_law: too many contexts");
    for (std::uint64_t c = 0; c < model.codec().count(); ++c) {
      law.codes.push_back(c);
      law.probs.push_back(model.init_prob(c));
    }
  } else {
    law.codes.assign(model.init_codes().begin(), model.init_codes().end());
    law.probs.assign(model.init_probs().begin(), model.init_probs().end());
  }
  return law;
}

/// Exact law of (X_1..X_m) under the model's own init.
inline Categorical sequence_distribution(const MarkovModel& model, std::size_t m,
                                         std::uint64_t atom_cap = kDefaultAtomCap) {
  return sequence_distribution(model, m, init_law(model, atom_cap), atom_cap);
}

/// Length-m window law of the stationary chain.
inline Categorical window_distribution(const MarkovModel& model, std::size_t m,
                                       std::uint64_t atom_cap = kDefaultAtomCap) {
  return sequence_distribution(model, m, stationary(model), atom_cap);
}

/// Re-expresses a model as order `target` >= order: the row of a long
/// context is the row of its last k symbols, and the init is the model's law
/// of its first `target` symbols.
inline MarkovModel lift(const MarkovModel& model, std::size_t target, std::uint64_t cap = kDefaultAtomCap) {
  require(target >= model.order(), "lift: target order below model order");
  if (target == model.order()) return model;
  const std::size_t n = model.alphabet_size();
  const std::uint64_t contexts = atom_count(n, target);
  if (contexts > cap) fail(ErrorKind::capacity, "lift: |A|^K exceeds the cap");
  const ContextCodec low(n, model.order());
  std::map<std::uint64_t, TransitionRow> rows;
  for (std::uint64_t c = 0; c < contexts; ++c) {
    const std::uint64_t suffix = c % low.count();
    if (const auto* r = model.find_row(suffix)) rows.emplace(c, *r);
  }
  const auto init_seq = sequence_distribution(model, target, cap);
  std::map<std::uint64_t, double> init;
  for (std::uint64_t c = 0; c < contexts; ++c) {
    if (init_seq[c] > 0.0) init.emplace(c, init_seq[c]);
  }
  MarkovModel lifted(model.alphabet(), target, std::move(rows), std::move(init), 0.0, 0.0);
  return lifted;
}

}  // namespace lmdetect
