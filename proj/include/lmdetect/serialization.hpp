#pragma once

// JSON and CSV forms of models, counts, profiles and experiment records.
//
// Model file:
//   {"format": "lmdetect-model", "version": 1, "scheme": "char", "order": k,
//    "alphabet": [...], "smoothing": "0", "init_floor": "0",
//    "rows": [[[context indices], [probs]], ...],
//    "init": [[[context indices], "p"], ...]}
// Probabilities are decimal strings with 17 significant digits, which
// round-trip doubles exactly. A row is dense (|A| probabilities) unless it
// carries a third and fourth element: [[ctx], [probs], [symbols], "floor"].
// Byte-scheme alphabets are written as integers 0..255.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lmdetect/conjecture_lab.hpp"
#include "lmdetect/continuity.hpp"
#include "lmdetect/corpus.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/hypotest.hpp"
#include "lmdetect/markov.hpp"
#include "lmdetect/transport.hpp"

namespace lmdetect {

using Json = nlohmann::json;

/// "%.17g" rendering.
inline std::string exact_decimal(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_decimal(const Json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') fail(ErrorKind::invalid_argument, "bad decimal '" + s + "'");
  return x;
}

/// JSON for finite numbers; null for NaN / infinities.
inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "error reading '" + path + "'");
  return os.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::io, "error writing '" + path + "'");
}

inline std::string dump(const Json& j) {
  try {
    return j.dump(2) + "\n";
  } catch (const Json::exception& e) {
    fail(ErrorKind::io, std::string("json: ") + e.what());
  }
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::io, what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Alphabet and counts

inline Json alphabet_to_json(const Alphabet& a, Scheme scheme) {
  Json out = Json::array();
  for (const auto& s : a.symbols()) {
    if (scheme == Scheme::byte) {
      out.push_back(static_cast<int>(static_cast<unsigned char>(s.at(0))));
    } else {
      out.push_back(s);
    }
  }
  return out;
}

inline Alphabet alphabet_from_json(const Json& j, Scheme scheme) {
  std::vector<std::string> symbols;
  for (const auto& s : j) {
    if (scheme == Scheme::byte) {
      const int b = s.get<int>();
      require(b >= 0 && b < 256, "alphabet: byte symbol out of range");
      symbols.emplace_back(1, static_cast<char>(b));
    } else {
      symbols.push_back(s.get<std::string>());
    }
  }
  const bool reserved = scheme == Scheme::word && !symbols.empty() && symbols.back() == Alphabet::kReserved;
  return Alphabet(std::move(symbols), reserved ? OovPolicy::map_to_reserved : OovPolicy::error);
}

/// {"k", "total_positions", "alphabet", "counts": [[[tuple], count], ...]}
inline Json counts_to_json(const NgramCounts& counts, const Alphabet& a, Scheme scheme) {
  Json table = Json::array();
  for (const auto& [tuple, c] : counts.table) table.push_back(Json::array({tuple, c}));
  return {{"k", counts.k},
          {"total_positions", counts.total_positions},
          {"scheme", to_string(scheme)},
          {"alphabet", alphabet_to_json(a, scheme)},
          {"counts", std::move(table)}};
}

// ---------------------------------------------------------------------------
// Models

struct ModelFile {
  MarkovModel model;
  Scheme scheme = Scheme::chr;
};

inline Json model_to_json(const MarkovModel& model, Scheme scheme) {
  const std::size_t n = model.alphabet_size();
  const bool sparse = n > 64;
  Json rows = Json::array();
  for (std::size_t i = 0; i < model.row_count(); ++i) {
    const auto& row = model.row_at(i);
    Json ctx = model.codec().decode(model.row_codes()[i]);
    Json probs = Json::array();
    if (sparse) {
      for (double p : row.probs) probs.push_back(exact_decimal(p));
      rows.push_back(Json::array({ctx, probs, row.symbols, exact_decimal(row.floor)}));
    } else {
      for (double p : row.dense(n)) probs.push_back(exact_decimal(p));
      rows.push_back(Json::array({ctx, probs}));
    }
  }
  Json init = Json::array();
  for (std::size_t i = 0; i < model.init_codes().size(); ++i) {
    init.push_back(Json::array({model.codec().decode(model.init_codes()[i]), exact_decimal(model.init_probs()[i])}));
  }
  return {{"format", "lmdetect-model"},
          {"version", 1},
          {"scheme", to_string(scheme)},
          {"order", model.order()},
          {"alphabet", alphabet_to_json(model.alphabet(), scheme)},
          {"smoothing", exact_decimal(model.smoothing())},
          {"init_floor", exact_decimal(model.init_floor())},
          {"rows", std::move(rows)},
          {"init", std::move(init)}};
}

inline ModelFile model_from_json(const Json& j) {
  try {
    require(j.value("format", "") == "lmdetect-model", "model: not an lmdetect model file");
    ModelFile out;
    out.scheme = parse_scheme(j.at("scheme").get<std::string>());
    const std::size_t k = j.at("order").get<std::size_t>();
    Alphabet alphabet = alphabet_from_json(j.at("alphabet"), out.scheme);
    const ContextCodec codec(alphabet.size(), k);
    std::map<std::uint64_t, TransitionRow> rows;
    for (const auto& r : j.at("rows")) {
      const auto ctx = r.at(0).get<TokenSeq>();
      require(ctx.size() == k, "model: context length differs from order");
      TransitionRow row;
      if (r.size() == 4) {
        for (const auto& p : r.at(1)) row.probs.push_back(parse_decimal(p));
        row.symbols = r.at(2).get<std::vector<Symbol>>();
        row.floor = parse_decimal(r.at(3));
        require(row.symbols.size() == row.probs.size(), "model: sparse row size mismatch");
        require(std::is_sorted(row.symbols.begin(), row.symbols.end()), "model: sparse row symbols not sorted");
        row.finish();
      } else {
        std::vector<double> dense;
        for (const auto& p : r.at(1)) dense.push_back(parse_decimal(p));
        require(dense.size() == alphabet.size(), "model: row length differs from alphabet size");
        row = TransitionRow::from_dense(dense);
      }
      rows.emplace(codec.encode(ctx), std::move(row));
    }
    std::map<std::uint64_t, double> init;
    for (const auto& e : j.at("init")) {
      const auto ctx = e.at(0).get<TokenSeq>();
      require(ctx.size() == k, "model: init context length differs from order");
      init[codec.encode(ctx)] += parse_decimal(e.at(1));
    }
    out.model = MarkovModel(std::move(alphabet), k, std::move(rows), std::move(init), parse_decimal(j.at("smoothing")),
                            parse_decimal(j.at("init_floor")));
    return out;
  } catch (const Json::exception& e) {
    fail(ErrorKind::io, std::string("model file: ") + e.what());
  }
}

inline void save_model(const std::string& path, const MarkovModel& model, Scheme scheme) {
  write_file(path, dump(model_to_json(model, scheme)));
}

inline ModelFile load_model(const std::string& path) {
  return model_from_json(parse_json(read_file(path), "model file '" + path + "'"));
}

// ---------------------------------------------------------------------------
// Records

inline Json to_json(const ContinuityProfile& p) {
  return {{"gamma", p.gamma},           {"gamma_sum", p.gamma_sum}, {"p", p.p_floor},
          {"alpha", number_or_null(p.alpha)}, {"horizon", p.horizon()}, {"amax", p.amax},
          {"context_horizon", p.context_horizon}};
}

inline ContinuityProfile profile_from_json(const Json& j) {
  ContinuityProfile p;
  p.gamma = j.at("gamma").get<std::vector<double>>();
  p.p_floor = j.at("p").get<double>();
  p.amax = j.at("amax").get<std::size_t>();
  p.context_horizon = j.value("context_horizon", std::size_t{0});
  for (double g : p.gamma) p.gamma_sum += g;
  p.validate();
  p.alpha = alpha_coeff(p);
  return p;
}

inline Json to_json(const NpThreshold& t) {
  return {{"threshold", number_or_null(t.threshold)},
          {"epsilon", t.epsilon},
          {"false_alarm", t.false_alarm},
          {"n", t.n},
          {"trials", t.trials},
          {"exact", t.exact},
          {"degenerate", t.degenerate}};
}

inline Json to_json(const TestOutcome& o) {
  return {{"n", o.n},
          {"epsilon", o.epsilon},
          {"threshold", number_or_null(o.threshold)},
          {"beta_hat", o.beta_hat},
          {"log_beta_hat", number_or_null(o.log_beta_hat)},
          {"ci_low", o.ci_low},
          {"ci_high", o.ci_high},
          {"log_ci_low", number_or_null(o.log_ci_low)},
          {"log_ci_high", number_or_null(o.log_ci_high)},
          {"trials", o.trials},
          {"misses", o.misses},
          {"one_sided", o.one_sided},
          {"exact", o.exact},
          {"estimator", to_string(o.estimator)}};
}

inline Json to_json(const ExponentFit& f) {
  Json outcomes = Json::array();
  for (const auto& o : f.outcomes) outcomes.push_back(to_json(o));
  return {{"slope", f.slope},
          {"slope_stderr", f.slope_stderr},
          {"intercept", f.intercept},
          {"theory", number_or_null(f.theory)},
          {"relative_error", f.theory > 0.0 ? Json((f.slope - f.theory) / f.theory) : Json(nullptr)},
          {"epsilon", f.epsilon},
          {"n_grid", f.n_grid},
          {"neg_log_beta", f.neg_log_beta},
          {"excluded", f.excluded},
          {"outcomes", std::move(outcomes)}};
}

/// n, epsilon, beta_hat, ci_low, ci_high, threshold
inline std::string outcomes_csv(const ExponentFit& f) {
  std::ostringstream os;
  os << "n,epsilon,beta_hat,ci_low,ci_high,threshold,log_beta_hat\n";
  for (const auto& o : f.outcomes) {
    os << o.n << ',' << exact_decimal(o.epsilon) << ',' << exact_decimal(o.beta_hat) << ','
       << exact_decimal(o.ci_low) << ',' << exact_decimal(o.ci_high) << ',' << exact_decimal(o.threshold) << ','
       << exact_decimal(o.log_beta_hat) << '\n';
  }
  return os.str();
}

/// Two-column plot data: n and -ln beta.
inline std::string exponent_plot(const ExponentFit& f) {
  std::ostringstream os;
  os << "# n neg_log_beta\n";
  for (std::size_t i = 0; i < f.n_grid.size(); ++i) os << f.n_grid[i] << ' ' << exact_decimal(f.neg_log_beta[i]) << '\n';
  return os.str();
}

inline std::string atom_label(const TokenSeq& atom, const Alphabet& a) {
  std::string out;
  for (std::size_t i = 0; i < atom.size(); ++i) {
    if (i) out += ' ';
    out += a.symbol(atom[i]);
  }
  return out;
}

inline Json to_json(const DbarResult& r) {
  return {{"value", r.value},
          {"dual_value", r.dual_value},
          {"max_dual_violation", r.max_dual_violation},
          {"marginal_error", r.coupling.marginal_error()},
          {"iterations", r.iterations},
          {"coupling_entries", r.coupling.joint.size()}};
}

/// atom_x, atom_y, mass
inline std::string coupling_csv(const Coupling& c, const Alphabet& a) {
  std::ostringstream os;
  os << "atom_x,atom_y,mass\n";
  for (const auto& e : c.joint) {
    os << '"' << atom_label(c.row_atoms[e.x], a) << "\",\"" << atom_label(c.col_atoms[e.y], a) << "\","
       << exact_decimal(e.mass) << '\n';
  }
  return os.str();
}

inline Json to_json(const CTBound& b) {
  return {{"value", b.value},
          {"k", b.k},
          {"beta", b.beta},
          {"gamma_k", b.gamma_k},
          {"approximation_term", b.approximation_term},
          {"sampling_term", b.sampling_term}};
}

inline Json to_json(const CTExperiment& e) {
  Json rows = Json::array();
  for (const auto& r : e.rows) {
    rows.push_back({{"m", r.m},
                    {"k", r.k},
                    {"trials", r.trials},
                    {"dbar_mean", r.dbar_mean},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high},
                    {"bound", number_or_null(r.bound)},
                    {"admissible", r.admissible},
                    {"violations", r.violations},
                    {"violation_rate", r.violation_rate}});
  }
  return {{"window", e.window},
          {"profile", to_json(e.profile)},
          {"nonincreasing_within_ci", e.nonincreasing_within_ci()},
          {"rows", std::move(rows)}};
}

inline Json to_json(const Conjecture2Result& r) {
  return {{"k", r.k},
          {"inner", r.inner},
          {"rhs", r.rhs},
          {"d_estimate", number_or_null(r.d_estimate)},
          {"d_rate", number_or_null(r.d_rate)},
          {"standard_error", r.standard_error},
          {"window", r.window},
          {"windows", r.windows},
          {"estimate_is_rate_times_window", true},
          {"infinite", r.infinite},
          {"consistent", r.consistent}};
}

inline Json to_json(const ProbeReport& r) {
  Json by_qmin = Json::array();
  for (const auto& pt : r.scatter) {
    if (!pt.excluded) by_qmin.push_back(Json::array({pt.q_min, pt.ratio}));
  }
  return {{"alphabet_size", r.alphabet_size},
          {"m", r.m},
          {"sampler", to_string(r.sampler)},
          {"seed", r.seed},
          {"instance_count", r.instance_count},
          {"degenerate", r.degenerate},
          {"sup_ratio", r.sup_ratio},
          {"argmax", {{"instance", r.argmax}, {"p", r.argmax_p}, {"q", r.argmax_q}}},
          {"violations", r.violations},
          {"violations_against", "forward Pinsker D >= 2 TV^2"},
          {"ratio_vs_qmin", std::move(by_qmin)},
          {"config_hash", r.config_hash}};
}

/// instance, qmin, dbar, kl, tv, ratio (empty ratio for excluded instances)
inline std::string scatter_csv(const ProbeReport& r) {
  std::ostringstream os;
  os << "instance,qmin,dbar,kl,tv,ratio\n";
  for (const auto& pt : r.scatter) {
    os << pt.instance << ',' << exact_decimal(pt.q_min) << ',' << exact_decimal(pt.dbar) << ','
       << exact_decimal(pt.kl) << ',' << exact_decimal(pt.tv) << ',';
    if (!pt.excluded) os << exact_decimal(pt.ratio);
    os << '\n';
  }
  return os.str();
}

}  // namespace lmdetect
