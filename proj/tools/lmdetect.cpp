// lmdetect: train Markov models, score text, run detection experiments,
// compute transport distances and bounds, probe the conjectures.
//
//   lmdetect <command> [options] [--config FILE] [--out DIR] [--workers N]
//   lmdetect --config DIR/config.json [--out OTHER]     (rerun a recorded run)
//
// Every run writes its outputs plus config.json (resolved options, enough
// to reproduce the run) and meta.json (timestamps, argv) into the output
// directory: --out, else $LMDETECT_OUT, else ./lmdetect-out. report, which
// summarizes a directory in place, writes report.config.json and
// report.meta.json instead.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 invalid argument or usage,
// 3 I/O, 4 invalid text, 5 unseen context, 6 support violation,
// 7 convergence, 8 capacity, 9 inapplicable bound.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lmdetect.hpp"
#include "options.hpp"

namespace fs = std::filesystem;
using namespace lmdetect;
using lmdetect::cli::OptionRegistry;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Output {
  fs::path dir;
  std::vector<std::string> files;

  void write(const std::string& name, std::string_view content) {
    write_file((dir / name).string(), content);
    files.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, dump(j)); }
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MarkovModel binary_iid(double p0) { return MarkovModel::iid(Categorical({p0, 1.0 - p0}, 1e-12)); }

void require_same_alphabet(const MarkovModel& p, const MarkovModel& q) {
  require(p.alphabet().symbols() == q.alphabet().symbols(), "models P and Q use different alphabets");
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus;
  std::size_t order = 1;
  std::string scheme = "char";
  double smoothing = 0.0;
  std::size_t vocab_cap = 50000;
};

void cmd_train(const TrainArgs& a, Output& out) {
  require(!a.corpus.empty(), "train: --corpus is required");
  const Scheme scheme = parse_scheme(a.scheme);
  TokenizeOptions topt;
  topt.vocab_cap = a.vocab_cap;
  const auto t = tokenize(read_file(a.corpus), scheme, topt);
  const auto model = fit_empirical(t.alphabet, t.tokens, a.order, a.smoothing);
  out.write_json("model.json", model_to_json(model, scheme));
  out.write_json("train_summary.json", {{"tokens", t.tokens.size()},
                                        {"alphabet_size", t.alphabet.size()},
                                        {"order", a.order},
                                        {"scheme", to_string(scheme)},
                                        {"distinct_contexts", model.row_count()},
                                        {"smoothing", a.smoothing}});
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string model;
  std::string text;
  std::string reference;
};

Json score_record(const MarkovModel& model, const TokenSeq& tokens) {
  const double ll = log_likelihood(model, tokens);
  const double ce = -ll / static_cast<double>(tokens.size());
  return {{"log_likelihood", ll}, {"cross_entropy_per_token", ce}, {"perplexity", std::exp(ce)}};
}

void cmd_score(const ScoreArgs& a, Output& out) {
  require(!a.model.empty() && !a.text.empty(), "score: --model and --text are required");
  const auto mf = load_model(a.model);
  const auto tokens = encode(read_file(a.text), mf.scheme, mf.model.alphabet());
  if (tokens.empty()) fail(ErrorKind::invalid_text, "score: text has no tokens");
  Json j = score_record(mf.model, tokens);
  j["tokens"] = tokens.size();
  j["scheme"] = to_string(mf.scheme);
  if (!a.reference.empty()) {
    const auto rf = load_model(a.reference);
    require(rf.scheme == mf.scheme, "score: reference model uses a different tokenizer scheme");
    const auto rtokens = encode(read_file(a.text), rf.scheme, rf.model.alphabet());
    const Json r = score_record(rf.model, rtokens);
    const double diff = j["cross_entropy_per_token"].get<double>() - r["cross_entropy_per_token"].get<double>();
    j["reference"] = r;
    j["cross_entropy_difference"] = diff;
    j["perplexity_ratio"] = j["perplexity"].get<double>() / r["perplexity"].get<double>();
    j["exp_cross_entropy_difference"] = std::exp(diff);
  }
  out.write_json("score.json", j);
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
  std::string model_p;
  std::string model_q;
  std::string text;
  double epsilon = 0.05;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
};

Json rate_or_null(const MarkovModel& a, const MarkovModel& b) {
  try {
    return number_or_null(kl_rate(a, b));
  } catch (const Error&) {
    return nullptr;
  }
}

void cmd_detect(const DetectArgs& a, Output& out, std::size_t workers) {
  require(!a.model_p.empty() && !a.model_q.empty() && !a.text.empty(),
          "detect: --model-p, --model-q and --text are required");
  const auto pf = load_model(a.model_p);
  const auto qf = load_model(a.model_q);
  require_same_alphabet(pf.model, qf.model);
  const auto tokens = encode(read_file(a.text), pf.scheme, pf.model.alphabet());
  if (tokens.empty()) fail(ErrorKind::invalid_text, "detect: text has no tokens");
  const auto stat = lrt_statistic(pf.model, qf.model, tokens);
  if (stat.violation == SupportSide::both) {
    fail(ErrorKind::support, "detect: text has probability zero under both models");
  }
  HypotestOptions hopt;
  hopt.workers = workers;
  const auto thr = np_threshold(pf.model, qf.model, tokens.size(), a.epsilon, a.trials, a.seed, hopt);
  const bool forced = stat.violation != SupportSide::none;
  const bool authentic = detail::at_or_above(stat.value, thr.threshold);
  out.write_json("detect.json", {{"tokens", tokens.size()},
                                 {"statistic", number_or_null(stat.value)},
                                 {"support_violation", to_string(stat.violation)},
                                 {"forced", forced},
                                 {"threshold", to_json(thr)},
                                 {"verdict", authentic ? "authentic" : "generated"},
                                 {"kl_rate_pq", rate_or_null(pf.model, qf.model)},
                                 {"kl_rate_qp", rate_or_null(qf.model, pf.model)}});
}

// ---------------------------------------------------------------------------
// exponent

struct ExponentArgs {
  std::string model_p;
  std::string model_q;
  double pair_p = 0.5;  // i.i.d. binary pair used when no models are given
  double pair_q = 0.9;
  double epsilon = 0.1;
  std::vector<std::size_t> n_grid{500, 1000, 2000, 4000};
  std::size_t trials = 20000;
  std::string estimator = "importance";
  std::uint64_t seed = 1;
};

void cmd_exponent(const ExponentArgs& a, Output& out, std::size_t workers) {
  MarkovModel p, q;
  if (a.model_p.empty() && a.model_q.empty()) {
    p = binary_iid(a.pair_p);
    q = binary_iid(a.pair_q);
  } else {
    require(!a.model_p.empty() && !a.model_q.empty(), "exponent: give both --model-p and --model-q, or neither");
    p = load_model(a.model_p).model;
    q = load_model(a.model_q).model;
    require_same_alphabet(p, q);
  }
  MissEstimator est;
  if (a.estimator == "importance") {
    est = MissEstimator::importance;
  } else if (a.estimator == "direct") {
    est = MissEstimator::direct;
  } else {
    fail(ErrorKind::invalid_argument, "exponent: --estimator must be 'importance' or 'direct'");
  }
  HypotestOptions hopt;
  hopt.workers = workers;
  const auto fit = exponent_fit(p, q, a.epsilon, a.n_grid, a.trials, a.seed, est, hopt);
  out.write_json("exponent.json", to_json(fit));
  out.write("outcomes.csv", outcomes_csv(fit));
  out.write("exponent.dat", exponent_plot(fit));
  std::ostringstream gp;
  gp << "# gnuplot script: -ln beta against n with the fitted and theoretical lines\n"
     << "set xlabel 'n'\nset ylabel '-ln beta'\n"
     << "plot 'exponent.dat' using 1:2 with points title 'measured', \\\n"
     << "     " << exact_decimal(fit.intercept) << " + " << exact_decimal(fit.slope) << "*x title 'fit', \\\n"
     << "     " << exact_decimal(fit.theory) << "*x title 'kl rate'\n";
  out.write("exponent.gp", gp.str());
}

// ---------------------------------------------------------------------------
// dbar

struct DbarArgs {
  std::vector<double> mu;
  std::vector<double> nu;
  std::string mu_model;
  std::string nu_model;
  std::size_t alphabet_size = 0;  // 0: infer from |mu| and m
  std::size_t m = 1;
};

void cmd_dbar(const DbarArgs& a, Output& out) {
  require(a.m >= 1, "dbar: --m must be >= 1");
  Categorical mu, nu;
  Alphabet alphabet;
  if (!a.mu_model.empty() || !a.nu_model.empty()) {
    require(!a.mu_model.empty() && !a.nu_model.empty(), "dbar: give both --mu-model and --nu-model");
    const auto mf = load_model(a.mu_model), nf = load_model(a.nu_model);
    require_same_alphabet(mf.model, nf.model);
    alphabet = mf.model.alphabet();
    mu = window_distribution(mf.model, a.m);
    nu = window_distribution(nf.model, a.m);
  } else {
    require(!a.mu.empty() && a.mu.size() == a.nu.size(), "dbar: --mu and --nu must be lists of equal length");
    std::size_t n = a.alphabet_size;
    if (n == 0) {
      n = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(a.mu.size()), 1.0 / a.m)));
    }
    require(n >= 2 && atom_count(n, a.m) == a.mu.size(), "dbar: list length is not |A|^m");
    mu = Categorical(a.mu, 1e-9);
    nu = Categorical(a.nu, 1e-9);
    alphabet = Alphabet::synthetic(n);
  }
  const auto r = dbar_exact(mu, nu, alphabet.size(), a.m);
  Json j = to_json(r);
  j["m"] = a.m;
  j["alphabet_size"] = alphabet.size();
  j["tv"] = tv(mu, nu);
  out.write_json("dbar.json", j);
  out.write("coupling.csv", coupling_csv(r.coupling, alphabet));
}

// ---------------------------------------------------------------------------
// ct-bound

struct CtBoundArgs {
  double m = 1e4;
  double nu = 0.1;
  double mu = 0.25;
  std::string profile;          // profile JSON file
  std::vector<double> gamma;    // or a hand profile
  double p = 0.0;
  std::size_t amax = 2;
  std::vector<double> hmm_flip;  // or a binary flip HMM: flip, noise
  std::size_t horizon = 10;
  std::size_t context_horizon = 10;
  std::vector<std::size_t> m_grid;  // non-empty: run the experiment instead
  std::size_t trials = 20;
  std::size_t window = 8;
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 1;
};

HiddenMarkovSource flip_source(const std::vector<double>& params) {
  require(params.size() == 2, "expected --hmm-flip FLIP,NOISE");
  return HiddenMarkovSource::binary_flip(params[0], params[1]);
}

void cmd_ct_bound(const CtBoundArgs& a, Output& out, std::size_t workers) {
  if (!a.m_grid.empty()) {
    require(!a.hmm_flip.empty(), "ct-bound: the experiment needs a source, give --hmm-flip");
    CTExperimentOptions opt;
    opt.window = a.window;
    opt.profile_horizon = a.context_horizon;
    opt.bootstrap = a.bootstrap;
    opt.workers = workers;
    const auto e = ct_experiment(flip_source(a.hmm_flip), a.m_grid, a.nu, a.mu, a.trials, a.seed, opt);
    out.write_json("ct_experiment.json", to_json(e));
    std::ostringstream csv;
    csv << "m,k,dbar_mean,ci_low,ci_high,bound,violation_rate\n";
    for (const auto& r : e.rows) {
      csv << r.m << ',' << r.k << ',' << exact_decimal(r.dbar_mean) << ',' << exact_decimal(r.ci_low) << ','
          << exact_decimal(r.ci_high) << ',' << (r.admissible ? exact_decimal(r.bound) : "") << ','
          << exact_decimal(r.violation_rate) << '\n';
    }
    out.write("ct_experiment.csv", csv.str());
    return;
  }
  ContinuityProfile prof;
  const int sources = !a.profile.empty() + !a.gamma.empty() + !a.hmm_flip.empty();
  require(sources == 1, "ct-bound: give exactly one of --profile, --gamma (with --p), --hmm-flip");
  if (!a.profile.empty()) {
    prof = profile_from_json(parse_json(read_file(a.profile), "profile '" + a.profile + "'"));
  } else if (!a.gamma.empty()) {
    prof.gamma = a.gamma;
    prof.p_floor = a.p;
    prof.amax = a.amax;
    for (double g : prof.gamma) prof.gamma_sum += g;
    prof.validate();
    prof.alpha = alpha_coeff(prof);
  } else {
    prof = continuity_profile(flip_source(a.hmm_flip), a.horizon, std::max(a.horizon, a.context_horizon));
  }
  const auto b = ct_bound({a.m, a.nu, a.mu, prof});
  Json j = to_json(b);
  j["m"] = a.m;
  j["nu"] = a.nu;
  j["mu"] = a.mu;
  out.write_json("ct_bound.json", j);
  out.write_json("profile.json", to_json(prof));
}

// ---------------------------------------------------------------------------
// probe

struct ProbeArgs {
  int conjecture = 1;
  std::size_t alphabet_size = 2;
  std::size_t m = 1;
  std::size_t instances = 1000;
  std::string sampler = "dirichlet-uniform";
  std::uint64_t seed = 1;
  std::vector<double> hmm_flip{0.1, 0.2};
  std::size_t m_train = 100000;
  double nu = 0.1;
  double mu = 0.25;
  double k_hat = 1.0;
  std::size_t window = 12;
  std::size_t windows = 20000;
};

void cmd_probe(const ProbeArgs& a, Output& out, std::size_t workers) {
  if (a.conjecture == 2) {
    Conjecture2Options opt;
    opt.window = a.window;
    opt.windows = a.windows;
    const auto r = conjecture2_eval(flip_source(a.hmm_flip), a.m_train, a.nu, a.mu, a.k_hat, a.seed, opt);
    out.write_json("conjecture2.json", to_json(r));
    return;
  }
  require(a.conjecture == 1, "probe: --conjecture must be 1 or 2");
  const auto r = conjecture1_probe(a.alphabet_size, a.m, a.instances, parse_sampler(a.sampler), a.seed, workers);
  out.write_json("probe.json", to_json(r));
  out.write("scatter.csv", scatter_csv(r));
  std::ostringstream dat;
  dat << "# qmin ratio\n";
  for (const auto& pt : r.scatter) {
    if (!pt.excluded) dat << exact_decimal(pt.q_min) << ' ' << exact_decimal(pt.ratio) << '\n';
  }
  out.write("probe.dat", dat.str());
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string dir;  // defaults to the output directory
};

std::string fmt(const Json& v) {
  if (v.is_null()) return "-";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void cmd_report(const ReportArgs& a, Output& out) {
  const fs::path dir = a.dir.empty() ? out.dir : fs::path(a.dir);
  auto load = [&](const char* name) -> Json {
    const auto path = dir / name;
    return fs::exists(path) ? parse_json(read_file(path.string()), path.string()) : Json(nullptr);
  };
  std::ostringstream md;
  md << "# lmdetect report\n";
  int sections = 0;
  if (auto j = load("train_summary.json"); !j.is_null()) {
    ++sections;
    md << "\n## Model\n\n| tokens | alphabet | order | contexts |\n|---|---|---|---|\n| " << fmt(j["tokens"]) << " | "
       << fmt(j["alphabet_size"]) << " | " << fmt(j["order"]) << " | " << fmt(j["distinct_contexts"]) << " |\n";
  }
  if (auto j = load("score.json"); !j.is_null()) {
    ++sections;
    md << "\n## Score\n\ncross-entropy " << fmt(j["cross_entropy_per_token"]) << " nats/token, perplexity "
       << fmt(j["perplexity"]) << " over " << fmt(j["tokens"]) << " tokens\n";
  }
  if (auto j = load("detect.json"); !j.is_null()) {
    ++sections;
    md << "\n## Detection\n\nverdict **" << fmt(j["verdict"]) << "**: statistic " << fmt(j["statistic"])
       << ", threshold " << fmt(j["threshold"]["threshold"]) << " (epsilon " << fmt(j["threshold"]["epsilon"])
       << "), kl rates " << fmt(j["kl_rate_pq"]) << " / " << fmt(j["kl_rate_qp"]) << "\n";
  }
  if (auto j = load("exponent.json"); !j.is_null()) {
    ++sections;
    md << "\n## Error exponent\n\nslope " << fmt(j["slope"]) << " +- " << fmt(j["slope_stderr"]) << " against kl rate "
       << fmt(j["theory"]) << " (relative error " << fmt(j["relative_error"]) << ")\n\n| n | -ln beta |\n|---|---|\n";
    for (std::size_t i = 0; i < j["n_grid"].size(); ++i) {
      md << "| " << fmt(j["n_grid"][i]) << " | " << fmt(j["neg_log_beta"][i]) << " |\n";
    }
  }
  if (auto j = load("dbar.json"); !j.is_null()) {
    ++sections;
    md << "\n## d-bar\n\nd-bar " << fmt(j["value"]) << " (m = " << fmt(j["m"]) << ", tv " << fmt(j["tv"])
       << ", dual gap " << fmt(Json(std::abs(j["value"].get<double>() - j["dual_value"].get<double>()))) << ")\n";
  }
  if (auto j = load("ct_bound.json"); !j.is_null()) {
    ++sections;
    md << "\n## Csiszar-Talata bound\n\nbound " << fmt(j["value"]) << " at m = " << fmt(j["m"]) << ", k = " << fmt(j["k"])
       << " (approximation " << fmt(j["approximation_term"]) << ", sampling " << fmt(j["sampling_term"]) << ")\n";
  }
  if (auto j = load("ct_experiment.json"); !j.is_null()) {
    ++sections;
    md << "\n## Csiszar-Talata experiment\n\n| m | k | d-bar | 95% CI | bound | violations |\n|---|---|---|---|---|---|\n";
    for (const auto& r : j["rows"]) {
      md << "| " << fmt(r["m"]) << " | " << fmt(r["k"]) << " | " << fmt(r["dbar_mean"]) << " | [" << fmt(r["ci_low"])
         << ", " << fmt(r["ci_high"]) << "] | " << fmt(r["bound"]) << " | " << fmt(r["violation_rate"]) << " |\n";
    }
  }
  if (auto j = load("probe.json"); !j.is_null()) {
    ++sections;
    md << "\n## Conjecture 1 probe\n\n" << fmt(j["instance_count"]) << " instances (|A| = " << fmt(j["alphabet_size"])
       << ", m = " << fmt(j["m"]) << ", " << fmt(j["sampler"]) << "), sup D/d-bar^2 = " << fmt(j["sup_ratio"])
       << ", " << fmt(j["degenerate"]) << " excluded, forward Pinsker violations " << fmt(j["violations"]) << "\n";
  }
  if (auto j = load("conjecture2.json"); !j.is_null()) {
    ++sections;
    md << "\n## Conjecture 2\n\nd estimate " << fmt(j["d_estimate"]) << " +- " << fmt(j["standard_error"])
       << " against K (inner)^2 = " << fmt(j["rhs"]) << ": " << (j["consistent"].get<bool>() ? "consistent" : "not consistent")
       << "\n";
  }
  if (sections == 0) fail(ErrorKind::io, "report: no lmdetect outputs found in '" + dir.string() + "'");
  out.write("report.md", md.str());
  std::cout << md.str();
}

// ---------------------------------------------------------------------------

struct ConfigScan {
  std::string path;
  bool has_command = false;
};

ConfigScan scan_argv(const std::vector<std::string>& args, const std::vector<std::string>& commands) {
  ConfigScan s;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) s.path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) s.path = args[i].substr(9);
    if (std::find(commands.begin(), commands.end(), args[i]) != commands.end()) s.has_command = true;
  }
  return s;
}

int run(std::vector<std::string> args) {
  CLI::App app{"lmdetect: detection of generated text with Markov models and information measures", "lmdetect"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::size_t workers = default_workers();
  app.add_option("--config", config_path, "JSON config; command-line flags take precedence");
  app.add_option("--out", out_dir, "output directory (default $LMDETECT_OUT or ./lmdetect-out)");
  app.add_option("--workers", workers, "worker threads; results do not depend on this")->capture_default_str();

  TrainArgs train;
  ScoreArgs score;
  DetectArgs detect;
  ExponentArgs exponent;
  DbarArgs dbar;
  CtBoundArgs ctb;
  ProbeArgs probe;
  ReportArgs report;
  std::map<std::string, OptionRegistry> registries;
  auto command = [&](const std::string& name, const std::string& help) -> OptionRegistry& {
    return registries.emplace(name, OptionRegistry(app.add_subcommand(name, help))).first->second;
  };

  auto& r_train = command("train", "fit an empirical order-k Markov model to a corpus");
  r_train.add("corpus", train.corpus, "training text file");
  r_train.add("order", train.order, "Markov order k");
  r_train.add("scheme", train.scheme, "tokenizer: byte, char or word");
  r_train.add("smoothing", train.smoothing, "additive smoothing delta in [0, 1]");
  r_train.add("vocab-cap", train.vocab_cap, "word scheme: alphabet cap including <unk> (0 = none)");

  auto& r_score = command("score", "log-likelihood, cross-entropy and perplexity of a text");
  r_score.add("model", score.model, "model file");
  r_score.add("text", score.text, "text file");
  r_score.add("reference", score.reference, "second model for a perplexity ratio");

  auto& r_detect = command("detect", "likelihood-ratio verdict: authentic (P) or generated (Q)");
  r_detect.add("model-p", detect.model_p, "authentic-text model P");
  r_detect.add("model-q", detect.model_q, "generator model Q");
  r_detect.add("text", detect.text, "text file to classify");
  r_detect.add("epsilon", detect.epsilon, "false-alarm level");
  r_detect.add("trials", detect.trials, "Monte Carlo calibration samples");
  r_detect.add("seed", detect.seed, "random seed");

  auto& r_exp = command("exponent", "fit the miss-probability exponent against n");
  r_exp.add("model-p", exponent.model_p, "model P (omit both models for an i.i.d. binary pair)");
  r_exp.add("model-q", exponent.model_q, "model Q");
  r_exp.add("pair-p", exponent.pair_p, "binary pair: P(symbol 0) under P");
  r_exp.add("pair-q", exponent.pair_q, "binary pair: P(symbol 0) under Q");
  r_exp.add("epsilon", exponent.epsilon, "false-alarm level");
  r_exp.add("n-grid", exponent.n_grid, "sequence lengths, comma separated");
  r_exp.add("trials", exponent.trials, "samples per grid point");
  r_exp.add("estimator", exponent.estimator, "miss estimator: importance or direct");
  r_exp.add("seed", exponent.seed, "random seed");

  auto& r_dbar = command("dbar", "exact Ornstein d-bar between two laws over A^m");
  r_dbar.add("mu", dbar.mu, "law over A^m as a comma separated list (base-|A| order)");
  r_dbar.add("nu", dbar.nu, "second law over A^m");
  r_dbar.add("mu-model", dbar.mu_model, "or: model whose stationary m-window law is mu");
  r_dbar.add("nu-model", dbar.nu_model, "model for nu");
  r_dbar.add("alphabet-size", dbar.alphabet_size, "|A| (0: infer from the list length)");
  r_dbar.add("m", dbar.m, "string length");

  auto& r_ct = command("ct-bound", "Csiszar-Talata bound, or the experiment against it with --m-grid");
  r_ct.add("m", ctb.m, "training length");
  r_ct.add("nu", ctb.nu, "order growth, k = round(nu ln m)");
  r_ct.add("mu", ctb.mu, "exponent parameter in (0, 1/2)");
  r_ct.add("profile", ctb.profile, "continuity profile JSON");
  r_ct.add("gamma", ctb.gamma, "hand profile gamma(1..K)");
  r_ct.add("p", ctb.p, "hand profile non-nullness p");
  r_ct.add("amax", ctb.amax, "hand profile alphabet size");
  r_ct.add("hmm-flip", ctb.hmm_flip, "binary flip HMM source: flip,noise");
  r_ct.add("horizon", ctb.horizon, "gamma(k) computed for k = 1..horizon");
  r_ct.add("context-horizon", ctb.context_horizon, "context length for the sups");
  r_ct.add("m-grid", ctb.m_grid, "experiment: training lengths");
  r_ct.add("trials", ctb.trials, "experiment: trials per m");
  r_ct.add("window", ctb.window, "experiment: d-bar window length");
  r_ct.add("bootstrap", ctb.bootstrap, "experiment: bootstrap resamples");
  r_ct.add("seed", ctb.seed, "random seed");

  auto& r_probe = command("probe", "probe conjecture 1 (D against d-bar^2) or 2 (divergence bound)");
  r_probe.add("conjecture", probe.conjecture, "1 or 2");
  r_probe.add("alphabet-size", probe.alphabet_size, "conjecture 1: |A|");
  r_probe.add("m", probe.m, "conjecture 1: string length");
  r_probe.add("instances", probe.instances, "conjecture 1: random pairs");
  r_probe.add("sampler", probe.sampler, "conjecture 1: dirichlet-uniform or boundary-biased");
  r_probe.add("seed", probe.seed, "random seed");
  r_probe.add("hmm-flip", probe.hmm_flip, "conjecture 2: binary flip HMM source flip,noise");
  r_probe.add("m-train", probe.m_train, "conjecture 2: training length");
  r_probe.add("nu", probe.nu, "conjecture 2: order growth");
  r_probe.add("mu", probe.mu, "conjecture 2: exponent parameter");
  r_probe.add("k-hat", probe.k_hat, "conjecture 2: constant K");
  r_probe.add("window", probe.window, "conjecture 2: window length");
  r_probe.add("windows", probe.windows, "conjecture 2: sampled windows");

  auto& r_report = command("report", "summarize the outputs in a directory as markdown");
  r_report.add("dir", report.dir, "directory to summarize (default: the output directory)");

  std::vector<std::string> names;
  for (const auto& [name, reg] : registries) names.push_back(name);

  // config values become the defaults, so explicit flags win
  const auto scan = scan_argv(args, names);
  Json config = Json::object();
  if (!scan.path.empty()) {
    config = parse_json(read_file(scan.path), "config '" + scan.path + "'");
    require(config.is_object(), "config must be a JSON object");
    if (!scan.has_command) {
      require(config.contains("command"), "config has no \"command\" and none was given");
      args.push_back(config["command"].get<std::string>());
    }
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    std::string chosen;
    for (const auto& a : args) {
      if (registries.count(a)) {
        chosen = a;
        break;
      }
    }
    if (!chosen.empty() && !config.empty()) {
      if (config.contains("command")) {
        require(config["command"].get<std::string>() == chosen,
                "config is for '" + config["command"].get<std::string>() + "', not '" + chosen + "'");
      }
      const auto unknown = registries.at(chosen).load(config);
      require(unknown.empty(), "config: unknown key '" + (unknown.empty() ? "" : unknown.front()) + "'");
    }
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const OptionRegistry& reg = registries.at(name);

  if (out_dir.empty()) {
    const char* env = std::getenv("LMDETECT_OUT");
    out_dir = env && *env ? env : "lmdetect-out";
  }
  Output out{fs::path(out_dir), {}};
  fs::create_directories(out.dir);
  require(workers >= 1, "--workers must be >= 1");

  const std::string started = utc_now();
  if (name == "train") cmd_train(train, out);
  else if (name == "score") cmd_score(score, out);
  else if (name == "detect") cmd_detect(detect, out, workers);
  else if (name == "exponent") cmd_exponent(exponent, out, workers);
  else if (name == "dbar") cmd_dbar(dbar, out);
  else if (name == "ct-bound") cmd_ct_bound(ctb, out, workers);
  else if (name == "probe") cmd_probe(probe, out, workers);
  else if (name == "report") cmd_report(report, out);

  Json resolved = reg.dump();
  resolved["command"] = name;
  const std::string config_text = dump(resolved);
  // report summarizes a directory in place; keep the summarized run's record
  const std::string prefix = name == "report" ? "report." : "";
  write_file((out.dir / (prefix + "config.json")).string(), config_text);
  Json argv_json = args;
  write_file((out.dir / (prefix + "meta.json")).string(), dump({{"command", name},
                                                     {"argv", argv_json},
                                                     {"started", started},
                                                     {"finished", utc_now()},
                                                     {"version", kVersion},
                                                     {"workers", workers},
                                                     {"outputs", out.files},
                                                     {"config_hash", git_blob_hash(config_text)}}));
  for (const auto& f : out.files) std::cerr << "wrote " << (out.dir / f).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv, argv + argc));
  } catch (const Error& e) {
    std::cerr << "lmdetect: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lmdetect: " << e.what() << '\n';
    return 1;
  }
}
