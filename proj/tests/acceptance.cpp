// Acceptance run: one PASS/FAIL line per criterion, with the measured
// quantities alongside. Exit status is nonzero only for unexpected failures;
// criteria listed in kKnownUnattainable are reported as FAIL but tolerated.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lmdetect.hpp"
#include "support/oracles.hpp"

using namespace lmdetect;
namespace fs = std::filesystem;

namespace {

// Stein slope on the short grid sits 9% under D for the non-randomized test;
// see the decisions notes.
const std::set<int> kKnownUnattainable = {2};

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

std::vector<double> vec(const Categorical& c) { return {c.probs().begin(), c.probs().end()}; }

Categorical random_law(Rng& rng, std::size_t dim, double conc = 1.0) {
  return Categorical::normalized(dirichlet(rng, dim, conc));
}

// Running tally of forward Pinsker checks across every sweep in the run.
struct PinskerTally {
  std::size_t checked = 0;
  std::size_t violated = 0;
  void add(const Categorical& p, const Categorical& q) {
    ++checked;
    violated += forward_pinsker_holds(p, q) ? 0 : 1;
  }
} pinsker;

// ---------------------------------------------------------------------------

Verdict ac1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double e_cross = 0.0, e_ratio = 0.0, e_exp = 0.0;
  for (std::size_t i = 0; i < 10000; ++i) {
    const std::size_t dim = 2 + rng.below(9);
    const auto p = random_law(rng, dim);
    const auto q = random_law(rng, dim);
    const auto r = random_law(rng, dim);
    const double h = entropy(p), hq = cross_entropy(p, q), d = kl(p, q);
    e_cross = std::max(e_cross, std::abs(hq - (h + d)));
    const double want = std::exp(hq - cross_entropy(p, r));
    e_ratio = std::max(e_ratio, std::abs(perplexity_ratio(p, q, r) - want) / want);
    e_exp = std::max(e_exp, std::abs(exponent_from_metrics(hq, h) - d));
    pinsker.add(p, q);
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = e_cross <= 1e-12 && e_ratio <= 1e-9 && e_exp <= 1e-12 && secs < 10.0;
  v.detail = "max |H(P,Q)-H-D| " + fmt(e_cross, 3) + ", max rel ppl-ratio err " + fmt(e_ratio, 3) +
             ", max |exponent-D| " + fmt(e_exp, 3) + ", " + fmt(secs, 3) + " s";
  return v;
}

Verdict ac2() {
  const auto t0 = Clock::now();
  const auto p = MarkovModel::iid(Categorical({0.5, 0.5}));
  const auto q = MarkovModel::iid(Categorical({0.9, 0.1}));
  const std::vector<std::size_t> grid = {50, 100, 200, 400};
  const auto fit = exponent_fit(p, q, 0.1, grid, 1000000, 2024);
  const double d = 0.5 * std::log(25.0 / 9.0);

  // exact non-randomized -ln beta on the same grid
  std::vector<double> xs, ys;
  double worst = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double exact = -oracle::binary_np_log_beta(grid[j], 0.1, 0.5, 0.9);
    xs.push_back(static_cast<double>(grid[j]));
    ys.push_back(exact);
    worst = std::max(worst, std::abs(-fit.outcomes[j].log_beta_hat - exact));
  }
  const double exact_slope = least_squares(xs, ys).slope;
  const double rel = (fit.slope - d) / d;
  Verdict v;
  v.pass = std::abs(rel) <= 0.05 && std::abs(fit.theory - d) < 1e-12;
  v.detail = "slope " + fmt(fit.slope) + " vs D " + fmt(d) + " (" + fmt(100 * rel, 3) +
             "%); exact-oracle slope " + fmt(exact_slope) + " (" + fmt(100 * (exact_slope - d) / d, 3) +
             "%); max |IS - exact| " + fmt(worst, 3) + " nats; " + fmt(seconds_since(t0), 3) + " s";
  return v;
}

Verdict ac3() {
  const auto t0 = Clock::now();
  Rng rng(303);
  auto draw_chain = [&] {
    const double a = 0.1 + 0.8 * rng.uniform(), b = 0.1 + 0.8 * rng.uniform();
    return MarkovModel::order1({{a, 1 - a}, {b, 1 - b}});
  };
  MarkovModel p, q;
  double d = 0.0;
  do {
    p = draw_chain();
    q = draw_chain();
    d = kl_rate(p, q);
  } while (d < 0.05);
  std::vector<std::size_t> grid;
  for (double c : {100.0, 200.0, 400.0, 800.0}) grid.push_back(static_cast<std::size_t>(std::llround(c / d)));
  const auto fit = exponent_fit(p, q, 0.1, grid, 20000, 3030);

  // kl_rate cross-check from the linear-algebra stationary law
  auto matrix = [](const MarkovModel& m) {
    return std::vector<std::vector<double>>{m.row(0).dense(2), m.row(1).dense(2)};
  };
  const auto tp = matrix(p), tq = matrix(q);
  const auto pi = oracle::stationary_linear(tp);
  double d_oracle = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) d_oracle += pi[i] * tp[i][j] * std::log(tp[i][j] / tq[i][j]);
  }
  const double rel = (fit.slope - d) / d;
  Verdict v;
  v.pass = std::abs(rel) <= 0.10 && std::abs(d - d_oracle) < 1e-10;
  v.detail = "P rows (" + fmt(tp[0][0], 4) + ", " + fmt(tp[1][0], 4) + "), Q rows (" + fmt(tq[0][0], 4) + ", " +
             fmt(tq[1][0], 4) + "); kl_rate " + fmt(d) + " (oracle diff " + fmt(std::abs(d - d_oracle), 3) +
             "); slope " + fmt(fit.slope) + " (" + fmt(100 * rel, 3) + "%); " + fmt(seconds_since(t0), 3) + " s";
  return v;
}

Verdict ac4() {
  const Categorical pl({0.5, 0.5}), ql({0.9, 0.1});
  const auto p = MarkovModel::iid(pl), q = MarkovModel::iid(ql);
  HypotestOptions mc;
  mc.force_monte_carlo = true;
  bool ok = true;
  std::string detail;
  for (std::size_t n : {10, 25, 50}) {
    const auto b = bayes_error(p, q, n, 0.5, 200000, 404 + n, mc);
    ok = ok && b.bound_holds && b.estimate <= b.chernoff_bound + 3 * b.standard_error;
    detail += "n=" + std::to_string(n) + ": " + fmt(b.estimate, 4) + " <= " + fmt(b.chernoff_bound, 4) + "; ";
  }
  double worst = 0.0;
  Rng rng(44);
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t dim = 2 + rng.below(5);
    const auto a = random_law(rng, dim), b = random_law(rng, dim);
    worst = std::max(worst, std::abs(chernoff(a, b).value - oracle::chernoff_grid(vec(a), vec(b), 1e-5)));
  }
  const double pair = std::abs(chernoff(pl, ql).value -
                               oracle::chernoff_grid({0.5, 0.5}, {0.9, 0.1}, 1e-5));
  worst = std::max(worst, pair);
  Verdict v;
  v.pass = ok && worst <= 1e-5;
  v.detail = detail + "max |C - grid C| " + fmt(worst, 3) + " over 201 pairs";
  return v;
}

Verdict ac5() {
  Rng rng(505);
  std::vector<std::pair<TokenSeq, std::vector<double>>> rows;
  std::vector<std::pair<TokenSeq, double>> init;
  for (Symbol a = 0; a < 3; ++a) {
    for (Symbol b = 0; b < 3; ++b) {
      auto w = dirichlet(rng, 3, 1.0);
      for (double& x : w) x = 0.05 + 0.85 * x;
      rows.push_back({{a, b}, w});
      init.push_back({{a, b}, 1.0 / 9.0});
    }
  }
  const auto truth = MarkovModel::from_dense(Alphabet::synthetic(3), 2, rows, init);
  const auto seq = sample(truth, 1000000, 5050);
  const auto fitted = fit_empirical(Alphabet::synthetic(3), seq, 2);
  double linf = 0.0;
  for (std::uint64_t c = 0; c < 9; ++c) {
    for (Symbol a = 0; a < 3; ++a) linf = std::max(linf, std::abs(fitted.row(c).prob(a) - truth.row(c).prob(a)));
  }
  const auto hand = fit_empirical(Alphabet::synthetic(2), TokenSeq{0, 0, 1, 0, 1}, 1);
  const bool exact = hand.row(0).prob(0) == 1.0 / 3.0 && hand.row(0).prob(1) == 2.0 / 3.0 &&
                     hand.row(1).prob(0) == 1.0 && hand.row(1).prob(1) == 0.0;
  Verdict v;
  v.pass = linf <= 0.02 && exact;
  v.detail = "order-2 |A|=3, 1e6 tokens: max row error " + fmt(linf, 4) + "; \"aabab\" k=1 rows " +
             (exact ? "exact (1/3, 2/3 | 1, 0)" : "WRONG");
  return v;
}

Verdict ac6() {
  Rng rng(606);
  double worst_lp = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t m = 1 + i % 5;
    const std::size_t atoms = std::size_t{1} << m;
    const auto mu = random_law(rng, atoms, i % 2 ? 1.0 : 0.3);
    const auto nu = random_law(rng, atoms, i % 2 ? 1.0 : 0.3);
    const double got = dbar_exact(mu, nu, 2, m).value;
    worst_lp = std::max(worst_lp, std::abs(got - oracle::dbar_lp(vec(mu), vec(nu), 2, m)));
    pinsker.add(mu, nu);
  }
  std::size_t tv_mismatch = 0;
  double tv_worst = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::size_t dim = 2 + rng.below(6);
    const auto p = random_law(rng, dim), q = random_law(rng, dim);
    const double d = dbar_exact(p, q, dim, 1).value, t = tv(p, q);
    tv_mismatch += d != t;
    tv_worst = std::max(tv_worst, std::abs(d - t));
  }
  double worst_axiom = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t m = 1 + i % 4;
    const std::size_t atoms = std::size_t{1} << m;
    const auto x = random_law(rng, atoms), y = random_law(rng, atoms), z = random_law(rng, atoms);
    const double xy = dbar_exact(x, y, 2, m).value, yx = dbar_exact(y, x, 2, m).value;
    const double yz = dbar_exact(y, z, 2, m).value, xz = dbar_exact(x, z, 2, m).value;
    const double xx = dbar_exact(x, x, 2, m).value;
    worst_axiom = std::max({worst_axiom, std::abs(xx), std::abs(xy - yx), std::max(0.0, xz - xy - yz)});
  }
  Verdict v;
  // the solver sums flow * cost in another order than tv(), so agreement is
  // to the last bit or so rather than bitwise
  v.pass = worst_lp <= 1e-9 && tv_worst <= 1e-15 && worst_axiom <= 1e-9;
  v.detail = "max |dbar - LP| " + fmt(worst_lp, 3) + " (100 instances, m<=5); m=1 vs TV: " +
             std::to_string(tv_mismatch) + "/1000 not bit-identical, max diff " + fmt(tv_worst, 3) +
             "; metric axioms max defect " + fmt(worst_axiom, 3);
  return v;
}

// Marton and reverse Pinsker here; the forward Pinsker tally is closed in main.
Verdict ac7_sweeps() {
  Rng rng(707);
  std::size_t marton_fail = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    const std::size_t m = 1 + i % 5;
    const auto p = random_law(rng, 2), q = random_law(rng, 2);
    const Categorical mu(oracle::product_power(vec(p), m), 1e-9);
    const Categorical nu(oracle::product_power(vec(q), m), 1e-9);
    marton_fail += marton_check(mu, nu, 2, m, 0.0).holds ? 0 : 1;
    pinsker.add(p, q);
  }
  std::size_t rp_fail = 0, rp_checked = 0;
  double rp_sup = 0.0;
  while (rp_checked < 100000) {
    const std::size_t dim = 2 + rng.below(5);
    const auto p = random_law(rng, dim), q = random_law(rng, dim);
    if (q.min() < 0.05) continue;
    ++rp_checked;
    const auto r = reverse_pinsker_check(p, q, NormConvention::l1);
    rp_fail += r.holds ? 0 : 1;
    rp_sup = std::max(rp_sup, r.ratio);
    pinsker.add(p, q);
  }
  Verdict v;
  v.pass = marton_fail == 0 && rp_fail == 0;
  v.detail = "Marton u=0: " + std::to_string(marton_fail) + "/10000 violations; reverse Pinsker (l1, Qmin>=0.05): " +
             std::to_string(rp_fail) + "/100000 violations, sup D/(|P-Q|^2/Qmin) " + fmt(rp_sup, 4);
  return v;
}

Verdict ac8() {
  const auto t0 = Clock::now();
  ContinuityProfile prof;
  prof.gamma = {0.1, 0.0, 0.0};
  prof.amax = 2;
  prof.p_floor = 0.2;
  const auto b = ct_bound({1e4, 0.1, 0.25, prof});
  const bool hand = std::abs(b.value - 7.9125) <= 1e-9;

  const auto src = HiddenMarkovSource::binary_flip(0.1, 0.2);
  const std::vector<std::size_t> m_grid = {1000, 10000, 100000};
  const auto exp = ct_experiment(src, m_grid, 0.25, 0.25, 20, 808);
  std::string rows;
  for (const auto& r : exp.rows) {
    rows += " m=" + std::to_string(r.m) + " k=" + std::to_string(r.k) + " dbar " + fmt(r.dbar_mean, 4) + " [" +
            fmt(r.ci_low, 4) + ", " + fmt(r.ci_high, 4) + "];";
  }
  Verdict v;
  v.pass = hand && exp.nonincreasing_within_ci();
  v.detail = "ct_bound " + fmt(b.value, 12) + " (k=" + std::to_string(b.k) + ");" + rows + " " +
             fmt(seconds_since(t0), 3) + " s";
  return v;
}

Verdict ac9() {
  bool deterministic = true, cross = true;
  std::string detail;
  for (std::size_t m : {1, 2, 3}) {
    for (auto sampler : {ProbeSampler::dirichlet_uniform, ProbeSampler::boundary_biased}) {
      const std::uint64_t seed = 900 + m;
      const auto a = conjecture1_probe(2, m, 1000, sampler, seed, 1);
      const auto b = conjecture1_probe(2, m, 1000, sampler, seed, 2);
      bool same = a.config_hash == b.config_hash && a.sup_ratio == b.sup_ratio && a.argmax == b.argmax;
      for (std::size_t i = 0; same && i < a.scatter.size(); ++i) {
        same = a.scatter[i].dbar == b.scatter[i].dbar && a.scatter[i].kl == b.scatter[i].kl;
      }
      deterministic = deterministic && same;
      if (a.violations != 0) pinsker.violated += a.violations;
      pinsker.checked += a.instance_count;
      if (m == 1 && sampler == ProbeSampler::dirichlet_uniform) {
        for (const auto& pt : a.scatter) {
          if (pt.excluded) continue;
          Rng rng(derive_seed(seed, pt.instance));
          const auto p = random_law(rng, 2, 1.0), q = random_law(rng, 2, 1.0);
          const double t = tv(p, q);
          cross = cross && std::abs(pt.ratio - kl(p, q) / (t * t)) <= 1e-9 * pt.ratio;
        }
      }
      detail += "m=" + std::to_string(m) + " " + std::string(to_string(sampler)) + " sup " + fmt(a.sup_ratio, 5) +
                " (" + std::to_string(a.degenerate) + " excluded); ";
    }
  }
  Verdict v;
  v.pass = deterministic && cross;
  v.detail = detail + (deterministic ? "deterministic across workers" : "NOT deterministic") +
             (cross ? ", m=1 ratios match kl/tv^2 to 1e-9" : ", m=1 cross-check FAILED");
  return v;
}

// ---------------------------------------------------------------------------
// Reproducibility through the command-line tool

#ifdef LMDETECT_CLI
int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" LMDETECT_CLI "' " + args + " >>cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string binary_text(double p0, std::size_t n, std::uint64_t seed) {
  const auto tokens = sample(MarkovModel::iid(Categorical({p0, 1.0 - p0})), n, seed);
  std::string out;
  for (Symbol s : tokens) out += s == 0 ? 'a' : 'b';
  return out;
}

Verdict ac10() {
  const fs::path dir = fs::temp_directory_path() / "lmdetect_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file((dir / "p.txt").string(), binary_text(0.5, 4000, 1));
  write_file((dir / "q.txt").string(), binary_text(0.8, 4000, 2));
  write_file((dir / "x.txt").string(), binary_text(0.8, 300, 3));

  struct Case {
    std::string name, args;
    std::vector<std::string> outputs;
  };
  const std::vector<Case> cases = {
      {"train", "train --corpus p.txt --order 2", {"model.json", "train_summary.json"}},
      {"train", "train --corpus q.txt --order 2", {"model.json", "train_summary.json"}},
      {"score", "score --model {0}/model.json --reference {1}/model.json --text x.txt", {"score.json"}},
      {"detect", "detect --model-p {0}/model.json --model-q {1}/model.json --text x.txt --trials 2000",
       {"detect.json"}},
      {"exponent", "exponent --n-grid 100,200,400 --trials 2000", {"exponent.json", "outcomes.csv"}},
      {"dbar", "dbar --mu 0.1,0.2,0.3,0.4 --nu 0.25,0.25,0.25,0.25 --m 2", {"dbar.json", "coupling.csv"}},
      {"ct-bound", "ct-bound --m 10000 --nu 0.1 --mu 0.25 --gamma 0.1 --p 0.2 --amax 2", {"ct_bound.json"}},
      {"probe", "probe --m 2 --instances 200 --seed 5", {"probe.json", "scatter.csv"}},
      {"report", "report --dir {7}", {"report.md"}},
  };
  std::vector<std::string> first_dirs;
  std::size_t identical = 0, total = 0;
  std::string failures;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::string args = cases[i].args;
    for (std::size_t j = 0; j < first_dirs.size(); ++j) {
      const std::string key = "{" + std::to_string(j) + "}";
      for (auto pos = args.find(key); pos != std::string::npos; pos = args.find(key)) {
        args.replace(pos, key.size(), (dir / first_dirs[j]).string());
      }
    }
    const std::string a = "run" + std::to_string(i) + "a", b = "run" + std::to_string(i) + "b";
    first_dirs.push_back(a);
    const std::string config_name = cases[i].name == "report" ? "report.config.json" : "config.json";
    if (run_cli(dir, args + " --out " + a) != 0 ||
        run_cli(dir, "--config " + (dir / a / config_name).string() + " --out " + b) != 0) {
      failures += cases[i].name + " (exit) ";
      continue;
    }
    for (const auto& f : cases[i].outputs) {
      ++total;
      if (read_file((dir / a / f).string()) == read_file((dir / b / f).string())) {
        ++identical;
      } else {
        failures += cases[i].name + ":" + f + " ";
      }
    }
  }
  Verdict v;
  v.pass = failures.empty() && identical == total;
  v.detail = std::to_string(identical) + "/" + std::to_string(total) + " primary outputs byte-identical on rerun";
  if (!failures.empty()) v.detail += "; mismatches: " + failures;
  fs::remove_all(dir);
  return v;
}
#endif

}  // namespace

int main() {
  std::cout << std::unitbuf;
  const auto t0 = Clock::now();
  std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, ac1}, {2, ac2}, {3, ac3}, {4, ac4}, {5, ac5}, {6, ac6}, {7, ac7_sweeps}, {8, ac8}, {9, ac9},
  };
#ifdef LMDETECT_CLI
  criteria.push_back({10, ac10});
#endif

  std::vector<std::pair<int, Verdict>> results;
  for (auto& [id, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    if (id == 7) {
      // forward Pinsker over every sweep run so far (AC1, AC6, AC7, AC9 run after)
      v.detail += "; forward Pinsker tally so far " + std::to_string(pinsker.violated) + "/" +
                  std::to_string(pinsker.checked);
    }
    results.emplace_back(id, v);
    std::cout << "AC" << id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << '\n';
  }
  // the forward Pinsker gate covers the probes too, so it is decided last
  const bool pinsker_ok = pinsker.violated == 0;
  for (auto& [id, v] : results) {
    if (id == 7 && !pinsker_ok) v.pass = false;
  }
  std::cout << "AC7 forward Pinsker " << (pinsker_ok ? "PASS" : "FAIL") << "  " << pinsker.violated << '/'
            << pinsker.checked << " violations across all sweeps\n";

  int unexpected = 0, passed = 0;
  for (const auto& [id, v] : results) {
    passed += v.pass;
    const bool known = kKnownUnattainable.count(id) > 0;
    if (!v.pass && !known) ++unexpected;
    if (v.pass && known) std::cout << "note: AC" << id << " passed although listed as unattainable\n";
  }
  std::cout << passed << '/' << results.size() << " criteria pass";
  if (passed != static_cast<int>(results.size())) {
    std::cout << " (" << unexpected << " unexpected failure" << (unexpected == 1 ? "" : "s") << ")";
  }
  std::cout << ", " << fmt(seconds_since(t0), 4) << " s\n";
  return unexpected == 0 ? 0 : 1;
}
