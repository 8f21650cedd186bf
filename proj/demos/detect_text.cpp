// Trains two character models, one on "authentic" text and one on text from
// a skewed generator, then classifies fresh passages of each kind.

#include <cstdio>
#include <string>

#include "lmdetect.hpp"

using namespace lmdetect;

namespace {

std::string text_from(const MarkovModel& src, std::size_t n, std::uint64_t seed) {
  static const char kLetters[] = "etaoin ";
  std::string out;
  for (Symbol s : sample(src, n, seed)) out += kLetters[s];
  return out;
}

}  // namespace

int main() {
  const auto human = MarkovModel::iid(Categorical({0.2, 0.15, 0.15, 0.1, 0.1, 0.1, 0.2}));
  const auto machine = MarkovModel::iid(Categorical({0.3, 0.1, 0.1, 0.05, 0.1, 0.05, 0.3}));

  // both models share one alphabet built from the union of the training texts
  const std::string train_p = text_from(human, 20000, 1), train_q = text_from(machine, 20000, 2);
  const auto alphabet = tokenize(train_p + train_q, Scheme::chr).alphabet;
  const auto mp = fit_empirical(alphabet, encode(train_p, Scheme::chr, alphabet), 1, 0.01);
  const auto mq = fit_empirical(alphabet, encode(train_q, Scheme::chr, alphabet), 1, 0.01);

  const std::size_t n = 200;
  const auto thr = np_threshold(mp, mq, n, 0.05, 5000, 3);
  std::printf("threshold %.4f nats/token at false alarm %.3f\n", thr.threshold, thr.false_alarm);

  int correct = 0;
  for (int i = 0; i < 20; ++i) {
    const bool authentic = i % 2 == 0;
    const auto seq = encode(text_from(authentic ? human : machine, n, 100 + i), Scheme::chr, alphabet);
    const auto s = lrt_statistic(mp, mq, seq);
    const bool says_authentic = s.value >= thr.threshold;
    correct += says_authentic == authentic;
    std::printf("%-9s S = %+8.4f -> %s\n", authentic ? "authentic" : "generated", s.value,
                says_authentic ? "authentic" : "generated");
  }
  std::printf("%d/20 correct\n", correct);
}
