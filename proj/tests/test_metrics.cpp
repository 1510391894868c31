#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "numgraph/metrics.hpp"

using namespace numgraph;

using Spans = std::vector<std::string>;

TEST_CASE("the three documented scoring examples") {
  ScoredPair a = score_answer({"94"}, {"94"});
  CHECK(a.em == 100.0);
  CHECK(a.f1 == 100.0);

  ScoredPair b = score_answer({"the third"}, {"third"});
  CHECK(b.em == 100.0);
  CHECK(b.f1 == 100.0);

  ScoredPair c = score_answer({"Spanish"}, {"Spanish", "Portuguese"});
  CHECK(c.em == 0.0);
  CHECK(c.f1 == doctest::Approx(100.0 * (2 * 0.5 * 1.0) / (0.5 + 1.0)).epsilon(1e-9));
}

TEST_CASE("normalization: case, hyphens, punctuation, numbers, articles") {
  CHECK(normalize_tokens("The 45-yard Kick!") ==
        std::vector<std::string>{"45", "yard", "kick"});
  CHECK(normalize_span("February 7, 1756") == "february 7 1756");
  CHECK(normalize_span("1,511") == "1511");
  CHECK(normalize_span("94.0") == "94");
  CHECK(normalize_span("a the an") == "");
  CHECK(normalize_span("   spaced   out  ") == "spaced out");

  struct Case {
    Spans pred, gold;
    double em, f1;
  };
  const double kThird = 100.0 * (2.0 * 0.5 * 1.0) / 1.5;  // 66.67: 1-vs-2 tokens
  std::vector<Case> cases = {
      {{"45-yard"}, {"45 yard"}, 100, 100},
      {{"KASAY"}, {"Kasay"}, 100, 100},
      {{"Caiboaté!"}, {"Caiboaté"}, 100, 100},
      {{"1,511"}, {"1511"}, 100, 100},
      {{"94.0"}, {"94"}, 100, 100},
      {{"February 7, 1756"}, {"7 February 1756"}, 0, 100},
      {{"40 yards"}, {"50 yards"}, 0, 0},   // gold number unmatched
      {{"yards"}, {"50 yards"}, 0, 0},      // same gate, no number predicted
      {{"50"}, {"50 yards"}, 0, kThird},
      {{"Spanish", "Portuguese"}, {"Portuguese", "Spanish"}, 100, 100},
      {{"Spanish", "Spanish", "Portuguese"}, {"Spanish", "Portuguese"}, 100, 100},
      {{"a", "the"}, {"an"}, 100, 100},     // everything normalizes away
      {{"quarterback Delhomme"}, {"Delhomme"}, 0, kThird},
      {{"a b", "c d"}, {"c d", "a b"}, 100, 100},
      {{"3"}, {"3.0"}, 100, 100},
      {{"-5"}, {"5"}, 100, 100},            // hyphens always split
      {{"fourth quarter"}, {"fourth"}, 0, kThird},
      {{"1756"}, {"1756", "1754"}, 0, kThird},
      {{}, {"x"}, 0, 0},
      {{"dog"}, {"cat"}, 0, 0},
  };
  for (const Case& cs : cases) {
    CAPTURE(cs.pred.empty() ? "<none>" : cs.pred[0]);
    CAPTURE(cs.gold.empty() ? "<none>" : cs.gold[0]);
    ScoredPair s = score_answer(cs.pred, cs.gold);
    CHECK(s.em == cs.em);
    CHECK(s.f1 == doctest::Approx(cs.f1).epsilon(1e-6));
  }
}

TEST_CASE("alignment picks the best one-to-one matching") {
  // "z b" must pair with gold "b", leaving "x" unmatched.
  ScoredPair s = score_answer({"z b", "x"}, {"b"});
  CHECK(s.em == 0.0);
  double pair = 2.0 * 0.5 * 1.0 / 1.5;
  double p = pair / 2.0, r = pair / 1.0;
  CHECK(s.f1 == doctest::Approx(100.0 * 2 * p * r / (p + r)).epsilon(1e-9));

  // Greedy would pair "z b c" with "z b" and lose; optimal crosses over.
  ScoredPair t = score_answer({"z b c", "z b"}, {"z b", "z b c"});
  CHECK(t.em == 100.0);
  CHECK(t.f1 == 100.0);
}

TEST_CASE("fuzzed invariants: EM binary, F1 bounded, EM=100 implies F1=100") {
  std::mt19937_64 rng(71);
  const std::vector<std::string> words = {"red", "blue", "7", "dog", "cat", "the"};
  std::uniform_int_distribution<std::size_t> nspan(0, 3), ntok(1, 3),
      wi(0, words.size() - 1);
  auto spans = [&] {
    Spans out;
    std::size_t n = nspan(rng);
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      std::size_t k = ntok(rng);
      for (std::size_t t = 0; t < k; ++t) s += (t ? " " : "") + words[wi(rng)];
      out.push_back(s);
    }
    return out;
  };
  for (int it = 0; it < 2000; ++it) {
    Spans pred = spans(), gold = spans();
    if (gold.empty()) gold = {"dog"};
    ScoredPair s = score_answer(pred, gold);
    CHECK((s.em == 0.0 || s.em == 100.0));
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 100.0 + 1e-9);
    if (s.em == 100.0) CHECK(s.f1 == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(s.em >= 0.0);
    CHECK(s.em <= s.f1 + 1e-9);

    ScoredPair self = score_answer(gold, gold);
    CHECK(self.em == 100.0);
    CHECK(self.f1 == doctest::Approx(100.0).epsilon(1e-9));

    // EM is symmetric (set equality); F1 is not, because the number-match
    // gate looks only at gold-side numbers.
    if (pred.empty()) continue;
    CHECK(score_answer(gold, pred).em == s.em);
  }
}

TEST_CASE("gold answers render to scorer inputs with a type bucket") {
  GoldAnswer num;
  num.number = "34";
  CHECK(gold_answer_texts(num) == Spans{"34"});
  CHECK(std::string(gold_answer_kind(num)) == "number");

  GoldAnswer sp;
  sp.spans = {"Spanish", "Portuguese"};
  CHECK(gold_answer_texts(sp) == Spans{"Spanish", "Portuguese"});
  CHECK(std::string(gold_answer_kind(sp)) == "span");

  GoldAnswer date;
  date.date_day = "7";
  date.date_month = "February";
  date.date_year = "1756";
  CHECK(gold_answer_texts(date) == Spans{"7 February 1756"});
  CHECK(std::string(gold_answer_kind(date)) == "date");

  GoldAnswer year_only;
  year_only.date_year = "1756";
  CHECK(gold_answer_texts(year_only) == Spans{"1756"});
}
