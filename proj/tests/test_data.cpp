#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "numgraph/data.hpp"

using namespace numgraph;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content = "")
      : path("/tmp/numgraph_data_" + name) {
    if (!content.empty()) {
      std::ofstream f(path);
      f << content;
    }
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_drop reads the DROP layout and all answer kinds") {
  TempFile f("ok.json", R"({
    "nfl_001": {
      "passage": "Kasay kicked a 45-yard field goal. Kasay added a 49-yard field goal.",
      "qa_pairs": [
        {"question": "How many yards were the field goals?",
         "query_id": "q1", "answer": {"number": "94"}},
        {"question": "Who kicked?",
         "query_id": "q2", "answer": {"number": "", "spans": ["Kasay"]}},
        {"question": "When?",
         "query_id": "q3",
         "answer": {"date": {"day": "7", "month": "February", "year": "1756"}}},
        {"question": "Numeric number field?",
         "query_id": "q4", "answer": {"number": 34}}
      ]
    }
  })");
  LoadStats stats;
  std::vector<DropExample> ex = load_drop_file(f.path, &stats);
  REQUIRE(ex.size() == 4);
  CHECK(stats.n_loaded == 4);
  CHECK(stats.n_skipped == 0);
  CHECK(ex[0].passage_id == "nfl_001");
  CHECK(ex[0].query_id == "q1");
  CHECK(ex[0].gold.number == "94");
  CHECK(ex[0].gold.spans.empty());
  CHECK(ex[1].gold.number.empty());
  CHECK(ex[1].gold.spans == std::vector<std::string>{"Kasay"});
  CHECK(ex[2].gold.date_day == "7");
  CHECK(ex[2].gold.date_month == "February");
  CHECK(ex[2].gold.date_year == "1756");
  CHECK(ex[3].gold.number == "34");
  for (const auto& e : ex) CHECK_FALSE(e.gold.empty());
}

TEST_CASE("malformed records are skipped and counted") {
  TempFile f("bad.json", R"({
    "p1": {
      "passage": "Some text with 4 numbers.",
      "qa_pairs": [
        {"question": "ok?", "query_id": "a", "answer": {"number": "4"}},
        {"query_id": "b", "answer": {"number": "4"}},
        {"question": "empty answer", "query_id": "c",
         "answer": {"number": "", "spans": [], "date": {"day": "", "month": "", "year": ""}}},
        {"question": "no answer", "query_id": "d"},
        {"question": "answer not an object", "query_id": "e", "answer": "4"}
      ]
    },
    "p2": {"qa_pairs": [{"question": "x", "query_id": "f", "answer": {"number": "1"}}]},
    "p3": {"passage": "no pairs", "qa_pairs": []},
    "p4": "not even an object"
  })");
  LoadStats stats;
  std::vector<DropExample> ex = load_drop_file(f.path, &stats);
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].query_id == "a");
  CHECK(stats.n_loaded == 1);
  CHECK(stats.n_skipped == 6);  // b, c, d, e, p2's pair, p4

  CHECK_THROWS_AS(load_drop_file("/tmp/numgraph_data_nonexistent.json"), DataError);
  TempFile g("notjson.json", "{not valid json");
  CHECK_THROWS_AS(load_drop_file(g.path), DataError);
  TempFile h("arr.json", "[1,2,3]");
  CHECK_THROWS_AS(load_drop_file(h.path), DataError);
}

TEST_CASE("generator is deterministic by seed and mixes all question kinds") {
  SyntheticSpec spec;
  spec.n_examples = 80;
  spec.seed = 11;
  std::vector<DropExample> a = generate_synthetic(spec);
  std::vector<DropExample> b = generate_synthetic(spec);
  REQUIRE(a.size() == 80);
  CHECK(a == b);

  spec.seed = 12;
  std::vector<DropExample> c = generate_synthetic(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].passage != c[i].passage || a[i].question != c[i].question)
      differs = true;
  CHECK(differs);

  std::set<std::string> prefixes;
  for (const auto& ex : a) prefixes.insert(ex.question.substr(0, 14));
  CHECK(prefixes.count("How many total"));
  CHECK(prefixes.count("How many more "));
  CHECK(prefixes.count("How many scori"));
  CHECK(prefixes.count("Who scored the"));
  CHECK(prefixes.count("Who scored in "));

  for (const auto& ex : a) {
    CHECK(ex.passage_id.rfind("synth-", 0) == 0);
    CHECK_FALSE(ex.gold.empty());
  }
}

TEST_CASE("every generated example is derivable by at least one head") {
  SyntheticSpec spec;
  spec.n_examples = 60;
  spec.seed = 3;
  for (const DropExample& ex : generate_synthetic(spec)) {
    AnnotatedPassage ann = annotate(ex.question, ex.passage);
    GoldAnnotation sup = find_supervision(ex.gold, ann);
    CHECK_MESSAGE(sup.trainable(), ex.query_id, ": ", ex.question);
    if (!ex.gold.number.empty() || !ex.gold.spans.empty()) continue;
    FAIL("generator emitted an unexpected gold kind");
  }
}

TEST_CASE("mix weights select kinds; invalid weights are rejected") {
  SyntheticSpec spec;
  spec.n_examples = 20;
  spec.w_addition = spec.w_subtraction = spec.w_span = spec.w_ordinal_span = 0.0;
  spec.w_count = 2.5;
  for (const auto& ex : generate_synthetic(spec))
    CHECK(ex.question == "How many scoring plays were there?");

  spec.w_count = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec), DataError);
  spec.w_count = -1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), DataError);
}

TEST_CASE("save_drop round-trips through load_drop") {
  SyntheticSpec spec;
  spec.n_examples = 15;
  spec.seed = 21;
  std::vector<DropExample> made = generate_synthetic(spec);
  TempFile f("roundtrip.json");
  save_drop(made, f.path);
  LoadStats stats;
  std::vector<DropExample> back = load_drop_file(f.path, &stats);
  CHECK(stats.n_skipped == 0);
  REQUIRE(back.size() == made.size());
  CHECK(back == made);
}
