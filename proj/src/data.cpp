#include "numgraph/data.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <random>

namespace numgraph {
namespace {

using ordered = nlohmann::ordered_json;  // keeps file order for streaming

std::string json_field_string(const ordered& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return canonical_number(double(j.get<long long>()));
  if (j.is_number()) return canonical_number(j.get<double>());
  throw DataError("field is neither string nor number");
}

bool parse_answer(const ordered& ans, GoldAnswer& gold) {
  if (!ans.is_object()) return false;
  try {
    if (ans.contains("number") && !ans["number"].is_null())
      gold.number = json_field_string(ans["number"]);
    if (ans.contains("spans")) {
      if (!ans["spans"].is_array()) return false;
      for (const auto& s : ans["spans"]) {
        std::string text = json_field_string(s);
        if (!text.empty()) gold.spans.push_back(text);
      }
    }
    if (ans.contains("date")) {
      const auto& d = ans["date"];
      if (!d.is_object()) return false;
      if (d.contains("day")) gold.date_day = json_field_string(d["day"]);
      if (d.contains("month")) gold.date_month = json_field_string(d["month"]);
      if (d.contains("year")) gold.date_year = json_field_string(d["year"]);
    }
  } catch (const DataError&) {
    return false;
  }
  return !gold.empty();
}

const std::vector<std::string> kNames = {"Anderson", "Delhomme", "Kasay",
                                         "Foster",   "Harrington", "Morgan",
                                         "Whitfield", "Tatum"};
const std::vector<std::string> kOrdinals = {"first", "second", "third", "fourth"};
const std::vector<std::string> kMonths = {"January", "March",    "April",
                                          "June",    "September", "November"};

enum class Kind { ADD, SUB, COUNT, SPAN, ORDINAL_SPAN };

}  // namespace

LoadStats load_drop(const std::string& path,
                    const std::function<void(DropExample)>& sink) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  ordered doc;
  try {
    doc = ordered::parse(in);
  } catch (const ordered::exception& e) {
    throw DataError("cannot parse " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw DataError(path + " is not a JSON object");

  LoadStats stats;
  for (const auto& [pid, pobj] : doc.items()) {
    if (!pobj.is_object() || !pobj.contains("passage") ||
        !pobj["passage"].is_string() || !pobj.contains("qa_pairs") ||
        !pobj["qa_pairs"].is_array()) {
      std::size_t n = pobj.is_object() && pobj.contains("qa_pairs") &&
                              pobj["qa_pairs"].is_array()
                          ? pobj["qa_pairs"].size()
                          : 1;
      stats.n_skipped += std::max<std::size_t>(n, 1);
      continue;
    }
    for (const auto& qa : pobj["qa_pairs"]) {
      DropExample ex;
      ex.passage_id = pid;
      ex.passage = pobj["passage"].get<std::string>();
      if (!qa.is_object() || !qa.contains("question") ||
          !qa["question"].is_string() || !qa.contains("query_id") ||
          !qa["query_id"].is_string() || !qa.contains("answer") ||
          !parse_answer(qa["answer"], ex.gold)) {
        ++stats.n_skipped;
        continue;
      }
      ex.question = qa["question"].get<std::string>();
      ex.query_id = qa["query_id"].get<std::string>();
      sink(std::move(ex));
      ++stats.n_loaded;
    }
  }
  return stats;
}

std::vector<DropExample> load_drop_file(const std::string& path, LoadStats* stats) {
  std::vector<DropExample> out;
  LoadStats s = load_drop(path, [&](DropExample ex) { out.push_back(std::move(ex)); });
  if (stats) *stats = s;
  return out;
}

std::vector<DropExample> generate_synthetic(const SyntheticSpec& spec) {
  std::vector<std::pair<Kind, double>> weights = {
      {Kind::ADD, spec.w_addition},       {Kind::SUB, spec.w_subtraction},
      {Kind::COUNT, spec.w_count},        {Kind::SPAN, spec.w_span},
      {Kind::ORDINAL_SPAN, spec.w_ordinal_span}};
  double total = 0.0;
  for (auto& [k, w] : weights) {
    if (w < 0) throw DataError("negative mix weight");
    total += w;
  }
  if (total <= 0) throw DataError("mix weights sum to zero");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> n_events_d(2, 4);
  std::uniform_int_distribution<int> points_d(10, 48);
  std::uniform_int_distribution<int> crowd_d(52, 97);
  std::uniform_int_distribution<int> day_d(2, 28);
  std::uniform_int_distribution<int> year_d(1950, 2015);

  std::vector<DropExample> out;
  for (std::size_t idx = 0; idx < spec.n_examples; ++idx) {
    double pick = u01(rng) * total;
    Kind kind = Kind::ADD;
    for (auto& [k, w] : weights) {
      if (pick < w) {
        kind = k;
        break;
      }
      pick -= w;
    }

    int n_events = n_events_d(rng);
    std::vector<std::string> names = kNames;
    std::shuffle(names.begin(), names.end(), rng);
    names.resize(n_events);
    std::vector<std::string> quarters = kOrdinals;
    std::shuffle(quarters.begin(), quarters.end(), rng);
    quarters.resize(n_events);
    std::vector<int> points;
    while (int(points.size()) < n_events) {
      int p = points_d(rng);
      if (std::find(points.begin(), points.end(), p) == points.end())
        points.push_back(p);
    }

    std::string passage;
    for (int e = 0; e < n_events; ++e)
      passage += "In the " + quarters[e] + " quarter " + names[e] + " scored " +
                 std::to_string(points[e]) + " points. ";
    if (u01(rng) < 0.5)
      passage += "The game was played on " + kMonths[rng() % kMonths.size()] +
                 " " + std::to_string(day_d(rng)) + ", " +
                 std::to_string(year_d(rng)) + ". ";
    if (u01(rng) < 0.4)
      passage += "A crowd of " + std::to_string(crowd_d(rng) * 100) +
                 " watched the game. ";
    passage.pop_back();

    DropExample ex;
    ex.passage_id = "synth-" + std::to_string(idx);
    ex.query_id = ex.passage_id + "-q0";
    ex.passage = passage;

    switch (kind) {
      case Kind::ADD: {
        int a = int(rng() % n_events), b;
        do b = int(rng() % n_events);
        while (b == a);
        ex.question = "How many total points did " + names[a] + " and " +
                      names[b] + " score?";
        ex.gold.number = canonical_number(double(points[a] + points[b]));
        break;
      }
      case Kind::SUB: {
        int a = int(rng() % n_events), b;
        do b = int(rng() % n_events);
        while (b == a);
        if (points[a] < points[b]) std::swap(a, b);
        ex.question = "How many more points did " + names[a] + " score than " +
                      names[b] + "?";
        ex.gold.number = canonical_number(double(points[a] - points[b]));
        break;
      }
      case Kind::COUNT: {
        ex.question = "How many scoring plays were there?";
        ex.gold.number = std::to_string(n_events);
        break;
      }
      case Kind::SPAN: {
        int best = int(std::max_element(points.begin(), points.end()) -
                       points.begin());
        ex.question = "Who scored the most points?";
        ex.gold.spans = {names[best]};
        break;
      }
      case Kind::ORDINAL_SPAN: {
        int e = int(rng() % n_events);
        ex.question = "Who scored in the " + quarters[e] + " quarter?";
        ex.gold.spans = {names[e]};
        break;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void save_drop(const std::vector<DropExample>& examples, const std::string& path) {
  ordered doc = ordered::object();
  for (const DropExample& ex : examples) {
    if (!doc.contains(ex.passage_id)) {
      doc[ex.passage_id] = ordered::object();
      doc[ex.passage_id]["passage"] = ex.passage;
      doc[ex.passage_id]["qa_pairs"] = ordered::array();
    }
    ordered qa = ordered::object();
    qa["question"] = ex.question;
    qa["query_id"] = ex.query_id;
    ordered ans = ordered::object();
    ans["number"] = ex.gold.number;
    ans["spans"] = ex.gold.spans;
    ans["date"] = {{"day", ex.gold.date_day},
                   {"month", ex.gold.date_month},
                   {"year", ex.gold.date_year}};
    qa["answer"] = ans;
    doc[ex.passage_id]["qa_pairs"].push_back(qa);
  }
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot write " + path);
  outf << doc.dump(1) << "\n";
}

}  // namespace numgraph
