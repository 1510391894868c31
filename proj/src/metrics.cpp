#include "numgraph/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>

namespace numgraph {
namespace {

std::optional<double> as_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin + s.size() && std::isfinite(v)) return v;
  return std::nullopt;
}

std::string strip_punct(const std::string& s) {
  std::string out;
  for (unsigned char ch : s)
    if (!std::ispunct(ch)) out.push_back(char(ch));
  return out;
}

struct Bag {
  std::string text;               // normalized span string
  std::set<std::string> tokens;   // token set
  std::set<std::string> numbers;  // numeric tokens only
};

std::vector<Bag> to_bags(const std::vector<std::string>& spans) {
  std::vector<Bag> out;
  std::set<std::string> seen;
  for (const std::string& span : spans) {
    Bag b;
    for (const std::string& tok : normalize_tokens(span)) {
      b.text += b.text.empty() ? tok : " " + tok;
      b.tokens.insert(tok);
      if (as_number(tok)) b.numbers.insert(tok);
    }
    if (seen.insert(b.text).second) out.push_back(std::move(b));
  }
  return out;
}

double pair_f1(const Bag& pred, const Bag& gold) {
  if (pred.tokens.empty() && gold.tokens.empty()) return 1.0;
  if (pred.tokens.empty() || gold.tokens.empty()) return 0.0;
  if (!gold.numbers.empty()) {
    std::vector<std::string> shared;
    std::set_intersection(gold.numbers.begin(), gold.numbers.end(),
                          pred.numbers.begin(), pred.numbers.end(),
                          std::back_inserter(shared));
    if (shared.empty()) return 0.0;  // a gold number must match as a number
  }
  std::vector<std::string> common;
  std::set_intersection(pred.tokens.begin(), pred.tokens.end(),
                        gold.tokens.begin(), gold.tokens.end(),
                        std::back_inserter(common));
  if (common.empty()) return 0.0;
  double p = double(common.size()) / double(pred.tokens.size());
  double r = double(common.size()) / double(gold.tokens.size());
  return 2.0 * p * r / (p + r);
}

// Maximum-weight one-to-one assignment; the smaller side is the bitmask.
double best_alignment(const std::vector<std::vector<double>>& w) {
  std::size_t n = w.size(), m = w[0].size();
  if (m > n) {
    std::vector<std::vector<double>> t(m, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) t[j][i] = w[i][j];
    return best_alignment(t);
  }
  if (m > 20) throw MetricsError("too many answer spans to align");
  std::vector<double> dp(std::size_t(1) << m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> next = dp;  // leaving row i unmatched
    for (std::size_t mask = 0; mask < dp.size(); ++mask)
      for (std::size_t j = 0; j < m; ++j)
        if (!(mask >> j & 1))
          next[mask | (std::size_t(1) << j)] =
              std::max(next[mask | (std::size_t(1) << j)], dp[mask] + w[i][j]);
    dp = std::move(next);
  }
  return *std::max_element(dp.begin(), dp.end());
}

}  // namespace

std::vector<std::string> normalize_tokens(const std::string& span) {
  std::vector<std::string> raw;
  std::string cur;
  for (char ch : span) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '-') {
      if (!cur.empty()) raw.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) raw.push_back(std::move(cur));

  std::vector<std::string> out;
  for (std::string tok : raw) {
    if (!as_number(tok)) tok = strip_punct(tok);
    if (auto v = as_number(tok)) tok = canonical_number(*v);
    if (tok.empty() || tok == "a" || tok == "an" || tok == "the") continue;
    out.push_back(std::move(tok));
  }
  return out;
}

std::string normalize_span(const std::string& span) {
  std::string out;
  for (const std::string& tok : normalize_tokens(span))
    out += out.empty() ? tok : " " + tok;
  return out;
}

ScoredPair score_answer(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& gold) {
  std::vector<Bag> pb = to_bags(predicted);
  std::vector<Bag> gb = to_bags(gold);

  ScoredPair out;
  std::set<std::string> ptexts, gtexts;
  for (const Bag& b : pb) ptexts.insert(b.text);
  for (const Bag& b : gb) gtexts.insert(b.text);
  out.em = (!gtexts.empty() && ptexts == gtexts) ? 100.0 : 0.0;

  if (pb.empty() || gb.empty()) {
    out.f1 = (pb.empty() && gb.empty()) ? out.em : 0.0;
    return out;
  }
  std::vector<std::vector<double>> w(pb.size(), std::vector<double>(gb.size()));
  for (std::size_t i = 0; i < pb.size(); ++i)
    for (std::size_t j = 0; j < gb.size(); ++j) w[i][j] = pair_f1(pb[i], gb[j]);
  double matched = best_alignment(w);
  if (matched > 0.0) {
    double p = matched / double(pb.size());
    double r = matched / double(gb.size());
    out.f1 = 100.0 * 2.0 * p * r / (p + r);
  }
  return out;
}

std::vector<std::string> gold_answer_texts(const GoldAnswer& gold) {
  if (!gold.number.empty()) return {gold.number};
  if (!gold.spans.empty()) return gold.spans;
  std::string date;
  for (const std::string* part : {&gold.date_day, &gold.date_month, &gold.date_year})
    if (!part->empty()) date += (date.empty() ? "" : " ") + *part;
  if (!date.empty()) return {date};
  return {};
}

const char* gold_answer_kind(const GoldAnswer& gold) {
  if (!gold.number.empty()) return "number";
  if (!gold.spans.empty()) return "span";
  return "date";
}

}  // namespace numgraph
