#include "numgraph/heads.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <set>

namespace numgraph {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw HeadsError(msg);
}

std::optional<double> parse_decimal(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::vector<std::string> token_texts(const std::string& s) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(s)) out.push_back(t.text);
  return out;
}

std::vector<Span> find_token_matches(const TextAnnotation& t, const std::string& s) {
  std::vector<Span> out;
  std::vector<std::string> want = token_texts(s);
  if (want.empty() || want.size() > t.tokens.size()) return out;
  for (std::size_t i = 0; i + want.size() <= t.tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < want.size(); ++k)
      if (t.tokens[i + k].text != want[k]) {
        ok = false;
        break;
      }
    if (ok) out.push_back({i, i + want.size() - 1});
  }
  return out;
}

Tensor mlp2(const Tensor& x, const ParamStore& ps, const std::string& stem) {
  Tensor h = elu(add(vecmat(x, ps.get(stem + ".w1")), ps.get(stem + ".b1")));
  return add(vecmat(h, ps.get(stem + ".w2")), ps.get(stem + ".b2"));
}

Tensor token_scores(const Tensor& rows, const ParamStore& ps, const std::string& name) {
  return log_softmax(reshape(matmul(rows, ps.get(name)), {rows.rows()}));
}

struct SpanPick {
  std::size_t start = 0, end = 0;
  double logp = 0.0;
};

SpanPick best_span(const Tensor& start_logp, const Tensor& end_logp) {
  SpanPick best;
  bool have = false;
  for (std::size_t s = 0; s < start_logp.numel(); ++s)
    for (std::size_t e = s; e < end_logp.numel(); ++e) {
      double lp = start_logp.at(s) + end_logp.at(e);
      if (!have || lp > best.logp) {
        best = {s, e, lp};
        have = true;
      }
    }
  return best;
}

}  // namespace

const char* to_string(AnswerType t) {
  switch (t) {
    case AnswerType::PASSAGE_SPAN: return "passage_span";
    case AnswerType::QUESTION_SPAN: return "question_span";
    case AnswerType::MULTI_SPAN: return "multi_span";
    case AnswerType::COUNT: return "count";
    case AnswerType::ARITHMETIC: return "arithmetic";
  }
  return "?";
}

double evaluate_expression(const std::vector<int>& coefficients,
                           const TextAnnotation& passage) {
  require(coefficients.size() == passage.numbers.size(),
          "coefficient count does not match passage numbers");
  double total = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    require(coefficients[i] >= -1 && coefficients[i] <= 1,
            "coefficient outside {-1,0,+1}");
    total += coefficients[i] * passage.numbers[i].value;
  }
  return total;
}

void init_heads_params(std::size_t d_h, ParamStore& params, std::mt19937_64& rng) {
  auto w = [&](const std::string& name, std::size_t in, std::size_t out) {
    params.create_uniform(name, {in, out}, 1.0 / std::sqrt(double(in)), rng);
  };
  w("heads.type.w1", 3 * d_h, d_h);
  params.create_zeros("heads.type.b1", {d_h});
  w("heads.type.w2", d_h, kNumAnswerTypes);
  params.create_zeros("heads.type.b2", {kNumAnswerTypes});
  w("heads.pspan.start", d_h, 1);
  w("heads.pspan.end", d_h, 1);
  w("heads.qspan.start", d_h, 1);
  w("heads.qspan.end", d_h, 1);
  w("heads.bio.w", d_h, 3);
  params.create_zeros("heads.bio.b", {3});
  w("heads.count.w1", d_h, d_h);
  params.create_zeros("heads.count.b1", {d_h});
  w("heads.count.w2", d_h, 10);
  params.create_zeros("heads.count.b2", {10});
  w("heads.sign.w", d_h, 3);
  params.create_zeros("heads.sign.b", {3});
}

std::vector<int> spans_to_tags(const std::vector<Span>& spans, std::size_t n_tokens) {
  std::vector<int> tags(n_tokens, 0);
  for (const Span& s : spans) {
    require(s.first <= s.last && s.last < n_tokens, "span outside token range");
    tags[s.first] = 1;
    for (std::size_t i = s.first + 1; i <= s.last; ++i) tags[i] = 2;
  }
  return tags;
}

std::vector<Span> tags_to_spans(const std::vector<int>& tags) {
  std::vector<Span> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == 0) continue;
    if (tags[i] == 1 || i == 0 || tags[i - 1] == 0)
      out.push_back({i, i});
    else
      out.back().last = i;
  }
  return out;
}

HeadsOutput heads_forward(const Tensor& U, const Tensor& c,
                          const AnnotatedPassage& ann, const ParamStore& params) {
  std::size_t nq = ann.question.tokens.size();
  std::size_t np = ann.passage.tokens.size();
  require(nq >= 1 && np >= 1, "heads need a non-empty question and passage");
  require(U.ndim() == 2 && U.rows() == nq + np,
          "U row count does not match the annotation");

  std::vector<std::size_t> q_idx(nq), p_idx(np);
  std::iota(q_idx.begin(), q_idx.end(), 0);
  std::iota(p_idx.begin(), p_idx.end(), nq);
  Tensor U_q = gather_rows(U, q_idx);
  Tensor U_p = gather_rows(U, p_idx);

  HeadsOutput out;
  Tensor pooled = concat(concat(mean_rows(U_p), mean_rows(U_q)), c);
  out.type_logp = log_softmax(mlp2(pooled, params, "heads.type"));
  out.p_start_logp = token_scores(U_p, params, "heads.pspan.start");
  out.p_end_logp = token_scores(U_p, params, "heads.pspan.end");
  out.q_start_logp = token_scores(U_q, params, "heads.qspan.start");
  out.q_end_logp = token_scores(U_q, params, "heads.qspan.end");
  out.bio_logp = log_softmax(
      rowwise_add(matmul(U_p, params.get("heads.bio.w")), params.get("heads.bio.b")));
  out.count_logp = log_softmax(mlp2(mean_rows(U_p), params, "heads.count"));

  for (const NumberMention& m : ann.passage.numbers) out.number_tokens.push_back(m.first);
  if (out.number_tokens.empty()) {
    out.sign_logp = Tensor::zeros({0, 3});
  } else {
    Tensor rows = gather_rows(U_p, out.number_tokens);
    out.sign_logp = log_softmax(rowwise_add(matmul(rows, params.get("heads.sign.w")),
                                            params.get("heads.sign.b")));
  }
  return out;
}

GoldAnnotation find_supervision(const GoldAnswer& gold, const AnnotatedPassage& ann,
                                int max_nonzero) {
  require(max_nonzero >= 0, "max_nonzero must be non-negative");
  GoldAnnotation out;
  out.gold = gold;
  if (gold.empty()) return out;

  std::vector<std::string> span_targets = gold.spans;
  if (!gold.number.empty() && gold.spans.empty()) span_targets.push_back(gold.number);
  if (gold.spans.empty() && gold.number.empty()) {
    std::string date;
    for (const std::string* part : {&gold.date_day, &gold.date_month, &gold.date_year})
      if (!part->empty()) date += (date.empty() ? "" : " ") + *part;
    if (!date.empty()) span_targets.push_back(date);
  }

  if (span_targets.size() == 1) {
    for (const Span& s : find_token_matches(ann.passage, span_targets[0])) {
      AnswerDerivation d;
      d.atype = AnswerType::PASSAGE_SPAN;
      d.spans = {s};
      out.derivations.push_back(d);
    }
    for (const Span& s : find_token_matches(ann.question, span_targets[0])) {
      AnswerDerivation d;
      d.atype = AnswerType::QUESTION_SPAN;
      d.spans = {s};
      out.derivations.push_back(d);
    }
  } else if (span_targets.size() > 1) {
    // Multi-span: tag every non-overlapping occurrence of each distinct gold
    // string, then keep the derivation only if it decodes back to the gold set.
    std::set<std::string> want(span_targets.begin(), span_targets.end());
    std::vector<Span> occurrences;
    for (const std::string& s : want)
      for (const Span& sp : find_token_matches(ann.passage, s))
        occurrences.push_back(sp);
    std::sort(occurrences.begin(), occurrences.end(),
              [](const Span& a, const Span& b) {
                return a.first != b.first ? a.first < b.first : a.last < b.last;
              });
    std::vector<Span> picked;
    for (const Span& sp : occurrences)
      if (picked.empty() || sp.first > picked.back().last) picked.push_back(sp);
    std::set<std::string> got;
    for (const Span& sp : picked) got.insert(span_text(ann.passage, sp));
    if (!picked.empty() && got == want) {
      AnswerDerivation d;
      d.atype = AnswerType::MULTI_SPAN;
      d.spans = picked;
      out.derivations.push_back(d);
    }
  }

  std::optional<double> target = parse_decimal(gold.number);
  if (!target) {
    // A date with exactly one numeric component acts as a numeric target.
    std::vector<double> parts;
    for (const std::string* part : {&gold.date_day, &gold.date_month, &gold.date_year})
      if (auto v = parse_decimal(*part)) parts.push_back(*v);
    bool lone = parts.size() == 1 && gold.spans.empty() &&
                (gold.date_day.empty() + gold.date_month.empty() +
                 gold.date_year.empty()) == 2;
    if (lone) target = parts[0];
  }

  if (target) {
    double t = *target;
    if (t >= 0 && t <= 9 && std::floor(t) == t) {
      AnswerDerivation d;
      d.atype = AnswerType::COUNT;
      d.count = int(t);
      out.derivations.push_back(d);
    }
    const auto& nums = ann.passage.numbers;
    std::size_t n = nums.size();
    if (n > 0) {
      auto emit = [&](const std::vector<std::size_t>& idx, unsigned sign_bits) {
        std::vector<int> coeff(n, 0);
        double sum = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
          coeff[idx[k]] = (sign_bits >> k) & 1 ? 1 : -1;
          sum += coeff[idx[k]] * nums[idx[k]].value;
        }
        if (std::abs(sum - t) <= 1e-6) {
          AnswerDerivation d;
          d.atype = AnswerType::ARITHMETIC;
          d.expr.coefficients = coeff;
          d.expr.value = evaluate_expression(coeff, ann.passage);
          out.derivations.push_back(d);
        }
      };
      emit({}, 0);  // the all-zero expression, valid when the target is 0
      // Subsets of size 1..max_nonzero, each with every +-1 sign pattern.
      std::vector<std::size_t> subset;
      auto walk = [&](auto&& self, std::size_t from, int left) -> void {
        if (!subset.empty())
          for (unsigned bits = 0; bits < (1u << subset.size()); ++bits)
            emit(subset, bits);
        if (left == 0) return;
        for (std::size_t i = from; i < n; ++i) {
          subset.push_back(i);
          self(self, i + 1, left - 1);
          subset.pop_back();
        }
      };
      walk(walk, 0, max_nonzero);
    }
  }
  return out;
}

Tensor marginal_loss(const HeadsOutput& out, const GoldAnnotation& gold) {
  std::size_t np = out.p_start_logp.numel();
  std::size_t nq = out.q_start_logp.numel();
  std::vector<Tensor> terms;
  for (const AnswerDerivation& d : gold.derivations) {
    Tensor t = take(out.type_logp, std::size_t(d.atype));
    switch (d.atype) {
      case AnswerType::PASSAGE_SPAN: {
        require(d.spans.size() == 1 && d.spans[0].last < np, "bad passage span");
        terms.push_back(add(t, add(take(out.p_start_logp, d.spans[0].first),
                                   take(out.p_end_logp, d.spans[0].last))));
        break;
      }
      case AnswerType::QUESTION_SPAN: {
        require(d.spans.size() == 1 && d.spans[0].last < nq, "bad question span");
        terms.push_back(add(t, add(take(out.q_start_logp, d.spans[0].first),
                                   take(out.q_end_logp, d.spans[0].last))));
        break;
      }
      case AnswerType::MULTI_SPAN: {
        std::vector<int> tags = spans_to_tags(d.spans, np);
        std::vector<std::size_t> flat(np);
        for (std::size_t i = 0; i < np; ++i) flat[i] = i * 3 + tags[i];
        terms.push_back(add(t, take_sum(out.bio_logp, flat)));
        break;
      }
      case AnswerType::COUNT: {
        require(d.count >= 0 && d.count <= 9, "count outside 0..9");
        terms.push_back(add(t, take(out.count_logp, std::size_t(d.count))));
        break;
      }
      case AnswerType::ARITHMETIC: {
        std::size_t n = out.sign_logp.ndim() == 2 ? out.sign_logp.rows() : 0;
        if (n == 0) continue;  // head unavailable for this passage
        require(d.expr.coefficients.size() == n, "coefficient count mismatch");
        std::vector<std::size_t> flat(n);
        for (std::size_t i = 0; i < n; ++i)
          flat[i] = i * 3 + std::size_t(d.expr.coefficients[i] + 1);
        terms.push_back(add(t, take_sum(out.sign_logp, flat)));
        break;
      }
    }
  }
  require(!terms.empty(), "no usable derivation for this example");
  return scale(logsumexp(terms), -1.0);
}

std::string span_text(const TextAnnotation& t, const Span& s) {
  require(s.first <= s.last && s.last < t.tokens.size(), "span outside token range");
  std::string out;
  for (std::size_t i = s.first; i <= s.last; ++i) {
    if (i > s.first) out += ' ';
    out += t.tokens[i].text;
  }
  return out;
}

std::string canonical_number(double v) {
  require(std::isfinite(v), "non-finite answer value");
  double r = std::round(v * 1e5) / 1e5;
  if (r == 0.0) r = 0.0;  // drop the sign of -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5f", r);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

DecodedAnswer decode_answer(const HeadsOutput& out, const AnnotatedPassage& ann) {
  std::vector<std::size_t> order(kNumAnswerTypes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.type_logp.at(a) > out.type_logp.at(b);
  });

  for (std::size_t ti : order) {
    DecodedAnswer ans;
    ans.atype = static_cast<AnswerType>(int(ti));
    ans.derivation.atype = ans.atype;
    double head_logp = 0.0;
    switch (ans.atype) {
      case AnswerType::PASSAGE_SPAN: {
        SpanPick p = best_span(out.p_start_logp, out.p_end_logp);
        ans.derivation.spans = {{p.start, p.end}};
        ans.texts = {span_text(ann.passage, {p.start, p.end})};
        head_logp = p.logp;
        break;
      }
      case AnswerType::QUESTION_SPAN: {
        SpanPick p = best_span(out.q_start_logp, out.q_end_logp);
        ans.derivation.spans = {{p.start, p.end}};
        ans.texts = {span_text(ann.question, {p.start, p.end})};
        head_logp = p.logp;
        break;
      }
      case AnswerType::MULTI_SPAN: {
        std::size_t np = out.bio_logp.rows();
        std::vector<int> tags(np);
        for (std::size_t i = 0; i < np; ++i) {
          int best = 0;
          for (int k = 1; k < 3; ++k)
            if (out.bio_logp.at(i, k) > out.bio_logp.at(i, best)) best = k;
          tags[i] = best;
          head_logp += out.bio_logp.at(i, best);
        }
        std::vector<Span> spans = tags_to_spans(tags);
        if (spans.empty()) continue;  // nothing tagged: fall back
        ans.derivation.spans = spans;
        for (const Span& s : spans) {
          std::string txt = span_text(ann.passage, s);
          if (std::find(ans.texts.begin(), ans.texts.end(), txt) == ans.texts.end())
            ans.texts.push_back(txt);
        }
        break;
      }
      case AnswerType::COUNT: {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 10; ++k)
          if (out.count_logp.at(k) > out.count_logp.at(best)) best = k;
        ans.derivation.count = int(best);
        ans.texts = {std::to_string(best)};
        head_logp = out.count_logp.at(best);
        break;
      }
      case AnswerType::ARITHMETIC: {
        std::size_t n = out.sign_logp.ndim() == 2 ? out.sign_logp.rows() : 0;
        if (n == 0) continue;  // no numbers: fall back
        std::vector<int> coeff(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < 3; ++k)
            if (out.sign_logp.at(i, k) > out.sign_logp.at(i, best)) best = k;
          coeff[i] = int(best) - 1;
          head_logp += out.sign_logp.at(i, best);
        }
        ans.derivation.expr.coefficients = coeff;
        ans.derivation.expr.value = evaluate_expression(coeff, ann.passage);
        ans.texts = {canonical_number(ans.derivation.expr.value)};
        break;
      }
    }
    ans.log_prob = out.type_logp.at(ti) + head_logp;
    ans.derivation.log_prob = ans.log_prob;
    return ans;
  }
  throw HeadsError("no head produced an answer");
}

}  // namespace numgraph
