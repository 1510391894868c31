#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/annotate.hpp"
#include "numgraph/params.hpp"
#include "numgraph/tensor.hpp"

namespace numgraph {

class HeadsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AnswerType : int {
  PASSAGE_SPAN = 0,
  QUESTION_SPAN,
  MULTI_SPAN,
  COUNT,
  ARITHMETIC,
};
inline constexpr std::size_t kNumAnswerTypes = 5;
const char* to_string(AnswerType t);

struct Span {
  std::size_t first = 0;  // inclusive token range
  std::size_t last = 0;
  bool operator==(const Span&) const = default;
};

struct SignedExpression {
  std::vector<int> coefficients;  // one per passage number mention, in {-1,0,+1}
  double value = 0.0;
  bool operator==(const SignedExpression&) const = default;
};

// Sum of coefficient * mention value over the passage numbers, in mention order.
double evaluate_expression(const std::vector<int>& coefficients,
                           const TextAnnotation& passage);

struct AnswerDerivation {
  AnswerType atype = AnswerType::PASSAGE_SPAN;
  std::vector<Span> spans;  // span payloads (one span except MULTI_SPAN)
  int count = -1;
  SignedExpression expr;
  double log_prob = 0.0;
};

// Gold answer as it appears in the dataset; at most one field family is
// normally populated.
struct GoldAnswer {
  std::string number;
  std::vector<std::string> spans;
  std::string date_day, date_month, date_year;
  bool operator==(const GoldAnswer&) const = default;
  bool empty() const {
    return number.empty() && spans.empty() && date_day.empty() &&
           date_month.empty() && date_year.empty();
  }
};

struct GoldAnnotation {
  GoldAnswer gold;
  std::vector<AnswerDerivation> derivations;
  bool trainable() const { return !derivations.empty(); }
};

void init_heads_params(std::size_t d_h, ParamStore& params, std::mt19937_64& rng);

// BIO tags over passage tokens: O=0, B=1, I=2.
std::vector<int> spans_to_tags(const std::vector<Span>& spans, std::size_t n_tokens);
std::vector<Span> tags_to_spans(const std::vector<int>& tags);

struct HeadsOutput {
  Tensor type_logp;                  // [5]
  Tensor p_start_logp, p_end_logp;   // [n_passage_tokens]
  Tensor q_start_logp, q_end_logp;   // [n_question_tokens]
  Tensor bio_logp;                   // [n_passage_tokens, 3]
  Tensor count_logp;                 // [10]
  Tensor sign_logp;                  // [n_passage_numbers, 3], columns -1/0/+1
  std::vector<std::size_t> number_tokens;  // passage token of each number mention
};

// U holds question rows then passage rows, as produced by merge_output.
HeadsOutput heads_forward(const Tensor& U, const Tensor& c,
                          const AnnotatedPassage& ann, const ParamStore& params);

// Enumerates head-specific derivations consistent with the gold answer: exact
// span matches, a count class, and signed expressions with at most max_nonzero
// nonzero coefficients.
GoldAnnotation find_supervision(const GoldAnswer& gold, const AnnotatedPassage& ann,
                                int max_nonzero = 3);

// Negative log of the total probability mass on the gold derivations,
// marginalized over answer types. Throws when no derivation is usable.
Tensor marginal_loss(const HeadsOutput& out, const GoldAnnotation& gold);

struct DecodedAnswer {
  AnswerType atype = AnswerType::PASSAGE_SPAN;
  std::vector<std::string> texts;  // single element except for MULTI_SPAN
  double log_prob = 0.0;
  AnswerDerivation derivation;
};

DecodedAnswer decode_answer(const HeadsOutput& out, const AnnotatedPassage& ann);

std::string span_text(const TextAnnotation& t, const Span& s);
std::string canonical_number(double v);  // shortest decimal, 5-place rounding

}  // namespace numgraph
