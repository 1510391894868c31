#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace numgraph {

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t sentence_id = 0;
  bool operator==(const Token&) const = default;
};

// Fixed order; these indices double as graph relation ids.
enum class NumberType : int {
  NUMBER = 0,
  PERCENT,
  MONEY,
  TIME,
  DATE,
  DURATION,
  ORDINAL,
  YARD,
};
inline constexpr int kNumNumberTypes = 8;

const char* to_string(NumberType t);
std::optional<NumberType> number_type_from_string(const std::string& s);

struct DateValue {
  int year = 0;  // 0 = unspecified
  int month = 1;
  int day = 1;
  double scalar() const { return year * 10000.0 + month * 100.0 + day; }
  bool operator==(const DateValue&) const = default;
};

struct NumberMention {
  std::size_t first = 0;  // inclusive token span
  std::size_t last = 0;
  double value = 0.0;
  NumberType ntype = NumberType::NUMBER;
  DateValue date;  // meaningful only when ntype == DATE
  bool operator==(const NumberMention&) const = default;
};

struct EntityMention {  // label is always ENTITY
  std::size_t first = 0;
  std::size_t last = 0;
  bool operator==(const EntityMention&) const = default;
};

struct TextAnnotation {
  std::vector<Token> tokens;
  std::vector<NumberMention> numbers;
  std::vector<EntityMention> entities;
};

struct AnnotatedPassage {
  TextAnnotation question;
  TextAnnotation passage;
  std::vector<std::string> warnings;
};

// Whitespace/punctuation tokenizer. Punctuation is dropped except "%"/"$"
// (kept as tokens) and the hyphen of a number-unit compound ("45-yard" ->
// ["45","-","yard"]). Digit-internal , . : / stay inside the token. Sentence
// ids advance at . ! ? followed by whitespace and an uppercase letter, with an
// abbreviation guard.
std::vector<Token> tokenize(const std::string& text);

// Deterministic typing by priority: PERCENT > MONEY > YARD > DATE > TIME >
// DURATION > ORDINAL > NUMBER. Unparseable digit-bearing candidates are
// skipped and reported through warnings.
std::vector<NumberMention> extract_numbers(const std::vector<Token>& tokens,
                                           std::vector<std::string>* warnings = nullptr);

// Maximal same-sentence runs of capitalized tokens, excluding sentence-initial
// tokens unless they recur capitalized mid-sentence, and excluding any token
// covered by a number mention.
std::vector<EntityMention> extract_entities(const std::vector<Token>& tokens);

AnnotatedPassage annotate(const std::string& question, const std::string& passage);

// Enforces every structural invariant; throws AnnotationError naming the
// offending span.
void validate(const AnnotatedPassage& ann);

std::string serialize_annotations(const AnnotatedPassage& ann);
AnnotatedPassage parse_annotations(const std::string& json_text);
AnnotatedPassage load_annotations(const std::string& path);

}  // namespace numgraph
