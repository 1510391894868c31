#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/heads.hpp"

namespace numgraph {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lowercases, splits on spaces and hyphens, strips punctuation from
// non-numeric tokens, canonicalizes numeric tokens, and drops articles.
std::vector<std::string> normalize_tokens(const std::string& span);
std::string normalize_span(const std::string& span);

struct ScoredPair {
  double em = 0.0;  // 0 or 100
  double f1 = 0.0;  // 0..100
};

// DROP-style scoring of one prediction against one gold answer, both given as
// span string lists. Multi-span F1 aligns predicted and gold spans one-to-one
// to maximize the summed pairwise token F1.
ScoredPair score_answer(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& gold);

// Gold answer rendered as the span strings the scorer compares against.
std::vector<std::string> gold_answer_texts(const GoldAnswer& gold);

// Bucket for per-type reporting: "number", "span", or "date".
const char* gold_answer_kind(const GoldAnswer& gold);

}  // namespace numgraph
