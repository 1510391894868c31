#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/heads.hpp"

namespace numgraph {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DropExample {
  std::string passage_id;
  std::string passage;
  std::string query_id;
  std::string question;
  GoldAnswer gold;  // never empty for a loaded/generated example
  bool operator==(const DropExample&) const = default;
};

struct LoadStats {
  std::size_t n_loaded = 0;
  std::size_t n_skipped = 0;
};

// Streams examples out of a DROP-layout JSON file
// {passage_id: {"passage": ..., "qa_pairs": [{question, query_id, answer}]}}.
// Malformed or answerless records are skipped and counted.
LoadStats load_drop(const std::string& path,
                    const std::function<void(DropExample)>& sink);
std::vector<DropExample> load_drop_file(const std::string& path,
                                        LoadStats* stats = nullptr);

struct SyntheticSpec {
  std::size_t n_examples = 200;
  std::uint64_t seed = 7;
  double w_addition = 1.0;
  double w_subtraction = 1.0;
  double w_count = 1.0;
  double w_span = 1.0;
  double w_ordinal_span = 1.0;
};

// Templated scoring-drive passages with typed numbers, entities, and DATE
// distractors; every gold answer is derivable by at least one head.
std::vector<DropExample> generate_synthetic(const SyntheticSpec& spec);

// Writes DROP-layout JSON so generated sets feed the same pipeline.
void save_drop(const std::vector<DropExample>& examples, const std::string& path);

}  // namespace numgraph
