#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/encoder.hpp"
#include "numgraph/graph.hpp"
#include "numgraph/params.hpp"
#include "numgraph/tensor.hpp"

namespace numgraph {

class QdgatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AblationMode {
  FULL,
  NH,  // heterogeneity removed (graph side: numbers only, one relation)
  NQ,  // question direction removed (modulation replaced by ones)
};

const char* to_string(AblationMode m);

struct NodeStates {
  Tensor v0;   // [|V|, d_h]
  Tensor v_t;  // [|V|, d_h]
  std::size_t iteration = 0;
};

struct AttentionRecord {
  struct Row {
    std::size_t node = 0;
    std::vector<std::size_t> neighbors;  // ascending node ids
    std::vector<double> alpha;           // sums to 1 over the row
  };
  std::vector<std::vector<Row>> iterations;
};

// Registers W_fc, per-iteration W_dc, query/key/value projections, one
// attention vector per relation, and the update matrix, all under "qdgat.".
void init_qdgat_params(std::size_t d_h, std::size_t T, ParamStore& params,
                       std::mt19937_64& rng);

// v0 row = mean of the projected token rows covered by the node's span.
NodeStates init_node_inputs(const ReasoningGraph& g, const EncoderOutput& enc);

// One message-passing iteration t -> t+1 with the iteration's W_dc.
NodeStates qdgat_single(const ReasoningGraph& g, const NodeStates& states,
                        const Tensor& c, const ParamStore& params,
                        AblationMode mode = AblationMode::FULL,
                        AttentionRecord* record = nullptr);

struct QdgatResult {
  Tensor v_T;  // [|V|, d_h]
  AttentionRecord attention;
};

QdgatResult qdgat_run(const ReasoningGraph& g, const EncoderOutput& enc,
                      const ParamStore& params, std::size_t T,
                      AblationMode mode = AblationMode::FULL);

// U rows: question tokens first, then passage tokens. Tokens covered by a node
// span get that node's v_T row added; all others pass through unchanged.
Tensor merge_output(const EncoderOutput& enc, const ReasoningGraph& g,
                    const Tensor& v_T);

std::string attention_to_json(const AttentionRecord& rec);

}  // namespace numgraph
