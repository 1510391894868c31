#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/annotate.hpp"

namespace numgraph {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// First 8 relations mirror NumberType indices; ENT_DIGIT links entities to
// numbers that share a sentence.
enum class Relation : int {
  NUMBER = 0,
  PERCENT,
  MONEY,
  TIME,
  DATE,
  DURATION,
  ORDINAL,
  YARD,
  ENT_DIGIT,
};
inline constexpr int kNumRelations = 9;

const char* to_string(Relation r);
inline Relation relation_of(NumberType t) { return static_cast<Relation>(static_cast<int>(t)); }

enum class NodeKind { NUMBER_NODE, ENTITY_NODE };
enum class SourceText { QUESTION, PASSAGE };

struct GraphNode {
  std::size_t id = 0;
  NodeKind kind = NodeKind::NUMBER_NODE;
  NumberType ntype = NumberType::NUMBER;  // number nodes only
  SourceText source = SourceText::PASSAGE;
  std::size_t first = 0;  // inclusive token span in the source text
  std::size_t last = 0;
  double value = 0.0;  // number nodes only
};

struct Edge {
  std::size_t a = 0;  // stored once per unordered pair, a < b
  std::size_t b = 0;
  Relation rel = Relation::NUMBER;
};

enum class GraphMode {
  FULL,
  NH,  // heterogeneity removed: numbers only, one shared relation
};

struct ReasoningGraph {
  std::vector<GraphNode> nodes;
  std::vector<Edge> edges;
  // Symmetric adjacency view: adjacency[i] holds (neighbor, relation), sorted.
  std::vector<std::vector<std::pair<std::size_t, Relation>>> adjacency;
};

struct GraphStats {
  std::size_t n_nodes = 0;
  std::size_t n_number_nodes = 0;
  std::size_t n_entity_nodes = 0;
  std::size_t edge_pairs[kNumRelations] = {};
  std::size_t total_pairs = 0;
};

ReasoningGraph build_graph(const AnnotatedPassage& ann, GraphMode mode = GraphMode::FULL);

// All neighbors j of i with the full relation set R_{i,j}, ascending by j.
std::vector<std::pair<std::size_t, std::vector<Relation>>> neighbors(
    const ReasoningGraph& g, std::size_t i);

GraphStats graph_stats(const ReasoningGraph& g);

std::string graph_to_json(const ReasoningGraph& g);

}  // namespace numgraph
