#include "numgraph/graph.hpp"

#include <algorithm>

#include <json.hpp>

namespace numgraph {

using nlohmann::json;

const char* to_string(Relation r) {
  if (r == Relation::ENT_DIGIT) return "ENT_DIGIT";
  return to_string(static_cast<NumberType>(static_cast<int>(r)));
}

namespace {

void add_nodes(const TextAnnotation& t, SourceText source, GraphMode mode,
               std::vector<GraphNode>& nodes) {
  for (const auto& m : t.numbers) {
    GraphNode n;
    n.id = nodes.size();
    n.kind = NodeKind::NUMBER_NODE;
    n.ntype = m.ntype;
    n.source = source;
    n.first = m.first;
    n.last = m.last;
    n.value = m.value;
    nodes.push_back(n);
  }
  if (mode == GraphMode::NH) return;
  for (const auto& e : t.entities) {
    GraphNode n;
    n.id = nodes.size();
    n.kind = NodeKind::ENTITY_NODE;
    n.source = source;
    n.first = e.first;
    n.last = e.last;
    nodes.push_back(n);
  }
}

std::size_t sentence_of(const AnnotatedPassage& ann, const GraphNode& n) {
  const auto& toks =
      n.source == SourceText::QUESTION ? ann.question.tokens : ann.passage.tokens;
  return toks[n.first].sentence_id;
}

}  // namespace

ReasoningGraph build_graph(const AnnotatedPassage& ann, GraphMode mode) {
  ReasoningGraph g;
  add_nodes(ann.question, SourceText::QUESTION, mode, g.nodes);
  add_nodes(ann.passage, SourceText::PASSAGE, mode, g.nodes);

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
      const GraphNode& a = g.nodes[i];
      const GraphNode& b = g.nodes[j];
      bool both_numbers =
          a.kind == NodeKind::NUMBER_NODE && b.kind == NodeKind::NUMBER_NODE;
      if (both_numbers) {
        if (mode == GraphMode::NH) {
          g.edges.push_back({i, j, Relation::NUMBER});
        } else if (a.ntype == b.ntype) {
          g.edges.push_back({i, j, relation_of(a.ntype)});
        }
        continue;
      }
      if (a.kind == NodeKind::ENTITY_NODE && b.kind == NodeKind::ENTITY_NODE) continue;
      // Entity-number pair: same source text and same sentence.
      if (a.source == b.source && sentence_of(ann, a) == sentence_of(ann, b))
        g.edges.push_back({i, j, Relation::ENT_DIGIT});
    }
  }

  g.adjacency.assign(g.nodes.size(), {});
  for (const auto& e : g.edges) {
    g.adjacency[e.a].emplace_back(e.b, e.rel);
    g.adjacency[e.b].emplace_back(e.a, e.rel);
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

std::vector<std::pair<std::size_t, std::vector<Relation>>> neighbors(
    const ReasoningGraph& g, std::size_t i) {
  if (i >= g.nodes.size())
    throw GraphError("neighbors: node id " + std::to_string(i) + " out of range (" +
                     std::to_string(g.nodes.size()) + " nodes)");
  std::vector<std::pair<std::size_t, std::vector<Relation>>> out;
  for (const auto& [j, rel] : g.adjacency[i]) {
    if (!out.empty() && out.back().first == j)
      out.back().second.push_back(rel);
    else
      out.push_back({j, {rel}});
  }
  return out;
}

GraphStats graph_stats(const ReasoningGraph& g) {
  GraphStats s;
  s.n_nodes = g.nodes.size();
  for (const auto& n : g.nodes)
    (n.kind == NodeKind::NUMBER_NODE ? s.n_number_nodes : s.n_entity_nodes)++;
  for (const auto& e : g.edges) {
    s.edge_pairs[static_cast<int>(e.rel)]++;
    s.total_pairs++;
  }
  return s;
}

std::string graph_to_json(const ReasoningGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json o = {{"id", n.id},
              {"kind", n.kind == NodeKind::NUMBER_NODE ? "number" : "entity"},
              {"source", n.source == SourceText::QUESTION ? "question" : "passage"},
              {"span", {n.first, n.last}}};
    if (n.kind == NodeKind::NUMBER_NODE) {
      o["ntype"] = to_string(n.ntype);
      o["value"] = n.value;
    }
    nodes.push_back(std::move(o));
  }
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.a, e.b, to_string(e.rel)});
  return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}}.dump(2);
}

}  // namespace numgraph
