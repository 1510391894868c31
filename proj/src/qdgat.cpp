#include "numgraph/qdgat.hpp"

#include <cmath>

#include <json.hpp>

namespace numgraph {

const char* to_string(AblationMode m) {
  switch (m) {
    case AblationMode::FULL: return "full";
    case AblationMode::NH: return "NH";
    case AblationMode::NQ: return "NQ";
  }
  return "full";
}

void init_qdgat_params(std::size_t d_h, std::size_t T, ParamStore& params,
                       std::mt19937_64& rng) {
  double s = 1.0 / std::sqrt(double(d_h));
  params.create_uniform("qdgat.fc", {d_h, d_h}, s, rng);
  for (std::size_t t = 0; t < T; ++t)
    params.create_uniform("qdgat.dc" + std::to_string(t), {d_h, d_h}, s, rng);
  params.create_uniform("qdgat.qv", {2 * d_h, d_h}, s, rng);
  params.create_uniform("qdgat.kv", {2 * d_h, d_h}, s, rng);
  params.create_uniform("qdgat.vv", {2 * d_h, d_h}, s, rng);
  params.create_uniform("qdgat.qc", {d_h, d_h}, s, rng);
  params.create_uniform("qdgat.kc", {d_h, d_h}, s, rng);
  params.create_uniform("qdgat.vc", {d_h, d_h}, s, rng);
  for (int r = 0; r < kNumRelations; ++r)
    params.create_uniform("qdgat.att" + std::to_string(r), {2 * d_h, 1}, s, rng);
  params.create_uniform("qdgat.upd", {2 * d_h, d_h}, s, rng);
}

NodeStates init_node_inputs(const ReasoningGraph& g, const EncoderOutput& enc) {
  std::size_t V = g.nodes.size();
  std::size_t d = enc.m_q.cols();
  NodeStates st;
  if (V == 0) {
    st.v0 = Tensor::zeros({0, d});
    st.v_t = st.v0;
    return st;
  }
  std::size_t nq = enc.m_q.rows(), np = enc.m_p.rows();
  std::vector<double> sq(V * nq, 0.0), sp(V * np, 0.0);
  for (const auto& n : g.nodes) {
    bool from_q = n.source == SourceText::QUESTION;
    std::size_t limit = from_q ? nq : np;
    if (n.last >= limit)
      throw QdgatError("node " + std::to_string(n.id) + " span [" +
                       std::to_string(n.first) + "," + std::to_string(n.last) +
                       "] exceeds " + (from_q ? "question" : "passage") + " length " +
                       std::to_string(limit));
    double w = 1.0 / double(n.last - n.first + 1);
    for (std::size_t t = n.first; t <= n.last; ++t) {
      if (from_q)
        sq[n.id * nq + t] = w;
      else
        sp[n.id * np + t] = w;
    }
  }
  Tensor pick_q = matmul(Tensor::from({V, nq}, std::move(sq)), enc.m_q);
  Tensor pick_p = matmul(Tensor::from({V, np}, std::move(sp)), enc.m_p);
  st.v0 = add(pick_q, pick_p);
  st.v_t = st.v0;
  st.iteration = 0;
  return st;
}

namespace {

struct DirectedEdges {
  std::vector<std::size_t> src, dst;                    // one entry per (i -> j)
  std::vector<std::vector<std::size_t>> edges_of_rel;   // indices into src/dst
};

DirectedEdges directed_edges(const ReasoningGraph& g) {
  DirectedEdges de;
  de.edges_of_rel.assign(kNumRelations, {});
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (const auto& [j, rel] : g.adjacency[i]) {
      // Multiple relations on one pair appear as consecutive adjacency rows;
      // collapse them into one directed edge carrying the relation set.
      if (!de.src.empty() && de.src.back() == i && de.dst.back() == j) {
        de.edges_of_rel[int(rel)].push_back(de.src.size() - 1);
        continue;
      }
      de.src.push_back(i);
      de.dst.push_back(j);
      de.edges_of_rel[int(rel)].push_back(de.src.size() - 1);
    }
  }
  return de;
}

}  // namespace

NodeStates qdgat_single(const ReasoningGraph& g, const NodeStates& states,
                        const Tensor& c, const ParamStore& params, AblationMode mode,
                        AttentionRecord* record) {
  std::size_t V = g.nodes.size();
  std::size_t d = states.v0.cols();
  NodeStates next;
  next.v0 = states.v0;
  next.iteration = states.iteration + 1;
  if (V == 0) {
    next.v_t = states.v_t;
    if (record) record->iterations.emplace_back();
    return next;
  }

  // m^t from the command vector, with this iteration's W_dc.
  Tensor w_dc = params.get("qdgat.dc" + std::to_string(states.iteration));
  Tensor m_t = vecmat(elu(vecmat(c, params.get("qdgat.fc"))), w_dc);

  Tensor vcat = concat(states.v_t, states.v0);  // [V, 2d]
  Tensor x_q = matmul(vcat, params.get("qdgat.qv"));
  Tensor x_k = matmul(vcat, params.get("qdgat.kv"));
  Tensor x_v = matmul(vcat, params.get("qdgat.vv"));
  if (mode != AblationMode::NQ) {
    x_q = rowwise_mul(x_q, vecmat(m_t, params.get("qdgat.qc")));
    x_k = rowwise_mul(x_k, vecmat(m_t, params.get("qdgat.kc")));
    x_v = rowwise_mul(x_v, vecmat(m_t, params.get("qdgat.vc")));
  }

  DirectedEdges de = directed_edges(g);
  std::size_t E = de.src.size();
  Tensor x_hat;
  std::vector<double> alpha_values;
  if (E == 0) {
    x_hat = Tensor::zeros({V, d});
  } else {
    Tensor pair = concat(gather_rows(x_q, de.src), gather_rows(x_k, de.dst));  // [E, 2d]
    // Scores summed over the relations present on each edge.
    Tensor scores = Tensor::zeros({E, 1});
    for (int r = 0; r < kNumRelations; ++r) {
      const auto& idx = de.edges_of_rel[r];
      if (idx.empty()) continue;
      Tensor part = matmul(gather_rows(pair, idx), params.get("qdgat.att" + std::to_string(r)));
      scores = add(scores, scatter_add_rows(part, idx, E));
    }
    Tensor alpha = segment_softmax(reshape(leaky_relu(scores, 0.2), {E}), de.src, V);
    alpha_values = alpha.values();
    Tensor weighted = colwise_scale(gather_rows(x_v, de.dst), alpha);  // [E, d]
    x_hat = scatter_add_rows(weighted, de.src, V);
  }

  next.v_t = matmul(concat(states.v_t, x_hat), params.get("qdgat.upd"));

  if (record) {
    std::vector<AttentionRecord::Row> rows;
    std::size_t e = 0;
    while (e < E) {
      AttentionRecord::Row row;
      row.node = de.src[e];
      while (e < E && de.src[e] == row.node) {
        row.neighbors.push_back(de.dst[e]);
        row.alpha.push_back(alpha_values[e]);
        ++e;
      }
      rows.push_back(std::move(row));
    }
    record->iterations.push_back(std::move(rows));
  }
  return next;
}

QdgatResult qdgat_run(const ReasoningGraph& g, const EncoderOutput& enc,
                      const ParamStore& params, std::size_t T, AblationMode mode) {
  if (T == 0) throw QdgatError("qdgat_run: T must be >= 1");
  QdgatResult res;
  NodeStates st = init_node_inputs(g, enc);
  for (std::size_t t = 0; t < T; ++t) {
    try {
      st = qdgat_single(g, st, enc.c, params, mode, &res.attention);
    } catch (const TensorError& e) {
      throw QdgatError("iteration " + std::to_string(t) + ": " + e.what());
    }
  }
  res.v_T = st.v_t;
  return res;
}

Tensor merge_output(const EncoderOutput& enc, const ReasoningGraph& g,
                    const Tensor& v_T) {
  std::size_t nq = enc.m_q.rows(), np = enc.m_p.rows();
  std::size_t V = g.nodes.size();
  Tensor m = vstack(enc.m_q, enc.m_p);
  if (V == 0) return m;

  // Token -> covering node (later nodes win if spans ever overlap).
  std::vector<double> sel((nq + np) * V, 0.0);
  std::vector<int> owner(nq + np, -1);
  for (const auto& n : g.nodes) {
    std::size_t base = n.source == SourceText::QUESTION ? 0 : nq;
    for (std::size_t t = n.first; t <= n.last; ++t) owner[base + t] = int(n.id);
  }
  for (std::size_t t = 0; t < owner.size(); ++t)
    if (owner[t] >= 0) sel[t * V + owner[t]] = 1.0;
  return add(m, matmul(Tensor::from({nq + np, V}, std::move(sel)), v_T));
}

std::string attention_to_json(const AttentionRecord& rec) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& rows : rec.iterations) {
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& r : rows)
      jrows.push_back({{"node", r.node}, {"neighbors", r.neighbors}, {"alpha", r.alpha}});
    iters.push_back(std::move(jrows));
  }
  return nlohmann::json{{"iterations", std::move(iters)}}.dump(2);
}

}  // namespace numgraph
