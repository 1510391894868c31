#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "gradcheck.hpp"
#include "numgraph/qdgat.hpp"

using namespace numgraph;

namespace {

// One-token mention helper: (sentence_id, ntype or -1 for entity) per token.
AnnotatedPassage token_mentions(const std::vector<std::pair<int, int>>& plan) {
  AnnotatedPassage ann;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    ann.passage.tokens.push_back(
        {"t" + std::to_string(i), pos, pos + 2, std::size_t(plan[i].first)});
    pos += 3;
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].second < 0) {
      ann.passage.entities.push_back({i, i});
    } else {
      NumberMention m;
      m.first = m.last = i;
      m.value = double(i + 1);
      m.ntype = static_cast<NumberType>(plan[i].second);
      ann.passage.numbers.push_back(m);
    }
  }
  validate(ann);
  return ann;
}

EncoderOutput fake_encoder(std::size_t nq, std::size_t np, std::size_t d,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto mat = [&](std::size_t r, std::size_t c) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = u(rng);
    return Tensor::from({r, c}, std::move(v));
  };
  EncoderOutput enc;
  enc.q_hat = mat(nq, d);
  enc.p_hat = mat(np, d);
  enc.m_q = mat(nq, d);
  enc.m_p = mat(np, d);
  std::vector<double> c(d);
  for (auto& x : c) x = u(rng);
  enc.c = Tensor::from({d}, std::move(c));
  return enc;
}

// ---- independent plain-double forward (no Tensor machinery) -----------------

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

Vec bvecmat(const Vec& x, const Mat& w) {
  Vec out(w[0].size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t o = 0; o < out.size(); ++o) out[o] += x[i] * w[i][o];
  return out;
}

Vec bconcat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

struct BruteOut {
  Mat v;
  std::vector<std::map<std::size_t, double>> alpha;  // per node: neighbor -> weight
};

BruteOut brute_iteration(const ReasoningGraph& g, const Mat& v0, const Mat& vt,
                         const Vec& c, const std::map<std::string, Mat>& W,
                         std::size_t iter, bool directed_by_question) {
  std::size_t V = g.nodes.size();
  std::size_t d = v0.empty() ? 0 : v0[0].size();
  auto elu1 = [](double x) { return x > 0 ? x : std::expm1(x); };
  auto leaky = [](double x) { return x > 0 ? x : 0.2 * x; };

  Vec pre = bvecmat(c, W.at("qdgat.fc"));
  for (auto& x : pre) x = elu1(x);
  Vec m = bvecmat(pre, W.at("qdgat.dc" + std::to_string(iter)));
  Vec cq = bvecmat(m, W.at("qdgat.qc"));
  Vec ck = bvecmat(m, W.at("qdgat.kc"));
  Vec cv = bvecmat(m, W.at("qdgat.vc"));

  Mat xq(V), xk(V), xv(V);
  for (std::size_t i = 0; i < V; ++i) {
    Vec X = bconcat(vt[i], v0[i]);
    xq[i] = bvecmat(X, W.at("qdgat.qv"));
    xk[i] = bvecmat(X, W.at("qdgat.kv"));
    xv[i] = bvecmat(X, W.at("qdgat.vv"));
    if (directed_by_question)
      for (std::size_t o = 0; o < d; ++o) {
        xq[i][o] *= cq[o];
        xk[i][o] *= ck[o];
        xv[i][o] *= cv[o];
      }
  }

  BruteOut out;
  out.v.assign(V, Vec(d, 0.0));
  out.alpha.assign(V, {});
  for (std::size_t i = 0; i < V; ++i) {
    auto nbrs = neighbors(g, i);
    Vec xhat(d, 0.0);
    if (!nbrs.empty()) {
      Vec scores;
      for (const auto& [j, rels] : nbrs) {
        double s = 0.0;
        for (Relation r : rels)
          s += bvecmat(bconcat(xq[i], xk[j]),
                       W.at("qdgat.att" + std::to_string(int(r))))[0];
        scores.push_back(leaky(s));
      }
      double mx = *std::max_element(scores.begin(), scores.end());
      double z = 0.0;
      for (double& s : scores) {
        s = std::exp(s - mx);
        z += s;
      }
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        double a = scores[k] / z;
        out.alpha[i][nbrs[k].first] = a;
        for (std::size_t o = 0; o < d; ++o) xhat[o] += a * xv[nbrs[k].first][o];
      }
    }
    out.v[i] = bvecmat(bconcat(vt[i], xhat), W.at("qdgat.upd"));
  }
  return out;
}

std::map<std::string, Mat> extract_weights(const ParamStore& ps) {
  std::map<std::string, Mat> out;
  for (const auto& [name, t] : ps.entries()) out[name] = to_mat(t);
  return out;
}

}  // namespace

TEST_CASE("fixed tiny instance matches the precomputed forward exactly") {
  // 3-node same-type clique, d_h = 2, hand-set weights.
  AnnotatedPassage ann = token_mentions({{0, 0}, {0, 0}, {0, 0}});
  ReasoningGraph g = build_graph(ann);
  REQUIRE(g.edges.size() == 3);

  ParamStore ps;
  ps.create("qdgat.fc", {2, 2}, {1, 0, 0, 1});
  ps.create("qdgat.dc0", {2, 2}, {0.5, 0, 0, 0.5});
  ps.create("qdgat.qc", {2, 2}, {1, 0, 0, 2});
  ps.create("qdgat.kc", {2, 2}, {2, 0, 0, 1});
  ps.create("qdgat.vc", {2, 2}, {1, 0, 0, 1});
  ps.create("qdgat.qv", {4, 2}, {0.1, 0.5, 0.2, 0.6, 0.3, 0.7, 0.4, 0.8});
  ps.create("qdgat.kv", {4, 2}, {0.2, -0.1, 0.0, 0.3, -0.2, 0.1, 0.4, 0.0});
  ps.create("qdgat.vv", {4, 2}, {0.3, 0.0, 0.1, -0.1, 0.0, 0.2, -0.1, 0.4});
  ps.create("qdgat.att0", {4, 1}, {0.5, -0.25, 0.125, 0.3});
  ps.create("qdgat.upd", {4, 2}, {0.2, -0.3, 0.1, 0.4, 0.5, 0.0, -0.2, 0.6});

  NodeStates st;
  st.v0 = Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1});
  st.v_t = st.v0;
  Tensor c = Tensor::from({2}, {1, -1});

  AttentionRecord rec;
  NodeStates nx = qdgat_single(g, st, c, ps, AblationMode::FULL, &rec);

  const double kEps = 1e-12;
  CHECK(nx.v_t.at(0, 0) == doctest::Approx(0.2627848223531423).epsilon(kEps));
  CHECK(nx.v_t.at(0, 1) == doctest::Approx(-0.37585446705942693).epsilon(kEps));
  CHECK(nx.v_t.at(1, 0) == doctest::Approx(0.19722640377705952).epsilon(kEps));
  CHECK(nx.v_t.at(1, 1) == doctest::Approx(0.33332078866882153).epsilon(kEps));
  CHECK(nx.v_t.at(2, 0) == doctest::Approx(0.35293294274478265).epsilon(kEps));
  CHECK(nx.v_t.at(2, 1) == doctest::Approx(0.052488773869798215).epsilon(kEps));

  REQUIRE(rec.iterations.size() == 1);
  REQUIRE(rec.iterations[0].size() == 3);
  const auto& r0 = rec.iterations[0][0];
  CHECK(r0.neighbors == std::vector<std::size_t>{1, 2});
  CHECK(r0.alpha[0] == doctest::Approx(0.5).epsilon(kEps));
  CHECK(r0.alpha[1] == doctest::Approx(0.5).epsilon(kEps));
  const auto& r1 = rec.iterations[0][1];
  CHECK(r1.alpha[0] == doctest::Approx(0.49461156490731517).epsilon(kEps));
  CHECK(r1.alpha[1] == doctest::Approx(0.5053884350926848).epsilon(kEps));
  const auto& r2 = rec.iterations[0][2];
  CHECK(r2.alpha[0] == doctest::Approx(0.49461156490731517).epsilon(kEps));
  CHECK(r2.alpha[1] == doctest::Approx(0.5053884350926848).epsilon(kEps));
}

TEST_CASE("random instances match an independent plain-loop forward") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> n_nodes(1, 9);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<int> advance(0, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  for (int iter = 0; iter < 25; ++iter) {
    int V = n_nodes(rng);
    std::vector<std::pair<int, int>> plan;
    int sid = 0;
    for (int i = 0; i < V; ++i) {
      int k = kind(rng);
      if (i > 0 && advance(rng) == 0) ++sid;
      plan.push_back({sid, k == 3 ? -1 : k % kNumNumberTypes});
    }
    AnnotatedPassage ann = token_mentions(plan);
    ReasoningGraph g = build_graph(ann);

    std::size_t d = 4, T = 3;
    ParamStore ps;
    init_qdgat_params(d, T, ps, rng);

    std::vector<double> v0_data(g.nodes.size() * d);
    for (auto& x : v0_data) x = u(rng);
    std::vector<double> c_data(d);
    for (auto& x : c_data) x = u(rng);
    Tensor c = Tensor::from({d}, c_data);

    bool directed = iter % 3 != 0;  // exercise NQ too
    AblationMode mode = directed ? AblationMode::FULL : AblationMode::NQ;

    NodeStates st;
    st.v0 = Tensor::from({g.nodes.size(), d}, v0_data);
    st.v_t = st.v0;

    Mat bv0 = to_mat(st.v0), bvt = bv0;
    auto W = extract_weights(ps);

    AttentionRecord rec;
    for (std::size_t t = 0; t < T; ++t) {
      st = qdgat_single(g, st, c, ps, mode, &rec);
      BruteOut ref = brute_iteration(g, bv0, bvt, c_data, W, t, directed);
      bvt = ref.v;
      for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t o = 0; o < d; ++o)
          CHECK(st.v_t.at(i, o) == doctest::Approx(ref.v[i][o]).epsilon(1e-9));
      for (const auto& row : rec.iterations[t]) {
        double sum = 0.0;
        for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
          CHECK(row.alpha[k] ==
                doctest::Approx(ref.alpha[row.node].at(row.neighbors[k])).epsilon(1e-9));
          sum += row.alpha[k];
          CHECK(row.alpha[k] >= 0.0);
          CHECK(row.alpha[k] <= 1.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("singleton neighborhood gets weight one") {
  AnnotatedPassage ann = token_mentions({{0, 0}, {0, 0}});
  ReasoningGraph g = build_graph(ann);
  std::mt19937_64 rng(5);
  ParamStore ps;
  init_qdgat_params(4, 1, ps, rng);
  NodeStates st;
  st.v0 = Tensor::from({2, 4}, std::vector<double>(8, 0.3));
  st.v_t = st.v0;
  AttentionRecord rec;
  qdgat_single(g, st, Tensor::full({4}, 0.2), ps, AblationMode::FULL, &rec);
  for (const auto& row : rec.iterations[0]) {
    REQUIRE(row.alpha.size() == 1);
    CHECK(row.alpha[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("init_node_inputs averages covered rows") {
  AnnotatedPassage ann;
  ann.question.tokens = {{"how", 0, 3, 0}, {"many", 4, 8, 0}};
  ann.passage.tokens = {{"a", 0, 1, 0}, {"b", 2, 3, 0}, {"c", 4, 5, 0}};
  NumberMention qn;
  qn.first = qn.last = 1;
  ann.question.numbers.push_back(qn);
  ann.passage.entities.push_back({0, 1});  // two-token entity
  ReasoningGraph g = build_graph(ann);
  REQUIRE(g.nodes.size() == 2);

  std::mt19937_64 rng(3);
  EncoderOutput enc = fake_encoder(2, 3, 4, rng);
  NodeStates st = init_node_inputs(g, enc);
  // Node 0: question number at token 1 -> exact m_q row 1.
  for (std::size_t o = 0; o < 4; ++o)
    CHECK(st.v0.at(0, o) == doctest::Approx(enc.m_q.at(1, o)).epsilon(1e-12));
  // Node 1: passage entity over tokens 0..1 -> mean of m_p rows 0 and 1.
  for (std::size_t o = 0; o < 4; ++o)
    CHECK(st.v0.at(1, o) ==
          doctest::Approx(0.5 * (enc.m_p.at(0, o) + enc.m_p.at(1, o))).epsilon(1e-12));

  // Span past the end of the passage is an error.
  ann.passage.entities[0].last = 7;
  AnnotatedPassage bad = ann;
  ReasoningGraph gb;
  gb.nodes = g.nodes;
  gb.nodes[1].last = 7;
  gb.adjacency = g.adjacency;
  CHECK_THROWS_AS(init_node_inputs(gb, enc), QdgatError);
}

TEST_CASE("qdgat_run basics: empty graph, T=0, determinism") {
  std::mt19937_64 rng(8);
  ParamStore ps;
  init_qdgat_params(8, 2, ps, rng);
  EncoderOutput enc = fake_encoder(2, 3, 8, rng);

  AnnotatedPassage none;
  none.question.tokens = {{"q", 0, 1, 0}};
  none.passage.tokens = {{"p", 0, 1, 0}};
  ReasoningGraph g0 = build_graph(none);
  QdgatResult r0 = qdgat_run(g0, enc, ps, 2);
  CHECK(r0.v_T.rows() == 0);
  CHECK_THROWS_AS(qdgat_run(g0, enc, ps, 0), QdgatError);

  AnnotatedPassage ann = token_mentions({{0, 0}, {0, 0}, {0, 4}, {0, -1}});
  ReasoningGraph g = build_graph(ann);
  EncoderOutput enc2 = fake_encoder(2, 4, 8, rng);
  QdgatResult a = qdgat_run(g, enc2, ps, 2);
  QdgatResult b = qdgat_run(g, enc2, ps, 2);
  CHECK(a.v_T.values() == b.v_T.values());
  CHECK(a.attention.iterations.size() == 2);

  std::string js = attention_to_json(a.attention);
  CHECK(js.find("\"iterations\"") != std::string::npos);
  CHECK(js.find("\"alpha\"") != std::string::npos);
}

TEST_CASE("locality: perturbations travel at most one hop per iteration") {
  // Path in node ids: 0-4-1-2-5-3 (numbers 0..3, entities 4,5).
  AnnotatedPassage ann =
      token_mentions({{0, 0}, {0, -1}, {0, 4}, {1, 4}, {1, -1}, {1, 3}});
  ReasoningGraph g = build_graph(ann);
  REQUIRE(g.edges.size() == 5);

  std::mt19937_64 rng(31);
  std::size_t d = 4;
  ParamStore ps;
  init_qdgat_params(d, 2, ps, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> base(g.nodes.size() * d);
  for (auto& x : base) x = u(rng);
  Tensor c = Tensor::from({d}, {0.1, -0.2, 0.3, 0.4});

  auto run2 = [&](const std::vector<double>& v0data) {
    NodeStates st;
    st.v0 = Tensor::from({g.nodes.size(), d}, v0data);
    st.v_t = st.v0;
    st = qdgat_single(g, st, c, ps);
    st = qdgat_single(g, st, c, ps);
    return st.v_t.values();
  };

  std::vector<double> perturbed = base;
  for (std::size_t o = 0; o < d; ++o) perturbed[3 * d + o] += 0.37;  // node 3

  auto vt = run2(base);
  auto vp = run2(perturbed);
  // Node 0 is 5 hops away, node 1 is 3 hops away: unchanged after 2 iterations.
  for (std::size_t o = 0; o < d; ++o) {
    CHECK(vp[0 * d + o] == vt[0 * d + o]);
    CHECK(vp[1 * d + o] == vt[1 * d + o]);
  }
  // Node 2 is exactly 2 hops away: the perturbation has arrived.
  double delta = 0.0;
  for (std::size_t o = 0; o < d; ++o) delta += std::abs(vp[2 * d + o] - vt[2 * d + o]);
  CHECK(delta > 1e-9);
}

TEST_CASE("question direction: NQ ignores c, full model feels it") {
  AnnotatedPassage ann = token_mentions({{0, 0}, {0, 0}, {0, -1}});
  ReasoningGraph g = build_graph(ann);
  std::mt19937_64 rng(17);
  ParamStore ps;
  init_qdgat_params(6, 3, ps, rng);
  EncoderOutput enc = fake_encoder(2, 3, 6, rng);

  QdgatResult base = qdgat_run(g, enc, ps, 3, AblationMode::NQ);
  EncoderOutput shifted = enc;
  std::vector<double> c2 = enc.c.values();
  for (auto& x : c2) x += 0.918;
  shifted.c = Tensor::from({6}, c2);
  QdgatResult moved = qdgat_run(g, shifted, ps, 3, AblationMode::NQ);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.v_T.numel(); ++i)
    worst = std::max(worst, std::abs(base.v_T.at(i) - moved.v_T.at(i)));
  CHECK(worst < 1e-9);

  // Full mode: gradient of sum(v_T) w.r.t. c is nonzero.
  EncoderOutput leafc = enc;
  leafc.c = Tensor::leaf({6}, enc.c.values());
  {
    Tape tape;
    QdgatResult full = qdgat_run(g, leafc, ps, 3, AblationMode::FULL);
    tape.backward(sum_all(full.v_T));
  }
  double gmag = 0.0;
  for (double x : leafc.c.grad()) gmag += std::abs(x);
  CHECK(gmag > 1e-8);
}

TEST_CASE("merge_output adds node rows to covered tokens only") {
  AnnotatedPassage ann;
  ann.question.tokens = {{"q0", 0, 2, 0}, {"q1", 3, 5, 0}};
  ann.passage.tokens = {{"p0", 0, 2, 0}, {"p1", 3, 5, 0}, {"p2", 6, 8, 0}};
  NumberMention m;
  m.first = m.last = 1;
  ann.passage.numbers.push_back(m);
  ReasoningGraph g = build_graph(ann);

  std::mt19937_64 rng(41);
  EncoderOutput enc = fake_encoder(2, 3, 4, rng);

  Tensor z = Tensor::from({1, 4}, {1, 2, 3, 4});
  Tensor U = merge_output(enc, g, z);
  REQUIRE(U.shape() == std::vector<std::size_t>{5, 4});
  for (std::size_t o = 0; o < 4; ++o) {
    CHECK(U.at(0, o) == enc.m_q.at(0, o));
    CHECK(U.at(1, o) == enc.m_q.at(1, o));
    CHECK(U.at(2, o) == enc.m_p.at(0, o));
    CHECK(U.at(3, o) == doctest::Approx(enc.m_p.at(1, o) + z.at(0, o)).epsilon(1e-12));
    CHECK(U.at(4, o) == enc.m_p.at(2, o));
  }

  // Zero residual leaves M untouched; empty graph returns M exactly.
  Tensor U0 = merge_output(enc, g, Tensor::zeros({1, 4}));
  Tensor M = vstack(enc.m_q, enc.m_p);
  CHECK(U0.values() == M.values());
  AnnotatedPassage bare;
  bare.question.tokens = ann.question.tokens;
  bare.passage.tokens = ann.passage.tokens;
  CHECK(merge_output(enc, build_graph(bare), Tensor::zeros({0, 4})).values() ==
        M.values());
}

TEST_CASE("gradients through the whole layer stack check out") {
  AnnotatedPassage ann = token_mentions({{0, 0}, {0, 0}, {0, -1}, {0, 4}});
  ReasoningGraph g = build_graph(ann);
  std::mt19937_64 rng(53);
  std::size_t d = 4;
  ParamStore ps;
  init_qdgat_params(d, 2, ps, rng);
  EncoderOutput enc = fake_encoder(2, 4, d, rng);

  auto loss = [&] {
    QdgatResult r = qdgat_run(g, enc, ps, 2);
    Tensor U = merge_output(enc, g, r.v_T);
    return sum_all(mul(U, U));
  };
  for (const char* name : {"qdgat.fc", "qdgat.dc0", "qdgat.dc1", "qdgat.qv",
                           "qdgat.kv", "qdgat.vv", "qdgat.qc", "qdgat.kc",
                           "qdgat.vc", "qdgat.att0", "qdgat.att4", "qdgat.att8",
                           "qdgat.upd"}) {
    CHECK(ngtest::gradcheck(ps.get(name), loss, 1e-5) < 1e-4);
  }
}
