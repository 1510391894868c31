#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "gradcheck.hpp"
#include "numgraph/encoder.hpp"

using namespace numgraph;

namespace {

std::vector<Token> toks(const std::vector<std::string>& words) {
  std::vector<Token> out;
  std::size_t pos = 0;
  for (const auto& w : words) {
    out.push_back({w, pos, pos + w.size(), 0});
    pos += w.size() + 1;
  }
  return out;
}

ParamStore make_params(const EncoderConfig& cfg, std::uint64_t seed) {
  ParamStore ps;
  std::mt19937_64 rng(seed);
  init_encoder_params(cfg, ps, rng);
  return ps;
}

}  // namespace

TEST_CASE("shapes and determinism") {
  EncoderConfig cfg{64, 16, 2};
  ParamStore ps = make_params(cfg, 5);
  auto q = toks({"how", "many", "yards"});
  auto p = toks({"a", "45", "-", "yard", "goal"});
  EncoderOutput a = encode(q, p, cfg, ps);
  CHECK(a.q_hat.shape() == std::vector<std::size_t>{3, 16});
  CHECK(a.p_hat.shape() == std::vector<std::size_t>{5, 16});
  CHECK(a.m_q.shape() == std::vector<std::size_t>{3, 16});
  CHECK(a.m_p.shape() == std::vector<std::size_t>{5, 16});
  CHECK(a.c.shape() == std::vector<std::size_t>{16});

  ParamStore ps2 = make_params(cfg, 5);
  EncoderOutput b = encode(q, p, cfg, ps2);
  CHECK(a.c.values() == b.c.values());
  CHECK(a.p_hat.values() == b.p_hat.values());
}

TEST_CASE("command vector depends on the question only") {
  EncoderConfig cfg{64, 16, 1};
  ParamStore ps = make_params(cfg, 7);
  auto q = toks({"who", "won"});
  EncoderOutput a = encode(q, toks({"long", "text", "here"}), cfg, ps);
  EncoderOutput b = encode(q, toks({"entirely", "different", "words", "now"}), cfg, ps);
  CHECK(a.c.values() == b.c.values());
}

TEST_CASE("one-token question with identity command map returns its embedding row") {
  EncoderConfig cfg{32, 8, 0};
  ParamStore ps = make_params(cfg, 11);
  // Overwrite W^c with the identity.
  auto& cmd = ps.get("encoder.cmd").mutable_values();
  std::fill(cmd.begin(), cmd.end(), 0.0);
  for (std::size_t i = 0; i < 8; ++i) cmd[i * 8 + i] = 1.0;

  auto q = toks({"total"});
  EncoderOutput out = encode(q, toks({"x"}), cfg, ps);
  std::size_t row = hash_token("total", cfg.vocab_size);
  const auto& emb = ps.get("encoder.emb").values();
  for (std::size_t k = 0; k < 8; ++k)
    CHECK(out.c.at(k) == doctest::Approx(emb[row * 8 + k]).epsilon(1e-12));
}

TEST_CASE("position signal vanishes at position 0 and separates repeats") {
  EncoderConfig cfg{32, 8, 0};
  ParamStore ps = make_params(cfg, 13);
  auto q = toks({"go", "go"});
  EncoderOutput out = encode(q, {}, cfg, ps);
  std::size_t row = hash_token("go", cfg.vocab_size);
  const auto& emb = ps.get("encoder.emb").values();
  bool differs = false;
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(out.q_hat.at(0, k) == doctest::Approx(emb[row * 8 + k]).epsilon(1e-12));
    if (out.q_hat.at(0, k) != out.q_hat.at(1, k)) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("swapping texts preserves per-position m rows (shared projection)") {
  EncoderConfig cfg{64, 16, 2};
  ParamStore ps = make_params(cfg, 17);
  auto a = toks({"alpha", "beta"});
  auto b = toks({"gamma", "delta", "eps"});
  EncoderOutput ab = encode(a, b, cfg, ps);
  EncoderOutput ba = encode(b, a, cfg, ps);
  CHECK(ab.m_q.values() == ba.m_p.values());
  CHECK(ab.m_p.values() == ba.m_q.values());
}

TEST_CASE("empty question is an error; bad config is an error") {
  EncoderConfig cfg{64, 16, 1};
  ParamStore ps = make_params(cfg, 19);
  CHECK_THROWS_AS(encode({}, toks({"x"}), cfg, ps), EncoderError);
  EncoderConfig odd{64, 15, 1};
  ParamStore dummy;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(init_encoder_params(odd, dummy, rng), EncoderError);
}

TEST_CASE("gradients flow into command and projection weights") {
  EncoderConfig cfg{32, 8, 1};
  ParamStore ps = make_params(cfg, 23);
  auto q = toks({"how", "many"});
  auto p = toks({"three", "two"});
  auto loss = [&] {
    EncoderOutput out = encode(q, p, cfg, ps);
    return add(sum_all(out.c), add(sum_all(out.m_p), sum_all(out.m_q)));
  };
  CHECK(ngtest::gradcheck(ps.get("encoder.cmd"), loss, 1e-5) < 1e-5);
  CHECK(ngtest::gradcheck(ps.get("encoder.proj_m"), loss, 1e-5) < 1e-5);
  CHECK(ngtest::gradcheck(ps.get("encoder.mix0.w"), loss, 1e-5) < 1e-4);
}

TEST_CASE("external embedding rows pass through exactly") {
  EncoderConfig cfg{32, 8, 3};
  ParamStore ps = make_params(cfg, 29);
  Tensor q_rows = Tensor::from({2, 8}, std::vector<double>(16, 0.25));
  Tensor p_rows = Tensor::zeros({3, 8});
  EncoderOutput out = encode_with_rows(q_rows, p_rows, cfg, ps);
  CHECK(out.q_hat.values() == q_rows.values());
  CHECK(out.m_p.values() == std::vector<double>(24, 0.0));  // zero rows project to zero

  Tensor wide = Tensor::zeros({2, 12});
  CHECK_THROWS_AS(encode_with_rows(wide, p_rows, cfg, ps), EncoderError);

  std::string path = "test_embed_rows.bin";
  save_embedding_rows(path, q_rows);
  Tensor back = load_embedding_rows(path);
  CHECK(back.shape() == q_rows.shape());
  CHECK(back.values() == q_rows.values());
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_embedding_rows("no_such_embedding.bin"), EncoderError);
}
