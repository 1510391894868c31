#include "numgraph/encoder.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace numgraph {

std::size_t hash_token(const std::string& text, std::size_t vocab_size) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h % vocab_size);
}

namespace {

void check_config(const EncoderConfig& cfg) {
  if (cfg.d_h < 8 || cfg.d_h % 2 != 0)
    throw EncoderError("encoder: d_h must be even and >= 8, got " +
                       std::to_string(cfg.d_h));
  if (cfg.vocab_size == 0) throw EncoderError("encoder: vocab_size must be positive");
}

// Sine-only position signal so position 0 contributes exactly nothing.
Tensor position_signal(std::size_t n, std::size_t d) {
  std::vector<double> data(n * d);
  for (std::size_t pos = 0; pos < n; ++pos)
    for (std::size_t k = 0; k < d; ++k)
      data[pos * d + k] =
          std::sin(double(pos) / std::pow(10000.0, double(k) / double(d)));
  return Tensor::from({n, d}, std::move(data));
}

Tensor embed(const std::vector<Token>& toks, const EncoderConfig& cfg,
             const ParamStore& params) {
  std::vector<std::size_t> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) ids.push_back(hash_token(t.text, cfg.vocab_size));
  Tensor rows = gather_rows(params.get("encoder.emb"), ids);
  return add(rows, position_signal(toks.size(), cfg.d_h));
}

Tensor mix(Tensor h, const EncoderConfig& cfg, const ParamStore& params) {
  for (std::size_t l = 0; l < cfg.n_mix_layers; ++l) {
    std::string base = "encoder.mix" + std::to_string(l);
    Tensor lin = rowwise_add(matmul(h, params.get(base + ".w")), params.get(base + ".b"));
    h = add(h, elu(lin));
  }
  return h;
}

EncoderOutput finish(Tensor q_hat, Tensor p_hat, const ParamStore& params) {
  EncoderOutput out;
  out.q_hat = q_hat;
  out.p_hat = p_hat;
  Tensor w_m = params.get("encoder.proj_m");
  out.m_q = matmul(q_hat, w_m);
  out.m_p = matmul(p_hat, w_m);
  out.c = vecmat(mean_rows(q_hat), params.get("encoder.cmd"));
  return out;
}

}  // namespace

void init_encoder_params(const EncoderConfig& cfg, ParamStore& params,
                         std::mt19937_64& rng) {
  check_config(cfg);
  double s = 1.0 / std::sqrt(double(cfg.d_h));
  params.create_uniform("encoder.emb", {cfg.vocab_size, cfg.d_h}, 0.5, rng);
  for (std::size_t l = 0; l < cfg.n_mix_layers; ++l) {
    std::string base = "encoder.mix" + std::to_string(l);
    params.create_uniform(base + ".w", {cfg.d_h, cfg.d_h}, s, rng);
    params.create_zeros(base + ".b", {cfg.d_h});
  }
  params.create_uniform("encoder.proj_m", {cfg.d_h, cfg.d_h}, s, rng);
  params.create_uniform("encoder.cmd", {cfg.d_h, cfg.d_h}, s, rng);
}

EncoderOutput encode(const std::vector<Token>& question,
                     const std::vector<Token>& passage, const EncoderConfig& cfg,
                     const ParamStore& params) {
  check_config(cfg);
  if (question.empty())
    throw EncoderError("encode: empty question (command vector undefined)");
  Tensor q_hat = mix(embed(question, cfg, params), cfg, params);
  Tensor p_hat = passage.empty()
                     ? Tensor::zeros({0, cfg.d_h})
                     : mix(embed(passage, cfg, params), cfg, params);
  return finish(q_hat, p_hat, params);
}

EncoderOutput encode_with_rows(const Tensor& q_rows, const Tensor& p_rows,
                               const EncoderConfig& cfg, const ParamStore& params) {
  check_config(cfg);
  if (q_rows.ndim() != 2 || q_rows.rows() == 0)
    throw EncoderError("encode_with_rows: question rows must be a nonempty matrix");
  if (q_rows.cols() != cfg.d_h || (p_rows.numel() > 0 && p_rows.cols() != cfg.d_h))
    throw EncoderError("encode_with_rows: embedding width " +
                       std::to_string(q_rows.cols()) + " does not match d_h " +
                       std::to_string(cfg.d_h));
  return finish(q_rows, p_rows, params);
}

Tensor load_embedding_rows(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw EncoderError("cannot open embedding file '" + path + "'");
  std::uint64_t n = 0, d = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  is.read(reinterpret_cast<char*>(&d), sizeof(d));
  if (!is) throw EncoderError("embedding file '" + path + "' has a truncated header");
  std::vector<double> data(n * d);
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!is) throw EncoderError("embedding file '" + path + "' has truncated rows");
  return Tensor::from({std::size_t(n), std::size_t(d)}, std::move(data));
}

void save_embedding_rows(const std::string& path, const Tensor& rows) {
  if (rows.ndim() != 2) throw EncoderError("save_embedding_rows: expects a matrix");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw EncoderError("cannot open embedding file '" + path + "' for writing");
  std::uint64_t n = rows.rows(), d = rows.cols();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&d), sizeof(d));
  os.write(reinterpret_cast<const char*>(rows.values().data()),
           static_cast<std::streamsize>(rows.numel() * sizeof(double)));
  if (!os) throw EncoderError("write to embedding file '" + path + "' failed");
}

}  // namespace numgraph
