#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "numgraph/annotate.hpp"
#include "numgraph/params.hpp"
#include "numgraph/tensor.hpp"

namespace numgraph {

class EncoderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EncoderConfig {
  std::size_t vocab_size = 1024;
  std::size_t d_h = 64;       // even, >= 8
  std::size_t n_mix_layers = 1;
};

struct EncoderOutput {
  Tensor q_hat;  // [|Q|, d_h]
  Tensor p_hat;  // [|P|, d_h]
  Tensor m_q;    // [|Q|, d_h]
  Tensor m_p;    // [|P|, d_h]
  Tensor c;      // [d_h]
};

// FNV-1a bucket of a token's text.
std::size_t hash_token(const std::string& text, std::size_t vocab_size);

// Registers embedding, mix-layer, shared projection, and command parameters
// under the "encoder." prefix.
void init_encoder_params(const EncoderConfig& cfg, ParamStore& params,
                         std::mt19937_64& rng);

// Toy contextual encoder: hashed embedding + sinusoidal position signal (zero
// at position 0) through n_mix_layers residual blocks; m = W^M rows with one
// shared W^M; c = W^c * mean(q_hat). Empty question is an error.
EncoderOutput encode(const std::vector<Token>& question,
                     const std::vector<Token>& passage, const EncoderConfig& cfg,
                     const ParamStore& params);

// Pretrained-vector ingestion: q_hat/p_hat taken verbatim from the given rows,
// projections and c still computed in-graph.
EncoderOutput encode_with_rows(const Tensor& q_rows, const Tensor& p_rows,
                               const EncoderConfig& cfg, const ParamStore& params);

// Embedding file: u64 n_rows, u64 d, then row-major 64-bit floats.
Tensor load_embedding_rows(const std::string& path);
void save_embedding_rows(const std::string& path, const Tensor& rows);

}  // namespace numgraph
