#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "numgraph/tensor.hpp"

namespace numgraph {

// Ordered collection of named trainable leaves. Order is creation order and is
// part of the checkpoint contract.
class ParamStore {
 public:
  Tensor create(const std::string& name, std::vector<std::size_t> shape,
                std::vector<double> data);
  // Uniform(-scale, scale) init drawn from rng in row-major order.
  Tensor create_uniform(const std::string& name, std::vector<std::size_t> shape,
                        double scale, std::mt19937_64& rng);
  Tensor create_zeros(const std::string& name, std::vector<std::size_t> shape);

  bool has(const std::string& name) const;
  Tensor get(const std::string& name) const;  // throws TensorError if absent

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_scalars() const;

  void zero_grad();
  // Deep copy with fresh leaves (worker replicas).
  ParamStore clone() const;
  // Adds other's grads into this store's grads; stores must match exactly.
  void accumulate_grads_from(const ParamStore& other);
  void copy_values_from(const ParamStore& other);

  // Binary checkpoint: magic, version, JSON meta (with a param manifest merged
  // in), then raw doubles in entry order.
  void save(const std::string& path, const std::string& meta_json) const;
  static ParamStore load(const std::string& path, std::string* meta_json_out = nullptr);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Adam with decoupled weight decay. Parameters whose name starts with
// encoder_prefix use the encoder config; everything else uses base.
class Adam {
 public:
  Adam(ParamStore& params, AdamConfig base, AdamConfig encoder,
       std::string encoder_prefix = "encoder.");

  void step();
  void zero_grad() { params_.zero_grad(); }
  std::int64_t steps_taken() const { return t_; }

 private:
  ParamStore& params_;
  AdamConfig base_, encoder_;
  std::string prefix_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace numgraph
