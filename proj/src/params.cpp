#include "numgraph/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace numgraph {

using nlohmann::json;

Tensor ParamStore::create(const std::string& name, std::vector<std::size_t> shape,
                          std::vector<double> data) {
  if (has(name)) throw TensorError("ParamStore: duplicate parameter '" + name + "'");
  Tensor t = Tensor::leaf(std::move(shape), std::move(data));
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::create_uniform(const std::string& name,
                                  std::vector<std::size_t> shape, double scale,
                                  std::mt19937_64& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> data(n);
  for (auto& x : data) x = dist(rng);
  return create(name, std::move(shape), std::move(data));
}

Tensor ParamStore::create_zeros(const std::string& name,
                                std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return create(name, std::move(shape), std::vector<double>(n, 0.0));
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& [k, _] : entries_)
    if (k == name) return true;
  return false;
}

Tensor ParamStore::get(const std::string& name) const {
  for (const auto& [k, t] : entries_)
    if (k == name) return t;
  throw TensorError("ParamStore: unknown parameter '" + name + "'");
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& [k, t] : entries_) out.create(k, t.shape(), t.values());
  return out;
}

void ParamStore::accumulate_grads_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size())
    throw TensorError("ParamStore: grad accumulation across mismatched stores");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [k, t] = entries_[i];
    const auto& [ok, ot] = other.entries_[i];
    if (k != ok || t.shape() != ot.shape())
      throw TensorError("ParamStore: grad accumulation across mismatched stores");
    std::vector<double> og = ot.grad();
    std::vector<double> cur = t.grad();
    for (std::size_t j = 0; j < cur.size(); ++j) cur[j] += og[j];
    entries_[i].second.set_grad(std::move(cur));
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size())
    throw TensorError("ParamStore: value copy across mismatched stores");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [k, t] = entries_[i];
    const auto& [ok, ot] = other.entries_[i];
    if (k != ok || t.shape() != ot.shape())
      throw TensorError("ParamStore: value copy across mismatched stores");
    entries_[i].second.mutable_values() = ot.values();
  }
}

namespace {
constexpr char kMagic[4] = {'N', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void ParamStore::save(const std::string& path, const std::string& meta_json) const {
  json meta = meta_json.empty() ? json::object() : json::parse(meta_json);
  json manifest = json::array();
  for (const auto& [k, t] : entries_)
    manifest.push_back({{"name", k}, {"shape", t.shape()}});
  meta["params"] = std::move(manifest);
  std::string body = meta.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw TensorError("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  std::uint32_t ver = kVersion;
  os.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  std::uint64_t len = body.size();
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os.write(body.data(), static_cast<std::streamsize>(body.size()));
  for (const auto& [_, t] : entries_)
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!os) throw TensorError("checkpoint: write to '" + path + "' failed");
}

ParamStore ParamStore::load(const std::string& path, std::string* meta_json_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TensorError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw TensorError("checkpoint: '" + path + "' is not a recognized checkpoint");
  std::uint32_t ver = 0;
  is.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  if (!is || ver != kVersion)
    throw TensorError("checkpoint: unsupported version " + std::to_string(ver));
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string body(len, '\0');
  is.read(body.data(), static_cast<std::streamsize>(len));
  if (!is) throw TensorError("checkpoint: truncated header in '" + path + "'");
  json meta = json::parse(body, nullptr, false);
  if (meta.is_discarded() || !meta.contains("params"))
    throw TensorError("checkpoint: corrupt metadata in '" + path + "'");

  ParamStore out;
  for (const auto& ent : meta["params"]) {
    std::string name = ent.at("name").get<std::string>();
    std::vector<std::size_t> shape = ent.at("shape").get<std::vector<std::size_t>>();
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> data(n);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw TensorError("checkpoint: truncated data in '" + path + "'");
    out.create(name, std::move(shape), std::move(data));
  }
  if (meta_json_out) *meta_json_out = meta.dump();
  return out;
}

Adam::Adam(ParamStore& params, AdamConfig base, AdamConfig encoder,
           std::string encoder_prefix)
    : params_(params), base_(base), encoder_(encoder), prefix_(std::move(encoder_prefix)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& [_, t] : params_.entries()) {
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const auto& entries = params_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& name = entries[i].first;
    Tensor p = entries[i].second;
    const AdamConfig& cfg =
        name.compare(0, prefix_.size(), prefix_) == 0 ? encoder_ : base_;
    std::vector<double> g = p.grad();
    auto& vals = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    for (std::size_t j = 0; j < vals.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      vals[j] -= cfg.lr * cfg.weight_decay * vals[j];  // decoupled decay
      vals[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      if (!std::isfinite(vals[j]))
        throw TensorError("Adam: parameter '" + name + "' became non-finite");
    }
  }
}

}  // namespace numgraph
