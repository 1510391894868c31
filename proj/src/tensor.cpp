#include "numgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace numgraph {

namespace detail {

struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  const char* op = "";

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;

namespace {

thread_local Tape* t_current_tape = nullptr;

std::string shape_str(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

std::size_t numel_of(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

[[noreturn]] void fail(const char* op, const std::string& msg) {
  throw TensorError(std::string(op) + ": " + msg);
}

void check_finite(const char* op, const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) fail(op, "non-finite result");
}

void require(bool cond, const char* op, const std::string& msg) {
  if (!cond) fail(op, msg);
}

}  // namespace

Tape::Tape() {
  prev_ = t_current_tape;
  t_current_tape = this;
}

Tape::~Tape() { t_current_tape = prev_; }

Tape* Tape::current() { return t_current_tape; }

void Tape::backward(const Tensor& loss) {
  if (used_) throw TensorError("backward: tape already consumed");
  used_ = true;
  if (!loss.defined() || loss.numel() != 1)
    throw TensorError("backward: loss must be a defined scalar");
  auto ln = loss.node();
  ln->ensure_grad()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n);
  }
}

Tensor wrap_node(std::shared_ptr<Node> n) {
  if (n->requires_grad) {
    Tape* t = Tape::current();
    if (t) t->nodes_.push_back(n);
  } else {
    // No grad flow: drop parents and closure so forward-only code stays lean.
    n->parents.clear();
    n->backward = nullptr;
  }
  return Tensor(std::move(n));
}

namespace {

std::shared_ptr<Node> make_node(const char* op, std::vector<std::size_t> shape,
                                std::vector<double> value,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  for (auto& p : parents)
    if (p && p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  check_finite(op, n->value);
  return n;
}

}  // namespace

// ---- Tensor basics ----------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = numel_of(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  std::size_t n = numel_of(shape);
  return from(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data) {
  if (numel_of(shape) != data.size())
    throw TensorError("from: data length " + std::to_string(data.size()) +
                      " does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->op = "const";
  check_finite("const", n->value);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::leaf(std::vector<std::size_t> shape, std::vector<double> data) {
  Tensor t = from(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  t.node_->op = "leaf";
  return t;
}

const std::vector<std::size_t>& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::ndim() const { return node_->shape.size(); }
std::size_t Tensor::numel() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
  if (ndim() != 2) throw TensorError("rows: tensor is not 2-D");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) throw TensorError("cols: tensor is not 2-D");
  return node_->shape[1];
}

const std::vector<double>& Tensor::values() const { return node_->value; }

double Tensor::scalar_value() const {
  if (numel() != 1) throw TensorError("scalar_value: tensor has " +
                                      std::to_string(numel()) + " elements");
  return node_->value[0];
}

double Tensor::at(std::size_t i) const { return node_->value.at(i); }

double Tensor::at(std::size_t i, std::size_t j) const {
  return node_->value.at(i * cols() + j);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(numel(), 0.0); }

void Tensor::set_grad(std::vector<double> g) {
  if (g.size() != numel())
    throw TensorError("set_grad: size " + std::to_string(g.size()) +
                      " does not match tensor with " + std::to_string(numel()) +
                      " elements");
  node_->grad = std::move(g);
}

std::vector<double>& Tensor::mutable_values() { return node_->value; }

// ---- elementwise ------------------------------------------------------------

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  auto n = make_node("add", a.shape(), std::move(out), {a.node(), b.node()});
  n->backward = [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      auto& p = self.parents[k];
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  };
  return wrap_node(std::move(n));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  auto n = make_node("sub", a.shape(), std::move(out), {a.node(), b.node()});
  n->backward = [](Node& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  };
  return wrap_node(std::move(n));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  auto n = make_node("mul", a.shape(), std::move(out), {a.node(), b.node()});
  n->backward = [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  };
  return wrap_node(std::move(n));
}

Tensor scale(const Tensor& a, double k) {
  require(std::isfinite(k), "scale", "non-finite factor");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * k;
  auto n = make_node("scale", a.shape(), std::move(out), {a.node()});
  n->backward = [k](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * k;
  };
  return wrap_node(std::move(n));
}

Tensor rowwise_mul(const Tensor& x, const Tensor& v) {
  require(x.ndim() == 2 && v.ndim() == 1, "rowwise_mul",
          "expects [n,d] and [d], got " + shape_str(x.shape()) + " and " +
              shape_str(v.shape()));
  require(x.cols() == v.numel(), "rowwise_mul",
          "width mismatch " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
  std::size_t nr = x.rows(), d = x.cols();
  std::vector<double> out(nr * d);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x.at(r, j) * v.at(j);
  auto n = make_node("rowwise_mul", x.shape(), std::move(out), {x.node(), v.node()});
  n->backward = [nr, d](Node& self) {
    auto& px = self.parents[0];
    auto& pv = self.parents[1];
    if (px->requires_grad) {
      auto& g = px->ensure_grad();
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t j = 0; j < d; ++j)
          g[r * d + j] += self.grad[r * d + j] * pv->value[j];
    }
    if (pv->requires_grad) {
      auto& g = pv->ensure_grad();
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t j = 0; j < d; ++j)
          g[j] += self.grad[r * d + j] * px->value[r * d + j];
    }
  };
  return wrap_node(std::move(n));
}

Tensor rowwise_add(const Tensor& x, const Tensor& v) {
  require(x.ndim() == 2 && v.ndim() == 1, "rowwise_add",
          "expects [n,d] and [d], got " + shape_str(x.shape()) + " and " +
              shape_str(v.shape()));
  require(x.cols() == v.numel(), "rowwise_add",
          "width mismatch " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
  std::size_t nr = x.rows(), d = x.cols();
  std::vector<double> out(nr * d);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x.at(r, j) + v.at(j);
  auto n = make_node("rowwise_add", x.shape(), std::move(out), {x.node(), v.node()});
  n->backward = [nr, d](Node& self) {
    auto& px = self.parents[0];
    auto& pv = self.parents[1];
    if (px->requires_grad) {
      auto& g = px->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pv->requires_grad) {
      auto& g = pv->ensure_grad();
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j];
    }
  };
  return wrap_node(std::move(n));
}

// ---- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul",
          "expects 2-D inputs, got " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  require(a.cols() == b.rows(), "matmul",
          "inner dims differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * m;
      double* orow = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  auto nd = make_node("matmul", {n, m}, std::move(out), {a.node(), b.node()});
  nd->backward = [n, k, m](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {  // dA += dY . B^T
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* gy = self.grad.data() + i * m;
          const double* br = pb->value.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) s += gy[j] * br[j];
          g[i * k + p] += s;
        }
    }
    if (pb->requires_grad) {  // dB += A^T . dY
      auto& g = pb->ensure_grad();
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < n; ++i) {
          double aip = pa->value[i * k + p];
          if (aip == 0.0) continue;
          const double* gy = self.grad.data() + i * m;
          double* gr = g.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) gr[j] += aip * gy[j];
        }
    }
  };
  return wrap_node(std::move(nd));
}

Tensor vecmat(const Tensor& v, const Tensor& m) {
  require(v.ndim() == 1 && m.ndim() == 2, "vecmat",
          "expects [k] and [k,m], got " + shape_str(v.shape()) + " and " +
              shape_str(m.shape()));
  require(v.numel() == m.rows(), "vecmat",
          "inner dims differ: " + shape_str(v.shape()) + " x " + shape_str(m.shape()));
  std::size_t k = v.numel(), mm = m.cols();
  std::vector<double> out(mm, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    double vp = v.at(p);
    if (vp == 0.0) continue;
    for (std::size_t j = 0; j < mm; ++j) out[j] += vp * m.at(p, j);
  }
  auto nd = make_node("vecmat", {mm}, std::move(out), {v.node(), m.node()});
  nd->backward = [k, mm](Node& self) {
    auto& pv = self.parents[0];
    auto& pm = self.parents[1];
    if (pv->requires_grad) {
      auto& g = pv->ensure_grad();
      for (std::size_t p = 0; p < k; ++p) {
        double s = 0.0;
        for (std::size_t j = 0; j < mm; ++j) s += self.grad[j] * pm->value[p * mm + j];
        g[p] += s;
      }
    }
    if (pm->requires_grad) {
      auto& g = pm->ensure_grad();
      for (std::size_t p = 0; p < k; ++p) {
        double vp = pv->value[p];
        if (vp == 0.0) continue;
        for (std::size_t j = 0; j < mm; ++j) g[p * mm + j] += vp * self.grad[j];
      }
    }
  };
  return wrap_node(std::move(nd));
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.ndim() == 1 && b.ndim() == 1) {
    std::size_t na = a.numel(), nb = b.numel();
    std::vector<double> out;
    out.reserve(na + nb);
    out.insert(out.end(), a.values().begin(), a.values().end());
    out.insert(out.end(), b.values().begin(), b.values().end());
    auto nd = make_node("concat", {na + nb}, std::move(out), {a.node(), b.node()});
    nd->backward = [na, nb](Node& self) {
      if (self.parents[0]->requires_grad) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < na; ++i) g[i] += self.grad[i];
      }
      if (self.parents[1]->requires_grad) {
        auto& g = self.parents[1]->ensure_grad();
        for (std::size_t i = 0; i < nb; ++i) g[i] += self.grad[na + i];
      }
    };
    return wrap_node(std::move(nd));
  }
  require(a.ndim() == 2 && b.ndim() == 2, "concat",
          "expects matching ranks, got " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  require(a.rows() == b.rows(), "concat",
          "row counts differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::size_t n = a.rows(), da = a.cols(), db = b.cols();
  std::vector<double> out(n * (da + db));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < da; ++j) out[r * (da + db) + j] = a.at(r, j);
    for (std::size_t j = 0; j < db; ++j) out[r * (da + db) + da + j] = b.at(r, j);
  }
  auto nd = make_node("concat", {n, da + db}, std::move(out), {a.node(), b.node()});
  nd->backward = [n, da, db](Node& self) {
    std::size_t d = da + db;
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < da; ++j) g[r * da + j] += self.grad[r * d + j];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < db; ++j) g[r * db + j] += self.grad[r * d + da + j];
    }
  };
  return wrap_node(std::move(nd));
}

Tensor vstack(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "vstack",
          "expects 2-D inputs, got " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  require(a.cols() == b.cols(), "vstack",
          "column counts differ: " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
  std::size_t na = a.rows(), nb = b.rows(), d = a.cols();
  std::vector<double> out;
  out.reserve((na + nb) * d);
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  auto nd = make_node("vstack", {na + nb, d}, std::move(out), {a.node(), b.node()});
  nd->backward = [na, nb, d](Node& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < na * d; ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < nb * d; ++i) g[i] += self.grad[na * d + i];
    }
  };
  return wrap_node(std::move(nd));
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
  require(numel_of(shape) == x.numel(), "reshape",
          "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto nd = make_node("reshape", std::move(shape), x.values(), {x.node()});
  nd->backward = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  };
  return wrap_node(std::move(nd));
}

Tensor colwise_scale(const Tensor& x, const Tensor& s) {
  require(x.ndim() == 2 && s.ndim() == 1, "colwise_scale",
          "expects [n,d] and [n], got " + shape_str(x.shape()) + " and " +
              shape_str(s.shape()));
  require(x.rows() == s.numel(), "colwise_scale",
          "row count mismatch " + shape_str(x.shape()) + " vs " +
              shape_str(s.shape()));
  std::size_t n = x.rows(), d = x.cols();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x.at(r, j) * s.at(r);
  auto nd = make_node("colwise_scale", x.shape(), std::move(out), {x.node(), s.node()});
  nd->backward = [n, d](Node& self) {
    auto& px = self.parents[0];
    auto& ps = self.parents[1];
    if (px->requires_grad) {
      auto& g = px->ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j)
          g[r * d + j] += self.grad[r * d + j] * ps->value[r];
    }
    if (ps->requires_grad) {
      auto& g = ps->ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j)
          dot += self.grad[r * d + j] * px->value[r * d + j];
        g[r] += dot;
      }
    }
  };
  return wrap_node(std::move(nd));
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  require(x.ndim() == 2, "gather_rows", "expects 2-D input, got " + shape_str(x.shape()));
  std::size_t d = x.cols(), n = x.rows();
  for (auto i : idx)
    require(i < n, "gather_rows", "row index " + std::to_string(i) + " out of range");
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x.at(idx[r], j);
  auto nd = make_node("gather_rows", {idx.size(), d}, std::move(out), {x.node()});
  nd->backward = [idx, d](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) g[idx[r] * d + j] += self.grad[r * d + j];
  };
  return wrap_node(std::move(nd));
}

Tensor scatter_add_rows(const Tensor& x, const std::vector<std::size_t>& idx,
                        std::size_t n_rows) {
  require(x.ndim() == 2, "scatter_add_rows",
          "expects 2-D input, got " + shape_str(x.shape()));
  require(idx.size() == x.rows(), "scatter_add_rows",
          "index count " + std::to_string(idx.size()) + " != row count " +
              std::to_string(x.rows()));
  std::size_t d = x.cols();
  for (auto i : idx)
    require(i < n_rows, "scatter_add_rows", "row index " + std::to_string(i) + " out of range");
  std::vector<double> out(n_rows * d, 0.0);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t j = 0; j < d; ++j) out[idx[r] * d + j] += x.at(r, j);
  auto nd = make_node("scatter_add_rows", {n_rows, d}, std::move(out), {x.node()});
  nd->backward = [idx, d](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) g[r * d + j] += self.grad[idx[r] * d + j];
  };
  return wrap_node(std::move(nd));
}

// ---- reductions -------------------------------------------------------------

Tensor mean_rows(const Tensor& x) {
  require(x.ndim() == 2, "mean_rows", "expects 2-D input, got " + shape_str(x.shape()));
  std::size_t n = x.rows(), d = x.cols();
  require(n >= 1, "mean_rows", "empty input");
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) out[j] += x.at(r, j);
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(n);
  auto nd = make_node("mean_rows", {d}, std::move(out), {x.node()});
  nd->backward = [n, d](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    double inv = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) g[r * d + j] += self.grad[j] * inv;
  };
  return wrap_node(std::move(nd));
}

Tensor sum_all(const Tensor& x) {
  double s = std::accumulate(x.values().begin(), x.values().end(), 0.0);
  auto nd = make_node("sum_all", {1}, {s}, {x.node()});
  nd->backward = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  };
  return wrap_node(std::move(nd));
}

// ---- softmax family ---------------------------------------------------------

namespace {

void softmax_row(const double* in, double* out, std::size_t d) {
  double mx = in[0];
  for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, in[j]);
  double z = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    out[j] = std::exp(in[j] - mx);
    z += out[j];
  }
  for (std::size_t j = 0; j < d; ++j) out[j] /= z;
}

}  // namespace

Tensor softmax(const Tensor& x) {
  std::size_t nrows = x.ndim() == 2 ? x.rows() : 1;
  std::size_t d = x.ndim() == 2 ? x.cols() : x.numel();
  require(d >= 1, "softmax", "empty axis");
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < nrows; ++r)
    softmax_row(x.values().data() + r * d, out.data() + r * d, d);
  auto nd = make_node("softmax", x.shape(), std::move(out), {x.node()});
  nd->backward = [nrows, d](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t r = 0; r < nrows; ++r) {
      const double* y = self.value.data() + r * d;
      const double* dy = self.grad.data() + r * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < d; ++j) g[r * d + j] += y[j] * (dy[j] - dot);
    }
  };
  return wrap_node(std::move(nd));
}

Tensor log_softmax(const Tensor& x) {
  std::size_t nrows = x.ndim() == 2 ? x.rows() : 1;
  std::size_t d = x.ndim() == 2 ? x.cols() : x.numel();
  require(d >= 1, "log_softmax", "empty axis");
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* in = x.values().data() + r * d;
    double mx = in[0];
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += std::exp(in[j] - mx);
    double lz = std::log(z) + mx;
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = in[j] - lz;
  }
  auto nd = make_node("log_softmax", x.shape(), std::move(out), {x.node()});
  nd->backward = [nrows, d](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t r = 0; r < nrows; ++r) {
      const double* y = self.value.data() + r * d;
      const double* dy = self.grad.data() + r * d;
      double tot = 0.0;
      for (std::size_t j = 0; j < d; ++j) tot += dy[j];
      for (std::size_t j = 0; j < d; ++j) g[r * d + j] += dy[j] - std::exp(y[j]) * tot;
    }
  };
  return wrap_node(std::move(nd));
}

Tensor segment_softmax(const Tensor& scores, const std::vector<std::size_t>& segment,
                       std::size_t n_segments) {
  require(scores.ndim() == 1, "segment_softmax",
          "expects 1-D scores, got " + shape_str(scores.shape()));
  require(segment.size() == scores.numel(), "segment_softmax",
          "segment ids do not match score count");
  for (auto s : segment)
    require(s < n_segments, "segment_softmax", "segment id out of range");
  std::size_t m = scores.numel();
  std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m; ++i) mx[segment[i]] = std::max(mx[segment[i]], scores.at(i));
  std::vector<double> z(n_segments, 0.0);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = std::exp(scores.at(i) - mx[segment[i]]);
    z[segment[i]] += out[i];
  }
  for (std::size_t i = 0; i < m; ++i) out[i] /= z[segment[i]];
  auto nd = make_node("segment_softmax", {m}, std::move(out), {scores.node()});
  nd->backward = [segment, n_segments, m](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    std::vector<double> dot(n_segments, 0.0);
    for (std::size_t i = 0; i < m; ++i) dot[segment[i]] += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < m; ++i)
      g[i] += self.value[i] * (self.grad[i] - dot[segment[i]]);
  };
  return wrap_node(std::move(nd));
}

// ---- activations ------------------------------------------------------------

Tensor elu(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = x.at(i);
    out[i] = v > 0.0 ? v : std::expm1(v);
  }
  auto nd = make_node("elu", x.shape(), std::move(out), {x.node()});
  nd->backward = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double v = p->value[i];
      g[i] += self.grad[i] * (v > 0.0 ? 1.0 : std::exp(v));
    }
  };
  return wrap_node(std::move(nd));
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = x.at(i);
    out[i] = v > 0.0 ? v : slope * v;
  }
  auto nd = make_node("leaky_relu", x.shape(), std::move(out), {x.node()});
  nd->backward = [slope](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * (p->value[i] > 0.0 ? 1.0 : slope);
  };
  return wrap_node(std::move(nd));
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x.at(i)));
  auto nd = make_node("sigmoid", x.shape(), std::move(out), {x.node()});
  nd->backward = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double y = self.value[i];
      g[i] += self.grad[i] * y * (1.0 - y);
    }
  };
  return wrap_node(std::move(nd));
}

// ---- selections -------------------------------------------------------------

Tensor take(const Tensor& x, std::size_t flat_index) {
  require(flat_index < x.numel(), "take",
          "index " + std::to_string(flat_index) + " out of range for " +
              shape_str(x.shape()));
  auto nd = make_node("take", {1}, {x.at(flat_index)}, {x.node()});
  nd->backward = [flat_index](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad()[flat_index] += self.grad[0];
  };
  return wrap_node(std::move(nd));
}

Tensor take_sum(const Tensor& x, const std::vector<std::size_t>& flat) {
  double s = 0.0;
  for (auto i : flat) {
    require(i < x.numel(), "take_sum", "index " + std::to_string(i) + " out of range");
    s += x.at(i);
  }
  auto nd = make_node("take_sum", {1}, {s}, {x.node()});
  nd->backward = [flat](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto& g = p->ensure_grad();
    for (auto i : flat) g[i] += self.grad[0];
  };
  return wrap_node(std::move(nd));
}

Tensor logsumexp(const std::vector<Tensor>& scalars) {
  require(!scalars.empty(), "logsumexp", "empty input");
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(scalars.size());
  for (const auto& t : scalars) {
    require(t.numel() == 1, "logsumexp", "inputs must be scalars");
    mx = std::max(mx, t.scalar_value());
    parents.push_back(t.node());
  }
  double z = 0.0;
  for (const auto& t : scalars) z += std::exp(t.scalar_value() - mx);
  double lse = mx + std::log(z);
  auto nd = make_node("logsumexp", {1}, {lse}, std::move(parents));
  nd->backward = [lse](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad()[0] += self.grad[0] * std::exp(p->value[0] - lse);
    }
  };
  return wrap_node(std::move(nd));
}

}  // namespace numgraph
