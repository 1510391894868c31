#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace numgraph {

class TensorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

class Tape;

// Dense 1-D/2-D double tensor. Copies are shallow handles to the same
// underlying node; ops create fresh nodes and, when a Tape is active and an
// input is grad-tracked, record themselves for reverse-mode backprop.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data);
  static Tensor scalar(double v);
  // Grad-tracked leaf (a trainable parameter).
  static Tensor leaf(std::vector<std::size_t> shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t ndim() const;
  std::size_t numel() const;
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only

  const std::vector<double>& values() const;
  double scalar_value() const;  // numel()==1
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  // Accumulated adjoint; zeros if backward never reached this node.
  std::vector<double> grad() const;
  void zero_grad();
  void set_grad(std::vector<double> g);
  // Direct mutation of a leaf's values (parameter updates, finite differences).
  std::vector<double>& mutable_values();

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  friend class Tape;
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor wrap_node(std::shared_ptr<detail::Node>);
};

// Records the primitive ops of one forward pass; backward() replays them in
// exact reverse order, accumulating adjoints additively. One thread per tape.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // loss must be a scalar computed under this tape. Errors if run twice.
  void backward(const Tensor& loss);

  static Tape* current();

 private:
  friend Tensor wrap_node(std::shared_ptr<detail::Node>);
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  bool used_ = false;
  Tape* prev_ = nullptr;
};

// ---- primitives ------------------------------------------------------------
// All ops validate shapes (mismatch errors name both shapes) and reject
// non-finite results.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double k);
// Multiply / add a length-d vector across every row of [n,d].
Tensor rowwise_mul(const Tensor& x, const Tensor& v);
Tensor rowwise_add(const Tensor& x, const Tensor& v);
Tensor matmul(const Tensor& a, const Tensor& b);  // [n,k]x[k,m]
Tensor vecmat(const Tensor& v, const Tensor& m);  // [k]x[k,m] -> [m]
Tensor concat(const Tensor& a, const Tensor& b);  // last axis
Tensor vstack(const Tensor& a, const Tensor& b);  // stack rows of two matrices
// Same data, new shape (numel must match).
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);
// Scale row r of x by s[r].
Tensor colwise_scale(const Tensor& x, const Tensor& s);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);
Tensor scatter_add_rows(const Tensor& x, const std::vector<std::size_t>& idx,
                        std::size_t n_rows);
Tensor mean_rows(const Tensor& x);  // [n,d] -> [d], n >= 1
Tensor sum_all(const Tensor& x);    // -> scalar
Tensor softmax(const Tensor& x);      // last axis
Tensor log_softmax(const Tensor& x);  // last axis
// Softmax within groups of equal segment id over a 1-D score vector.
Tensor segment_softmax(const Tensor& scores, const std::vector<std::size_t>& segment,
                       std::size_t n_segments);
Tensor elu(const Tensor& x);  // alpha = 1
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);
Tensor take(const Tensor& x, std::size_t flat_index);  // -> scalar
// Sum of the listed flat entries (repeats accumulate). -> scalar
Tensor take_sum(const Tensor& x, const std::vector<std::size_t>& flat);
// log(sum_i exp(s_i)) over scalar tensors, computed stably. -> scalar
Tensor logsumexp(const std::vector<Tensor>& scalars);

}  // namespace numgraph
