#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gduq/dense.hpp"

namespace gduq {

class Tensor;

namespace detail {

struct TensorNode {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backprop;  // pulls from this node's grad into parents'

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

Tensor wrap_node(std::shared_ptr<TensorNode> n);

}  // namespace detail

// Handle to a node in the dynamically recorded computation graph. Copies are
// shallow; the tape is released by backward() or when handles go away.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
  static Tensor from_data(std::size_t rows, std::size_t cols, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor from_matrix(const Matrix& m, bool requires_grad = false);
  static Tensor identity(std::size_t n);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool is_scalar() const { return defined() && node_->rows == 1 && node_->cols == 1; }

  double operator()(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double scalar() const;

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values() { return node_->value; }
  Matrix to_matrix() const { return Matrix(rows(), cols(), node_->value); }

  bool requires_grad() const { return defined() && node_->requires_grad; }
  const std::vector<double>& grad() const;
  void zero_grad();

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor detail::wrap_node(std::shared_ptr<detail::TensorNode> n);
};

namespace detail {
inline Tensor wrap_node(std::shared_ptr<TensorNode> n) { return Tensor(std::move(n)); }
}  // namespace detail

// ---- differentiable operations --------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// Same-shape elementwise add, or b as a 1xC row broadcast (bias).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor row_mean(const Tensor& x);  // 1 x cols
Tensor scale(const Tensor& x, double s);
// Elementwise multiply with a 1xC row vector broadcast to every row.
Tensor mul_rows(const Tensor& x, const Tensor& w);
// Multiply every entry by a tracked 1x1 scalar tensor.
Tensor mul_scalar(const Tensor& x, const Tensor& s);
// Gather rows by index; backward scatters.
Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& idx);
// Value copy that never propagates gradient to ancestors.
Tensor detach(const Tensor& x);

Tensor softmax(const Tensor& logits);
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Reverse pass from a scalar loss; frees the tape as it goes.
void backward(const Tensor& loss);

// ---- optimizer -------------------------------------------------------------

struct AdamState {
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Slot> slots;
  std::int64_t step = 0;
};

void zero_grads(std::vector<Tensor>& params);
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr = 1e-3,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace gduq
