#include "gduq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace gduq {

using detail::TensorNode;
using detail::wrap_node;

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return from_data(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
  return from_data(rows, cols, std::vector<double>(rows * cols, v), requires_grad);
}

Tensor Tensor::from_data(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad) {
  if (data.size() != rows * cols)
    throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(rows, cols));
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return wrap_node(std::move(n));
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
  return from_data(m.rows, m.cols, m.data, requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) t.values()[i * n + i] = 1.0;
  return t;
}

double Tensor::scalar() const {
  if (!is_scalar())
    throw std::invalid_argument("Tensor::scalar: tensor is " + shape_str(rows(), cols()));
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

namespace {

// Shared construction path for every op: the result tracks parents and keeps a
// backprop closure only when some input requires grad.
Tensor make_node(std::size_t rows, std::size_t cols, std::vector<double> value,
                 std::initializer_list<Tensor> inputs,
                 std::function<void(TensorNode&)> back) {
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  bool any = false;
  for (const auto& t : inputs)
    if (t.defined() && t.requires_grad()) any = true;
  n->requires_grad = any;
  if (any) {
    for (const auto& t : inputs) n->parents.push_back(t.node());
    TensorNode* self = n.get();
    n->backprop = [self, fn = std::move(back)]() { fn(*self); };
  }
  return wrap_node(std::move(n));
}

void accumulate(const std::shared_ptr<TensorNode>& p, std::size_t i, double g) {
  if (p->requires_grad) {
    p->ensure_grad();
    p->grad[i] += g;
  }
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                shape_str(a.rows(), a.cols()) + " vs " +
                                shape_str(b.rows(), b.cols()) + ")");
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: shape mismatch (" + shape_str(a.rows(), a.cols()) +
                                " vs " + shape_str(b.rows(), b.cols()) + ")");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = av[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bv + kk * m;
      double* orow = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  return make_node(n, m, std::move(out), {a, b}, [n, k, m](TensorNode& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    const double* g = self.grad.data();
    if (pa->requires_grad) {
      pa->ensure_grad();  // dA += G * B^T
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          double acc = 0.0;
          const double* grow = g + i * m;
          const double* brow = pb->value.data() + kk * m;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          pa->grad[i * k + kk] += acc;
        }
    }
    if (pb->requires_grad) {
      pb->ensure_grad();  // dB += A^T * G
      for (std::size_t kk = 0; kk < k; ++kk)
        for (std::size_t i = 0; i < n; ++i) {
          const double aik = pa->value[i * k + kk];
          if (aik == 0.0) continue;
          const double* grow = g + i * m;
          double* brow = pb->grad.data() + kk * m;
          for (std::size_t j = 0; j < m; ++j) brow[j] += aik * grow[j];
        }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool broadcast = (b.rows() == 1 && a.cols() == b.cols() && a.rows() != 1);
  if (!broadcast) check_same_shape("add", a, b);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b.values()[broadcast ? j : i * m + j];
  return make_node(n, m, std::move(out), {a, b}, [n, m, broadcast](TensorNode& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double g = self.grad[i * m + j];
        accumulate(pa, i * m + j, g);
        accumulate(pb, broadcast ? j : i * m + j, g);
      }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.values()[i];
  return make_node(n, m, std::move(out), {a, b}, [](TensorNode& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(pa, i, self.grad[i]);
      accumulate(pb, i, -self.grad[i]);
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("concat_cols: shape mismatch (" +
                                shape_str(a.rows(), a.cols()) + " vs " +
                                shape_str(b.rows(), b.cols()) + ")");
  const std::size_t n = a.rows(), ca = a.cols(), cb = b.cols();
  std::vector<double> out(n * (ca + cb));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.values().data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(b.values().data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  return make_node(n, ca + cb, std::move(out), {a, b}, [n, ca, cb](TensorNode& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < ca; ++j) accumulate(pa, i * ca + j, self.grad[i * (ca + cb) + j]);
      for (std::size_t j = 0; j < cb; ++j) accumulate(pb, i * cb + j, self.grad[i * (ca + cb) + ca + j]);
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_node(x.rows(), x.cols(), std::move(out), {x}, [](TensorNode& self) {
    const auto& px = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      accumulate(px, i, px->value[i] > 0.0 ? self.grad[i] : 0.0);
  });
}

Tensor row_mean(const Tensor& x) {
  const std::size_t n = x.rows(), m = x.cols();
  if (n == 0) throw std::invalid_argument("row_mean: empty tensor");
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += x.values()[i * m + j];
  for (auto& v : out) v /= static_cast<double>(n);
  return make_node(1, m, std::move(out), {x}, [n, m](TensorNode& self) {
    const auto& px = self.parents[0];
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) accumulate(px, i * m + j, self.grad[j] * inv);
  });
}

Tensor scale(const Tensor& x, double s) {
  std::vector<double> out(x.values());
  for (auto& v : out) v *= s;
  return make_node(x.rows(), x.cols(), std::move(out), {x}, [s](TensorNode& self) {
    const auto& px = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) accumulate(px, i, s * self.grad[i]);
  });
}

Tensor mul_rows(const Tensor& x, const Tensor& w) {
  if (w.rows() != 1 || w.cols() != x.cols())
    throw std::invalid_argument("mul_rows: shape mismatch (" + shape_str(x.rows(), x.cols()) +
                                " vs " + shape_str(w.rows(), w.cols()) + ")");
  const std::size_t n = x.rows(), m = x.cols();
  std::vector<double> out(x.values());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] *= w.values()[j];
  return make_node(n, m, std::move(out), {x, w}, [n, m](TensorNode& self) {
    const auto& px = self.parents[0];
    const auto& pw = self.parents[1];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double g = self.grad[i * m + j];
        accumulate(px, i * m + j, g * pw->value[j]);
        accumulate(pw, j, g * px->value[i * m + j]);
      }
  });
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
  if (!s.is_scalar())
    throw std::invalid_argument("mul_scalar: scalar operand is " + shape_str(s.rows(), s.cols()));
  const double sv = s.values()[0];
  std::vector<double> out(x.values());
  for (auto& v : out) v *= sv;
  return make_node(x.rows(), x.cols(), std::move(out), {x, s}, [](TensorNode& self) {
    const auto& px = self.parents[0];
    const auto& ps = self.parents[1];
    const double sv = ps->value[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(px, i, sv * self.grad[i]);
      accumulate(ps, 0, px->value[i] * self.grad[i]);
    }
  });
}

Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  const std::size_t m = x.cols();
  std::vector<double> out(idx.size() * m);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= x.rows())
      throw std::invalid_argument("take_rows: index " + std::to_string(idx[i]) +
                                  " out of range for " + shape_str(x.rows(), x.cols()));
    std::copy_n(x.values().data() + idx[i] * m, m, out.data() + i * m);
  }
  return make_node(idx.size(), m, std::move(out), {x}, [idx, m](TensorNode& self) {
    const auto& px = self.parents[0];
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) accumulate(px, idx[i] * m + j, self.grad[i * m + j]);
  });
}

Tensor detach(const Tensor& x) {
  return Tensor::from_data(x.rows(), x.cols(), x.values(), false);
}

Tensor softmax(const Tensor& logits) {
  const std::size_t n = logits.rows(), q = logits.cols();
  std::vector<double> out(n * q);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.values().data() + i * q;
    double mx = row[0];
    for (std::size_t j = 1; j < q; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < q; ++j) denom += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < q; ++j) out[i * q + j] = std::exp(row[j] - mx) / denom;
  }
  return make_node(n, q, std::move(out), {logits}, [n, q](TensorNode& self) {
    const auto& px = self.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = self.value.data() + i * q;
      const double* g = self.grad.data() + i * q;
      double dot = 0.0;
      for (std::size_t j = 0; j < q; ++j) dot += g[j] * p[j];
      for (std::size_t j = 0; j < q; ++j) px->grad[i * q + j] += p[j] * (g[j] - dot);
    }
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t n = logits.rows(), q = logits.cols();
  if (labels.size() != n)
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " rows");
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= q)
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range [0," + std::to_string(q) + ") at row " +
                                  std::to_string(i));
  // log-sum-exp with max subtraction; probabilities cached for the backward.
  std::vector<double> probs(n * q);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.values().data() + i * q;
    double mx = row[0];
    for (std::size_t j = 1; j < q; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < q; ++j) denom += std::exp(row[j] - mx);
    const double log_denom = std::log(denom);
    for (std::size_t j = 0; j < q; ++j) probs[i * q + j] = std::exp(row[j] - mx) / denom;
    total += -(row[labels[i]] - mx - log_denom);
  }
  total /= static_cast<double>(n);
  return make_node(1, 1, {total}, {logits},
                   [n, q, labels, probs = std::move(probs)](TensorNode& self) {
                     const auto& px = self.parents[0];
                     if (!px->requires_grad) return;
                     px->ensure_grad();
                     const double g = self.grad[0] / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < q; ++j) {
                         double d = probs[i * q + j];
                         if (static_cast<std::size_t>(labels[i]) == j) d -= 1.0;
                         px->grad[i * q + j] += g * d;
                       }
                   });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar())
    throw std::invalid_argument("backward: loss must be a 1x1 scalar tensor" +
                                (loss.defined() ? " (got " + shape_str(loss.rows(), loss.cols()) + ")"
                                                : std::string()));
  if (!loss.requires_grad()) return;  // nothing reachable to update

  // Topological order by iterative DFS over parents.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backprop) {
      node->ensure_grad();
      node->backprop();
    }
  }
  // Free the tape: leaves keep their grads, interior bookkeeping goes away.
  for (TensorNode* node : order) {
    node->backprop = nullptr;
    node->parents.clear();
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.slots.size() != params.size()) {
    state.slots.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.slots[i].m.assign(params[i].size(), 0.0);
      state.slots[i].v.assign(params[i].size(), 0.0);
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& slot = state.slots[i];
    const auto& g = p.grad();
    auto& vals = p.values();
    for (std::size_t j = 0; j < vals.size(); ++j) {
      slot.m[j] = beta1 * slot.m[j] + (1.0 - beta1) * g[j];
      slot.v[j] = beta2 * slot.v[j] + (1.0 - beta2) * g[j] * g[j];
      const double mhat = slot.m[j] / bc1;
      const double vhat = slot.v[j] / bc2;
      vals[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace gduq
