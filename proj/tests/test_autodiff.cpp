#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "gduq/rng.hpp"
#include "gduq/tensor.hpp"

using namespace gduq;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, bool requires_grad = true) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor::from_data(rows, cols, std::move(v), requires_grad);
}

// Scalar reduction so every op can be checked through a single loss.
Tensor sum_all(const Tensor& t) {
  const Tensor ones_col = Tensor::full(t.cols(), 1, 1.0);
  const Tensor row = matmul(t, ones_col);           // rows x 1
  const Tensor ones_row = Tensor::full(1, t.rows(), 1.0);
  return matmul(ones_row, row);                     // 1 x 1
}

// Central finite differences on a copy of the input data.
double fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                   std::vector<double> x, std::size_t i, double h = 1e-6) {
  x[i] += h;
  const double up = f(x);
  x[i] -= 2 * h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

void check_grads_match(const std::vector<double>& analytic,
                       const std::function<double(const std::vector<double>&)>& f,
                       const std::vector<double>& x, double rel_tol = 1e-5) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = fd_gradient(f, x, i);
    const double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1.0});
    CHECK(std::abs(analytic[i] - fd) / scale < rel_tol);
  }
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("matmul against identity returns the operand") {
  Rng rng(1);
  const Tensor m = random_tensor(3, 5, rng, false);
  const Tensor out = matmul(Tensor::identity(3), m);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(out.values()[i] == m.values()[i]);
}

TEST_CASE("relu subgradient at [-1, 2] is [0, 1]") {
  Tensor x = Tensor::from_data(1, 2, {-1.0, 2.0}, true);
  backward(sum_all(relu(x)));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(2);
  const std::size_t n = 4, k = 3, m = 5;
  Tensor a = random_tensor(n, k, rng);
  const Tensor b = random_tensor(k, m, rng, false);
  backward(sum_all(matmul(a, b)));
  const auto f = [&](const std::vector<double>& av) {
    const Tensor aa = Tensor::from_data(n, k, av);
    return sum_all(matmul(aa, b)).scalar();
  };
  check_grads_match(a.grad(), f, a.values());
}

TEST_CASE("every op passes central finite differences on random shapes") {
  // Property demanded of the engine: 1e-5 relative agreement at h=1e-6,
  // checked over >= 20 random instances spread across all op kinds.
  Rng rng(1234);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t n = 2 + rng.uniform_below(4);
    const std::size_t m = 2 + rng.uniform_below(4);
    Tensor x = random_tensor(n, m, rng);
    std::function<Tensor(const Tensor&)> build;
    const int which = trial % 8;
    const Tensor other = random_tensor(n, m, rng, false);
    const Tensor bias = random_tensor(1, m, rng, false);
    const Tensor wrow = random_tensor(1, m, rng, false);
    const Tensor sc = random_tensor(1, 1, rng, false);
    switch (which) {
      case 0: build = [&](const Tensor& t) { return relu(t); }; break;
      case 1: build = [&](const Tensor& t) { return add(t, bias); }; break;
      case 2: build = [&](const Tensor& t) { return sub(t, other); }; break;
      case 3: build = [&](const Tensor& t) { return concat_cols(t, other); }; break;
      case 4: build = [&](const Tensor& t) { return row_mean(t); }; break;
      case 5: build = [&](const Tensor& t) { return mul_rows(t, wrow); }; break;
      case 6: build = [&](const Tensor& t) { return scale(t, 1.7); }; break;
      case 7: build = [&](const Tensor& t) { return softmax(t); }; break;
    }
    backward(sum_all(build(x)));
    const auto f = [&](const std::vector<double>& xv) {
      return sum_all(build(Tensor::from_data(n, m, xv))).scalar();
    };
    check_grads_match(x.grad(), f, x.values());
  }
}

TEST_CASE("mul_scalar and take_rows gradients match finite differences") {
  Rng rng(77);
  Tensor x = random_tensor(4, 3, rng);
  Tensor s = random_tensor(1, 1, rng);
  backward(sum_all(mul_scalar(x, s)));
  const auto fx = [&](const std::vector<double>& xv) {
    return sum_all(mul_scalar(Tensor::from_data(4, 3, xv), detach(s))).scalar();
  };
  check_grads_match(x.grad(), fx, x.values());
  const auto fs = [&](const std::vector<double>& sv) {
    return sum_all(mul_scalar(detach(x), Tensor::from_data(1, 1, sv))).scalar();
  };
  check_grads_match(s.grad(), fs, s.values());

  Tensor y = random_tensor(5, 2, rng);
  const std::vector<std::size_t> idx = {4, 0, 0, 2};
  backward(sum_all(take_rows(y, idx)));
  const auto fy = [&](const std::vector<double>& yv) {
    return sum_all(take_rows(Tensor::from_data(5, 2, yv), idx)).scalar();
  };
  check_grads_match(y.grad(), fy, y.values());
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(9);
  const Tensor p = softmax(random_tensor(6, 7, rng, false));
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(p(i, j) >= 0.0);
      s += p(i, j);
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("uniform logits over q=4 classes give loss ln 4") {
  const Tensor logits = Tensor::full(3, 4, 0.25);
  const Tensor loss = softmax_cross_entropy(logits, {0, 1, 3});
  CHECK(loss.scalar() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("large-margin one-hot logits drive the loss to zero") {
  Tensor logits = Tensor::zeros(1, 5);
  logits.values()[2] = 50.0;
  CHECK(softmax_cross_entropy(logits, {2}).scalar() < 1e-20);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
  const Tensor logits = Tensor::zeros(2, 3);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1, 0}), std::invalid_argument);
}

TEST_CASE("cross entropy gradient matches finite differences on random 3x5 logits") {
  Rng rng(31);
  Tensor logits = random_tensor(3, 5, rng);
  const std::vector<int> labels = {4, 0, 2};
  backward(softmax_cross_entropy(logits, labels));
  const auto f = [&](const std::vector<double>& lv) {
    return softmax_cross_entropy(Tensor::from_data(3, 5, lv), labels).scalar();
  };
  check_grads_match(logits.grad(), f, logits.values());
}

TEST_CASE("detach blocks gradient flow to ancestors") {
  Rng rng(13);
  Tensor x = random_tensor(3, 3, rng);
  // Loss touches x only through a detached copy; ancestors must see zero.
  const Tensor loss = sum_all(mul_rows(detach(relu(x)), Tensor::full(1, 3, 2.0)));
  CHECK_FALSE(loss.requires_grad());
  backward(sum_all(add(scale(x, 0.0), detach(scale(x, 3.0)))));
  for (const double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor x = Tensor::zeros(2, 2, true);
  CHECK_THROWS_AS(backward(relu(x)), std::invalid_argument);
}

TEST_CASE("shape mismatches name both shapes") {
  const Tensor a = Tensor::zeros(2, 3);
  const Tensor b = Tensor::zeros(4, 5);
  try {
    matmul(a, b);
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(concat_cols(a, b), std::invalid_argument);
}

TEST_CASE("one Adam step on f(w) = w^2 from w=1 moves by about lr") {
  // Hand-executed update: g=2, m_hat=2, v_hat=4, step = lr * 2/(2+eps) ~ lr.
  Tensor w = Tensor::from_data(1, 1, {1.0}, true);
  std::vector<Tensor> params = {w};
  AdamState state;
  const Tensor loss = mul_scalar(w, w);
  zero_grads(params);
  backward(loss);
  adam_step(params, state, 0.1);
  CHECK(w.values()[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  Tensor w = Tensor::from_data(1, 2, {0.5, -0.25}, true);
  std::vector<Tensor> params = {w};
  AdamState state;
  zero_grads(params);
  adam_step(params, state, 0.1);
  CHECK(w.values()[0] == 0.5);
  CHECK(w.values()[1] == -0.25);
}

TEST_CASE("identical seeded runs produce bitwise-identical trajectories") {
  const auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Tensor w = random_tensor(4, 4, rng);
    std::vector<Tensor> params = {w};
    AdamState state;
    for (int step = 0; step < 20; ++step) {
      const Tensor x = random_tensor(4, 4, rng, false);
      const Tensor loss = sum_all(mul_rows(relu(matmul(x, w)), Tensor::full(1, 4, 0.25)));
      zero_grads(params);
      backward(loss);
      adam_step(params, state, 1e-2);
    }
    return w.values();
  };
  const auto a = run(99), b = run(99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

}  // TEST_SUITE
