#include "gduq/posthoc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

#include "gduq/errors.hpp"
#include "gduq/tensor.hpp"

namespace gduq {

namespace {

Matrix softmax_matrix(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols, 0.0);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      denom += out(i, j);
    }
    for (std::size_t j = 0; j < logits.cols; ++j) out(i, j) /= denom;
  }
  return out;
}

void check_labels(const Matrix& logits, const std::vector<int>& labels, const char* op) {
  if (labels.size() != logits.rows)
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(logits.rows) + " rows");
  for (const int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols)
      throw std::invalid_argument(std::string(op) + ": label " + std::to_string(y) +
                                  " out of range");
}

}  // namespace

double mean_nll(const Matrix& logits, const std::vector<int>& labels) {
  check_labels(logits, labels, "mean_nll");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) denom += std::exp(logits(i, j) - mx);
    total += -(logits(i, static_cast<std::size_t>(labels[i])) - mx - std::log(denom));
  }
  return total / static_cast<double>(logits.rows);
}

TemperatureScaler fit_temperature(const Matrix& val_logits, const std::vector<int>& val_labels) {
  check_labels(val_logits, val_labels, "fit_temperature");
  if (val_logits.rows < val_logits.cols)
    throw std::invalid_argument("fit_temperature: need at least q validation samples");
  {
    std::set<int> classes(val_labels.begin(), val_labels.end());
    if (classes.size() < 2)
      throw DataError("fit_temperature: degenerate single-class validation set");
  }

  const auto nll_at = [&](double log_t) {
    const double t = std::exp(log_t);
    Matrix scaled(val_logits.rows, val_logits.cols, 0.0);
    for (std::size_t i = 0; i < val_logits.data.size(); ++i)
      scaled.data[i] = val_logits.data[i] / t;
    return mean_nll(scaled, val_labels);
  };

  constexpr double kLo = -3.0, kHi = 3.0, kTol = 1e-5;
  double best_log_t = 0.0;  // T = 1 is always a candidate
  double best_nll = nll_at(0.0);
  const auto consider = [&](double log_t, double value) {
    if (value < best_nll) {
      best_nll = value;
      best_log_t = log_t;
    }
  };
  consider(kLo, nll_at(kLo));
  consider(kHi, nll_at(kHi));

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLo, b = kHi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = nll_at(c), fd = nll_at(d);
  consider(c, fc);
  consider(d, fd);
  while (b - a > kTol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = nll_at(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = nll_at(d);
      consider(d, fd);
    }
  }

  TemperatureScaler out;
  if (best_log_t <= kLo + 10 * kTol || best_log_t >= kHi - 10 * kTol) {
    out.hit_bound = true;
    best_log_t = best_log_t < 0.0 ? kLo : kHi;
    std::cerr << "fit_temperature: warning: search hit the log-temperature bound, returning T="
              << std::exp(best_log_t) << "\n";
  }
  out.temperature = std::exp(best_log_t);
  return out;
}

Matrix apply_temperature(const TemperatureScaler& scaler, const Matrix& logits) {
  if (scaler.temperature <= 0.0)
    throw std::invalid_argument("apply_temperature: temperature must be positive");
  Matrix scaled(logits.rows, logits.cols, 0.0);
  for (std::size_t i = 0; i < logits.data.size(); ++i)
    scaled.data[i] = logits.data[i] / scaler.temperature;
  return softmax_matrix(scaled);
}

VectorScaler fit_vector_scaling(const Matrix& val_logits, const std::vector<int>& val_labels,
                                int steps, double lr) {
  check_labels(val_logits, val_labels, "fit_vector_scaling");
  const std::size_t q = val_logits.cols;
  if (val_logits.rows < 2 * q)
    throw std::invalid_argument("fit_vector_scaling: need at least 2q validation samples");

  Tensor w = Tensor::full(1, q, 1.0, true);
  Tensor b = Tensor::zeros(1, q, true);
  const Tensor logits_t = Tensor::from_matrix(val_logits);
  std::vector<Tensor> params = {w, b};

  VectorScaler best{w.values(), b.values()};
  double best_nll = -1.0;
  double prev_nll = -1.0;
  int rising = 0;
  for (int step = 0; step <= steps; ++step) {
    const Tensor loss =
        softmax_cross_entropy(add(mul_rows(logits_t, w), b), val_labels);
    const double nll = loss.scalar();
    if (best_nll < 0.0 || nll < best_nll) {
      best_nll = nll;
      best.w = w.values();
      best.b = b.values();
    }
    if (prev_nll >= 0.0 && nll > prev_nll) {
      if (++rising >= 50)
        throw DataError("fit_vector_scaling: diverged (NLL increased 50 consecutive steps)");
    } else {
      rising = 0;
    }
    prev_nll = nll;
    if (step == steps) break;
    zero_grads(params);
    backward(loss);
    for (auto& p : params)
      for (std::size_t i = 0; i < p.size(); ++i) p.values()[i] -= lr * p.grad()[i];
  }
  return best;
}

Matrix apply_vector_scaling(const VectorScaler& scaler, const Matrix& logits) {
  if (scaler.w.size() != logits.cols || scaler.b.size() != logits.cols)
    throw std::invalid_argument("apply_vector_scaling: scaler dimension " +
                                std::to_string(scaler.w.size()) + " does not match q=" +
                                std::to_string(logits.cols));
  Matrix scaled(logits.rows, logits.cols, 0.0);
  for (std::size_t i = 0; i < logits.rows; ++i)
    for (std::size_t j = 0; j < logits.cols; ++j)
      scaled(i, j) = logits(i, j) * scaler.w[j] + scaler.b[j];
  return softmax_matrix(scaled);
}

}  // namespace gduq
