#pragma once

#include <vector>

#include "gduq/dense.hpp"

namespace gduq {

struct TemperatureScaler {
  double temperature = 1.0;
  bool hit_bound = false;  // search stopped at the log-temperature bound
};

struct VectorScaler {
  std::vector<double> w;  // per-class scale, init 1
  std::vector<double> b;  // per-class bias, init 0
};

double mean_nll(const Matrix& logits, const std::vector<int>& labels);

// Minimizes validation NLL of softmax(logits / T) by golden-section search on
// log T in [-3, 3]; returns the best candidate it evaluated (T = 1 included),
// so the fitted NLL never exceeds the unscaled one.
TemperatureScaler fit_temperature(const Matrix& val_logits, const std::vector<int>& val_labels);

Matrix apply_temperature(const TemperatureScaler& scaler, const Matrix& logits);  // probabilities

// Minimizes validation NLL of softmax(w * logits + b) by full-batch gradient
// descent (500 steps, lr 0.01); returns the best iterate evaluated.
VectorScaler fit_vector_scaling(const Matrix& val_logits, const std::vector<int>& val_labels,
                                int steps = 500, double lr = 0.01);

Matrix apply_vector_scaling(const VectorScaler& scaler, const Matrix& logits);  // probabilities

}  // namespace gduq
