#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gduq/errors.hpp"

namespace gduq {

// Plain dense row-major matrix. Carries no autograd state; this is the
// storage type for graph data, anchors, and probability tables.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
      throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                  " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return at(r, c); }
  double operator()(std::size_t r, std::size_t c) const { return at(r, c); }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  std::vector<double> row(std::size_t r) const {
    return {data.begin() + static_cast<long>(r * cols), data.begin() + static_cast<long>((r + 1) * cols)};
  }

  void set_row(std::size_t r, const std::vector<double>& v) {
    for (std::size_t c = 0; c < cols; ++c) at(r, c) = v[c];
  }

  bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && data == o.data; }
};

inline std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace gduq
