#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "comet/error.hpp"

namespace comet {

// Minimal dense row-major matrix of doubles. The model is small enough that
// a flat vector with explicit loops beats pulling in a linear-algebra
// dependency, and it keeps the arithmetic auditable against the gradient
// derivations in the trainer.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

inline void matvec(const Matrix& m, std::span<const double> x,
                   std::span<double> out) {
  if (x.size() != m.cols || out.size() != m.rows)
    throw data_error("matvec: dimension mismatch");
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* w = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  std::vector<double> out(m.rows);
  matvec(m, x, out);
  return out;
}

} // namespace comet
