#pragma once

#include <cstddef>
#include <vector>

#include "mec/errors.hpp"

namespace mec {

// Dense row-major matrix. Proposal counts are capped at 165 per video, so a
// flat vector is all the linear algebra this toolkit needs.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool empty() const { return rows == 0 || cols == 0; }

  void check_index(std::size_t r, std::size_t c) const {
    if (r >= rows || c >= cols) {
      raise(ErrorKind::index,
            "matrix index (" + std::to_string(r) + "," + std::to_string(c) +
                ") outside shape " + std::to_string(rows) + "x" +
                std::to_string(cols));
    }
  }
};

}  // namespace mec
