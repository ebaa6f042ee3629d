#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mec/errors.hpp"
#include "mec/metrics.hpp"

namespace mec::metrics {

namespace {

// Shortest-augmenting-path Hungarian for a matrix with rows <= cols.
// Returns the assigned column per row; total cost is minimal.
std::vector<int> solve_wide(const Matrix& a) {
  const int n = static_cast<int>(a.rows);
  const int m = static_cast<int>(a.cols);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<int> hungarian_match(const Matrix& cost) {
  if (cost.rows == 0 || cost.cols == 0) return std::vector<int>(cost.rows, -1);
  for (double v : cost.data) {
    if (!std::isfinite(v)) {
      raise(ErrorKind::value, "hungarian_match requires finite costs");
    }
  }
  if (cost.rows <= cost.cols) return solve_wide(cost);
  // Tall matrix: solve the transpose and invert the mapping.
  Matrix t(cost.cols, cost.rows);
  for (std::size_t r = 0; r < cost.rows; ++r) {
    for (std::size_t c = 0; c < cost.cols; ++c) {
      t.at(c, r) = cost.at(r, c);
    }
  }
  const std::vector<int> col_to_row = solve_wide(t);
  std::vector<int> row_to_col(cost.rows, -1);
  for (std::size_t c = 0; c < col_to_row.size(); ++c) {
    if (col_to_row[c] >= 0) row_to_col[col_to_row[c]] = static_cast<int>(c);
  }
  return row_to_col;
}

double assignment_cost(const Matrix& cost, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r] >= 0) {
      total += cost.at(r, static_cast<std::size_t>(row_to_col[r]));
    }
  }
  return total;
}

}  // namespace mec::metrics
