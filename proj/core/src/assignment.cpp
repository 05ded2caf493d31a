#include "tanet/assignment.hpp"

#include <limits>

#include "tanet/error.hpp"

namespace tanet {
namespace {

// Requires n <= m. Returns, for each row, its assigned column.
std::vector<int> solve_tall_or_square(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based arrays; column 0 is a virtual sink.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Matrix& cost) {
  require(all_finite(cost.values()), "solve_assignment: cost matrix must be finite");
  Assignment result;
  if (cost.rows() == 0 || cost.cols() == 0) {
    result.row_to_col.assign(cost.rows(), -1);
    return result;
  }

  if (cost.rows() <= cost.cols()) {
    result.row_to_col = solve_tall_or_square(cost);
  } else {
    Matrix t(cost.cols(), cost.rows());
    for (std::size_t r = 0; r < cost.rows(); ++r)
      for (std::size_t c = 0; c < cost.cols(); ++c) t(c, r) = cost(r, c);
    const auto col_to_row = solve_tall_or_square(t);
    result.row_to_col.assign(cost.rows(), -1);
    for (std::size_t c = 0; c < col_to_row.size(); ++c)
      result.row_to_col[static_cast<std::size_t>(col_to_row[c])] = static_cast<int>(c);
  }

  for (std::size_t r = 0; r < cost.rows(); ++r)
    if (result.row_to_col[r] >= 0)
      result.total_cost += cost(r, static_cast<std::size_t>(result.row_to_col[r]));
  return result;
}

}  // namespace tanet
