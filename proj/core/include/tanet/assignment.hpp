#pragma once

#include <vector>

#include "tanet/linalg.hpp"

namespace tanet {

struct Assignment {
  // row_to_col[r] is the column assigned to row r, or -1 when the matrix is
  // wider than tall on the other side (see solve_assignment).
  std::vector<int> row_to_col;
  double total_cost = 0.0;
};

/// Minimum-cost injective assignment for a rectangular cost matrix, via the
/// shortest augmenting path method with dual potentials, O(n^2 m).
/// If rows > cols the problem is solved on the transpose, so every column is
/// matched and (rows - cols) rows stay unassigned (-1).
Assignment solve_assignment(const Matrix& cost);

}  // namespace tanet
