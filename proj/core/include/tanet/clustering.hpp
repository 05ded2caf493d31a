#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tanet/linalg.hpp"

namespace tanet {

struct KMeansOptions {
  std::size_t max_iter = 100;
  double tol = 1e-6;  // stop once no center moves farther than this
  std::size_t restarts = 5;  // k-means++ restarts, lowest inertia wins
  std::size_t threads = 1;
};

struct Clustering {
  Matrix centers;
  std::vector<int> assignment;
  double inertia = 0.0;
  std::size_t n_iter = 0;
  // Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_trace;

  std::size_t k() const noexcept { return centers.rows(); }
  std::vector<std::size_t> cluster_sizes() const;
};

/// Lloyd's algorithm from a k-means++ start. Deterministic for a given
/// (points, k, seed, options); the thread count only splits the assignment
/// step, so results do not depend on it.
Clustering kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                  const KMeansOptions& options = {});

/// Nearest center per point, ties to the lowest center id.
std::vector<int> assign_nearest(const Matrix& points, const Matrix& centers,
                                std::size_t threads = 1);

double compute_inertia(const Matrix& points, const Matrix& centers,
                       const std::vector<int>& assignment);

/// Category-count estimate: cluster into k_max groups and count the clusters
/// holding at least drop_ratio * (N / k_max) points.
std::size_t estimate_k(const Matrix& points, std::size_t k_max, double drop_ratio,
                       std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace tanet
