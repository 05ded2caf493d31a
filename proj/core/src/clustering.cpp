#include "tanet/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "tanet/error.hpp"

namespace tanet {
namespace {

template <typename Fn>
void parallel_rows(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

double uniform01(std::mt19937_64& rng) {
  return std::generate_canonical<double, 53>(rng);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Matrix kmeanspp_init(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  centers.set_row(0, points.row(uniform_index(rng, n)));

  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(points.row(i), centers.row(0));

  // Greedy variant: draw several D^2-weighted candidates per step and keep
  // the one that lowers the potential the most.
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> candidate(n), best_closest(n);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : closest) total += d;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = uniform_index(rng, n);
      for (std::size_t i = 0; i < n; ++i)
        best_closest[i] = std::min(closest[i], squared_distance(points.row(i), points.row(pick)));
    } else {
      double best_potential = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        std::size_t idx = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += closest[i];
          if (acc > target) {
            idx = i;
            break;
          }
        }
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          candidate[i] = std::min(closest[i], squared_distance(points.row(i), points.row(idx)));
          potential += candidate[i];
        }
        if (potential < best_potential) {
          best_potential = potential;
          pick = idx;
          best_closest.swap(candidate);
        }
      }
    }
    centers.set_row(c, points.row(pick));
    closest.swap(best_closest);
  }
  return centers;
}

// Means of the assigned points; an empty cluster is reseeded at the point
// farthest from its own center (each point used at most once).
Matrix update_centers(const Matrix& points, const Matrix& old_centers, std::vector<int>& assignment) {
  const std::size_t k = old_centers.rows();
  Matrix centers(k, points.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    axpy(1.0, points.row(i), centers.row(c));
    ++counts[c];
  }

  std::vector<double> far;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) {
      for (double& v : centers.row(c)) v /= static_cast<double>(counts[c]);
      continue;
    }
    if (far.empty()) {
      far.resize(points.rows());
      for (std::size_t i = 0; i < points.rows(); ++i)
        far[i] = squared_distance(points.row(i), old_centers.row(static_cast<std::size_t>(assignment[i])));
    }
    const auto it = std::max_element(far.begin(), far.end());
    const auto idx = static_cast<std::size_t>(it - far.begin());
    centers.set_row(c, points.row(idx));
    *it = -1.0;
  }
  return centers;
}

Clustering lloyd(const Matrix& points, Matrix centers, const KMeansOptions& options) {
  Clustering out;
  auto assignment = assign_nearest(points, centers, options.threads);
  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    out.inertia_trace.push_back(compute_inertia(points, centers, assignment));
    Matrix next = update_centers(points, centers, assignment);
    double shift = 0.0;
    for (std::size_t c = 0; c < centers.rows(); ++c)
      shift = std::max(shift, distance(centers.row(c), next.row(c)));
    centers = std::move(next);
    assignment = assign_nearest(points, centers, options.threads);
    out.n_iter = iter;
    if (shift < options.tol) break;
  }
  out.inertia = compute_inertia(points, centers, assignment);
  out.inertia_trace.push_back(out.inertia);
  out.centers = std::move(centers);
  out.assignment = std::move(assignment);
  return out;
}

}  // namespace

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(k(), 0);
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

std::vector<int> assign_nearest(const Matrix& points, const Matrix& centers, std::size_t threads) {
  std::vector<int> out(points.rows(), 0);
  parallel_rows(points.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < centers.rows(); ++c) {
        const double d = squared_distance(points.row(i), centers.row(c));
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      out[i] = best_c;
    }
  });
  return out;
}

double compute_inertia(const Matrix& points, const Matrix& centers, const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    total += squared_distance(points.row(i), centers.row(static_cast<std::size_t>(assignment[i])));
  return total;
}

Clustering kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  require(k >= 1, "kmeans: k must be at least 1");
  require(k <= points.rows(), "kmeans: k (" + std::to_string(k) + ") exceeds the number of points (" +
                                  std::to_string(points.rows()) + ")");
  require(all_finite(points.values()), "kmeans: points must be finite");
  require(options.max_iter >= 1, "kmeans: max_iter must be at least 1");

  std::mt19937_64 rng(seed);
  Clustering best;
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    Clustering run = lloyd(points, kmeanspp_init(points, k, rng), options);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::size_t estimate_k(const Matrix& points, std::size_t k_max, double drop_ratio, std::uint64_t seed,
                       const KMeansOptions& options) {
  require(k_max >= 1, "estimate_k: k_max must be at least 1");
  require(drop_ratio > 0.0 && drop_ratio < 1.0, "estimate_k: drop_ratio must lie in (0, 1)");
  const auto clustering = kmeans(points, k_max, seed, options);
  const double threshold = drop_ratio * static_cast<double>(points.rows()) / static_cast<double>(k_max);
  std::size_t kept = 0;
  for (auto size : clustering.cluster_sizes())
    if (static_cast<double>(size) >= threshold) ++kept;
  return kept;
}

}  // namespace tanet
