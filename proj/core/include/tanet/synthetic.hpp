#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>

#include "tanet/dataset.hpp"
#include "tanet/prototypes.hpp"

namespace tanet {

enum class LabeledSampling {
  kPerCategory,  // labeled_fraction of each known category's training rows
  kGlobal,  // labeled_fraction of all known-category training rows
};

struct SyntheticConfig {
  std::size_t dim = 16;
  std::size_t n_categories = 20;
  double novel_fraction = 0.25;
  double labeled_fraction = 0.1;
  std::size_t per_category_count = 200;
  double center_scale = 1.0;
  double noise_sigma = 0.35;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  LabeledSampling sampling = LabeledSampling::kPerCategory;

  void validate() const;

  // Benchmark configuration used throughout the acceptance suite.
  static SyntheticConfig acceptance(std::uint64_t seed = 0);
};

struct SyntheticBenchmark {
  Dataset dataset;
  PrototypeSet truth;  // ground-truth centers, ids = category ids
};

/// round(fraction * count), halves rounded up.
std::size_t round_half_up(double fraction, std::size_t count);

/// Spherical Gaussian mixture: K centers ~ N(0, center_scale^2 I), instances
/// ~ N(center, noise_sigma^2 I). A seeded random subset of round(novel_fraction
/// * K) categories is novel (never labeled). Deterministic in cfg.
SyntheticBenchmark make_synthetic(const SyntheticConfig& cfg);

// Truth sidecar: same TSV layout as the feature file, one row per center.
// The split column marks known ("labeled") vs novel ("unlabeled") categories.
void save_truth_file(const PrototypeSet& truth, const std::set<int>& known, const std::filesystem::path& path);
PrototypeSet load_truth_file(const std::filesystem::path& path);

}  // namespace tanet
