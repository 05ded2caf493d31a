#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "tanet/prototypes.hpp"

namespace tanet {

struct HungarianResult {
  double accuracy = 0.0;
  std::size_t matched = 0;
  std::map<int, int> mapping;  // cluster id -> category id
};

/// Best injective cluster->category relabeling (maximum matched count) and
/// the fraction of instances it gets right. When there are more clusters
/// than categories the surplus clusters stay unmapped.
HungarianResult hungarian_accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Harmonic mean of known and novel accuracy; 0 unless both are positive.
double h_score(double known_acc, double novel_acc);

enum class MappingMode {
  kGlobal,  // one mapping over the whole set, restricted per subset
  kPerSubset,  // separate mapping for the known and novel subsets
};

struct PrototypeDistances {
  // Mean distance to the matched ground-truth center, over all matched
  // clusters and over the clusters matched to a labeled category.
  double before = 0.0;
  double after = 0.0;
  double before_known = 0.0;
  double after_known = 0.0;
  std::size_t clusters = 0;
  std::size_t known_clusters = 0;
  // Per cluster row: matched truth row (-1 if none) and both distances
  // (NaN when unmatched).
  std::vector<int> truth_row;
  Vector per_cluster_before;
  Vector per_cluster_after;
};

struct MetricsReport {
  double h_score = 0.0;
  double known_acc = 0.0;
  double novel_acc = 0.0;
  double overall_acc = 0.0;
  double pseudo_label_acc = 0.0;  // NaN when not measured
  double proto_dist_before = 0.0;  // NaN without a truth sidecar
  double proto_dist_after = 0.0;
  std::size_t known_count = 0;
  std::size_t novel_count = 0;
  bool known_empty = false;
  bool novel_empty = false;
  std::map<int, int> mapping;
};

/// Known/Novel/overall accuracy on one labeled prediction set. Empty subsets
/// report NaN and force h_score to 0.
MetricsReport split_metrics(std::span<const int> predicted, std::span<const int> truth,
                            const std::set<int>& known, MappingMode mode = MappingMode::kGlobal);

/// Hungarian-matched accuracy of cluster ids against the unlabeled split's
/// ground truth.
double pseudo_label_accuracy(std::span<const int> assignment, std::span<const int> truth);

/// Mean distance of the unlabeled and calibrated prototypes to the ground
/// truth, with clusters matched onto truth centers by minimum total distance
/// (computed once, on the unlabeled prototypes).
PrototypeDistances prototype_distance_report(const PrototypeSet& unlabeled, const PrototypeSet& calibrated,
                                             const PrototypeSet& truth, const MatchMap& match);

}  // namespace tanet
