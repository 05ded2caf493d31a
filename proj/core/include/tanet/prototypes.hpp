#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tanet/clustering.hpp"
#include "tanet/dataset.hpp"
#include "tanet/linalg.hpp"

namespace tanet {

enum class PrototypeKind { kLabeled, kUnlabeled, kCalibrated, kGroundTruth };

std::string_view to_string(PrototypeKind kind);

/// A bank of prototype vectors, one row per category (labeled, ground truth)
/// or per cluster (unlabeled, calibrated). ids[r] names row r.
struct PrototypeSet {
  PrototypeKind kind = PrototypeKind::kUnlabeled;
  Matrix vectors;
  std::vector<int> ids;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
  std::optional<std::size_t> index_of(int id) const;

  friend bool operator==(const PrototypeSet&, const PrototypeSet&) = default;
};

/// The match function: labeled category -> cluster, injective.
struct MatchMap {
  // (labeled category id, cluster id), in labeled-prototype order.
  std::vector<std::pair<int, int>> pairs;
  double total_cost = 0.0;

  std::optional<int> cluster_of(int labeled_id) const;
  std::optional<int> labeled_of(int cluster_id) const;
};

struct TransferSpec {
  std::size_t k = 0;
  double alpha = 1.0;
  // Per cluster: rows of the labeled set in the transfer set (most similar
  // first), and the matching softmax weights.
  std::vector<std::vector<std::size_t>> sets;
  std::vector<Vector> weights;
};

struct Calibration {
  PrototypeSet calibrated;
  TransferSpec transfer;
};

/// Per-category mean feature. ids come out sorted ascending.
PrototypeSet labeled_prototypes(const Matrix& features, std::span<const int> labels);
/// Convenience over a whole dataset: features[r] belongs to ds[r]; only the
/// Labeled split contributes.
PrototypeSet labeled_prototypes(const Dataset& ds, const Matrix& features);

/// Cluster centers as prototypes, ids 0..k-1.
PrototypeSet unlabeled_prototypes(const Clustering& clustering);
/// Recomputes each cluster's mean from the features; an empty cluster keeps
/// its center.
PrototypeSet unlabeled_prototypes(const Matrix& features, const Clustering& clustering);

/// Minimum total Euclidean distance injective matching of labeled prototypes
/// onto clusters. Requires labeled.size() <= unlabeled.size().
MatchMap match_prototypes(const PrototypeSet& labeled, const PrototypeSet& unlabeled);

/// Calibrates every unlabeled prototype towards its k nearest labeled
/// prototypes:
///   c_i = alpha * u_i + (1 - alpha) * sum_{j in T_i} w_ij * l_j,
///   w_i = softmax(-|u_i - l_j| / sqrt(D)) over the top-k set T_i.
/// Similarity ties go to the lower labeled id.
Calibration calibrate(const PrototypeSet& unlabeled, const PrototypeSet& labeled, std::size_t k,
                      double alpha);

}  // namespace tanet
