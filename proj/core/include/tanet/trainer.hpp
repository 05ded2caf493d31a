#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tanet/clustering.hpp"
#include "tanet/dataset.hpp"
#include "tanet/encoder.hpp"
#include "tanet/evaluation.hpp"
#include "tanet/losses.hpp"

namespace tanet {

/// How many clusters the unlabeled data is split into.
struct ClusterCount {
  enum class Mode {
    kTrue,  // the dataset's category count K
    kFixed,  // an explicit number
    kEstimate,  // estimate_k over pretrained features
    kOvercluster,  // ceil(factor * K)
  };
  Mode mode = Mode::kTrue;
  std::size_t value = 0;
  double factor = 1.2;

  /// Accepts "true", an integer, "estimate" or "overcluster_<factor>".
  static ClusterCount parse(std::string_view text);
  std::string to_string() const;
};

enum class Variant { kFull, kNoP2I, kNoP2P, kNoCE, kNoI2I, kNoU, kNoI2P };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);
const std::vector<Variant>& all_variants();
LossTerms terms_for(Variant v);

struct TrainConfig {
  std::size_t k_top = 5;
  double alpha = 0.8;
  double beta = 100.0;
  double tau = 0.07;

  std::size_t epochs = 20;
  std::size_t pretrain_epochs = 200;
  std::size_t batch_size = 64;
  double lr_pretrain = 1e-3;
  double lr_train = 1e-3;
  double weight_decay = 0.01;
  std::size_t early_stop_patience = 20;
  double validation_fraction = 0.1;

  ClusterCount k_clusters;
  std::size_t k_max = 0;  // estimate mode; 0 means 2 * K
  double drop_ratio = 0.5;
  std::size_t refresh_every = 1;  // epochs between prototype refreshes

  std::vector<std::size_t> hidden = {64};
  std::size_t feature_dim = 32;
  double dropout = 0.1;
  double aug_noise = 0.0;
  bool normalize_distances = false;

  KMeansOptions kmeans;
  MappingMode mapping = MappingMode::kGlobal;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PretrainReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  double train_accuracy = 0.0;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown losses;  // batch means
  double pseudo_label_acc = 0.0;
  double proto_dist_before = 0.0;  // feature space, to per-category means
  double proto_dist_after = 0.0;
  double match_cost = 0.0;
  std::size_t p2i_empty_batches = 0;
};

struct TrainResult {
  EncoderHead head;
  std::vector<EpochReport> epochs;
  MetricsReport final;
  std::size_t num_clusters = 0;
};

/// Head sized for the dataset: input D, classifier over the known categories.
EncoderHead make_head(const Dataset& ds, const TrainConfig& cfg);

/// Supervised cross-entropy on the Labeled split with early stopping on a
/// held-out labeled slice; returns the best head seen.
EncoderHead pretrain(EncoderHead head, const Dataset& ds, const TrainConfig& cfg, PretrainReport* report = nullptr);

std::size_t resolve_cluster_count(const ClusterCount& count, const Dataset& ds, const EncoderHead& head,
                                  const TrainConfig& cfg);

/// Alignment training. Every refresh: Eval-mode features -> k-means on the
/// unlabeled split -> labeled prototypes -> matching -> calibration; then
/// mini-batch descent on the enabled loss terms with prototypes fixed.
TrainResult train(EncoderHead head, const Dataset& ds, const TrainConfig& cfg, Variant variant = Variant::kFull);

/// Test-split metrics for a head: clusters the unlabeled features into
/// num_clusters groups and assigns each test instance to its nearest center.
MetricsReport evaluate_head(const EncoderHead& head, const Dataset& ds, std::size_t num_clusters,
                            const TrainConfig& cfg);

/// The comparison point: pretrained features, clustered, no alignment.
MetricsReport kmeans_baseline(const EncoderHead& pretrained, const Dataset& ds, const TrainConfig& cfg);

/// Trains the given variant starting from a pretrained head.
MetricsReport run_ablation(Variant variant, const EncoderHead& pretrained, const Dataset& ds, const TrainConfig& cfg);
/// Full pipeline (make_head, pretrain, train) for one variant.
MetricsReport run_ablation(Variant variant, const Dataset& ds, const TrainConfig& cfg);

/// One cluster -> prototypes -> match -> calibrate pass over fixed features,
/// with optional distances to ground-truth prototypes living in the same
/// space.
struct CalibrationDiagnostics {
  Clustering clustering;
  PrototypeSet labeled;
  PrototypeSet unlabeled;
  PrototypeSet calibrated;
  MatchMap match;
  TransferSpec transfer;
  std::optional<PrototypeDistances> distances;
};

CalibrationDiagnostics calibration_diagnostics(const Matrix& unlabeled_features, const Matrix& labeled_features,
                                               std::span<const int> labeled_labels, std::size_t num_clusters,
                                               const TrainConfig& cfg, const PrototypeSet* truth = nullptr);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace tanet
