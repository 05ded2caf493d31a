#include "tanet/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>

#include "tanet/assignment.hpp"
#include "tanet/error.hpp"
#include "tanet/optim.hpp"
#include "tanet/prototypes.hpp"

namespace tanet {
namespace {

// Independent seed streams per consumer.
enum Stream : std::uint64_t {
  kInit = 1,
  kValidationSplit,
  kPretrainShuffle,
  kPretrainNoise,
  kClassifier,
  kCluster,
  kShuffle,
  kViewA,
  kViewB,
  kLabeledView,
  kLabeledShuffle,
  kEstimate,
  kEvaluate,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Known category -> classifier output, in ascending category order.
std::vector<int> known_targets(const Dataset& ds, std::span<const int> labels) {
  const std::vector<int> known(ds.known_categories().begin(), ds.known_categories().end());
  std::vector<int> out;
  out.reserve(labels.size());
  for (int y : labels) {
    const auto it = std::lower_bound(known.begin(), known.end(), y);
    out.push_back(static_cast<int>(it - known.begin()));
  }
  return out;
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// One forward/backward of L_ce on the given rows; gradients scaled by weight.
double labeled_ce_step(const EncoderHead& head, const Matrix& x, std::span<const int> targets, Mode mode,
                       std::uint64_t noise_seed, double weight, HeadGradients& grads) {
  auto pass = forward(head, x, mode, noise_seed);
  const Matrix logits = classify(head, pass.features);
  auto ce = loss_ce(logits, targets);
  for (double& v : ce.grad.values()) v *= weight;
  Matrix dz = classify_backward(head, pass.features, ce.grad, grads);
  backward(head, pass.tape, dz, grads);
  return ce.value;
}

double mean_ce(const EncoderHead& head, const Matrix& x, std::span<const int> targets, double* accuracy) {
  const Matrix logits = classify(head, encode(head, x));
  if (accuracy) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      const auto row = logits.row(i);
      const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
      if (arg == targets[i]) ++hits;
    }
    *accuracy = static_cast<double>(hits) / static_cast<double>(logits.rows());
  }
  return loss_ce(logits, targets).value;
}

Matrix maybe_normalized(const Matrix& z, bool normalize) {
  return normalize ? normalize_rows(z).rows : z;
}

// Cluster state for one refresh, with clusters renumbered so that cluster i
// is matched to labeled prototype row i for i < M, and the remaining
// clusters follow the previous refresh's order as closely as possible.
struct PrototypeState {
  std::vector<int> assignment;
  PrototypeSet labeled;
  PrototypeSet unlabeled;
  PrototypeSet calibrated;
  MatchMap match;
  Clustering clustering;
};

PrototypeState refresh_prototypes(const Matrix& unlabeled_features, const Matrix& labeled_features,
                                  std::span<const int> labeled_labels, std::size_t num_clusters,
                                  const TrainConfig& cfg, double alpha, std::uint64_t seed,
                                  const Matrix* previous_extra_centers) {
  PrototypeState st;
  st.clustering = kmeans(unlabeled_features, num_clusters, seed, cfg.kmeans);
  st.labeled = labeled_prototypes(labeled_features, labeled_labels);
  PrototypeSet pu = unlabeled_prototypes(unlabeled_features, st.clustering);
  const MatchMap mm = match_prototypes(st.labeled, pu);

  const std::size_t m = st.labeled.size();
  std::vector<int> new_id(num_clusters, -1);
  for (std::size_t i = 0; i < mm.pairs.size(); ++i) new_id[static_cast<std::size_t>(mm.pairs[i].second)] = static_cast<int>(i);
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < num_clusters; ++c)
    if (new_id[c] < 0) rest.push_back(c);
  if (previous_extra_centers && previous_extra_centers->rows() == rest.size() && !rest.empty()) {
    const Matrix cost = pairwise_distances(pu.vectors.select_rows(rest), *previous_extra_centers);
    const Assignment a = solve_assignment(cost);
    for (std::size_t r = 0; r < rest.size(); ++r) new_id[rest[r]] = static_cast<int>(m) + a.row_to_col[r];
  } else {
    for (std::size_t r = 0; r < rest.size(); ++r) new_id[rest[r]] = static_cast<int>(m + r);
  }

  st.unlabeled = pu;
  Matrix centers(num_clusters, unlabeled_features.cols());
  for (std::size_t c = 0; c < num_clusters; ++c) {
    const auto to = static_cast<std::size_t>(new_id[c]);
    st.unlabeled.vectors.set_row(to, pu.vectors.row(c));
    centers.set_row(to, st.clustering.centers.row(c));
  }
  st.clustering.centers = std::move(centers);
  for (int& a : st.clustering.assignment) a = new_id[static_cast<std::size_t>(a)];
  st.assignment = st.clustering.assignment;
  for (std::size_t i = 0; i < mm.pairs.size(); ++i) st.match.pairs.emplace_back(mm.pairs[i].first, static_cast<int>(i));
  st.match.total_cost = mm.total_cost;

  st.calibrated = calibrate(st.unlabeled, st.labeled, std::min(cfg.k_top, m), alpha).calibrated;
  return st;
}

// Distance of each cluster prototype to the feature-space mean of the
// category it is Hungarian-matched to. Evaluation-only: reads ground truth.
std::pair<double, double> feature_space_prototype_distances(const Matrix& features, std::span<const int> truth,
                                                            const PrototypeState& st) {
  PrototypeSet gt = labeled_prototypes(features, truth);
  gt.kind = PrototypeKind::kGroundTruth;
  const auto d = prototype_distance_report(st.unlabeled, st.calibrated, gt, st.match);
  return {d.before, d.after};
}

}  // namespace

ClusterCount ClusterCount::parse(std::string_view text) {
  ClusterCount c;
  if (text == "true" || text == "k") return c;
  if (text == "estimate") {
    c.mode = Mode::kEstimate;
    return c;
  }
  if (text.starts_with("overcluster")) {
    c.mode = Mode::kOvercluster;
    if (text == "overcluster") return c;
    if (!text.starts_with("overcluster_")) fail(ErrorKind::kConfig, "bad cluster count '" + std::string(text) + "'");
    const std::string factor(text.substr(12));
    char* end = nullptr;
    c.factor = std::strtod(factor.c_str(), &end);
    if (factor.empty() || end != factor.c_str() + factor.size() || !(c.factor >= 1.0))
      fail(ErrorKind::kConfig, "bad over-clustering factor '" + factor + "'");
    return c;
  }
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0)
    fail(ErrorKind::kConfig, "bad cluster count '" + std::string(text) + "'");
  c.mode = Mode::kFixed;
  c.value = v;
  return c;
}

std::string ClusterCount::to_string() const {
  switch (mode) {
    case Mode::kTrue: return "true";
    case Mode::kFixed: return std::to_string(value);
    case Mode::kEstimate: return "estimate";
    case Mode::kOvercluster: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "overcluster_%g", factor);
      return buf;
    }
  }
  return "true";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoP2I: return "no_p2i";
    case Variant::kNoP2P: return "no_p2p";
    case Variant::kNoCE: return "no_ce";
    case Variant::kNoI2I: return "no_i2i";
    case Variant::kNoU: return "no_u";
    case Variant::kNoI2P: return "no_i2p";
  }
  return "full";
}

std::optional<Variant> parse_variant(std::string_view text) {
  for (auto v : all_variants())
    if (to_string(v) == text) return v;
  return std::nullopt;
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> kAll = {Variant::kFull, Variant::kNoP2I, Variant::kNoP2P, Variant::kNoCE,
                                            Variant::kNoI2I, Variant::kNoU, Variant::kNoI2P};
  return kAll;
}

LossTerms terms_for(Variant v) {
  LossTerms t;
  switch (v) {
    case Variant::kNoP2I: t.p2i = false; break;
    case Variant::kNoCE: t.ce = false; break;
    case Variant::kNoI2I: t.i2i = false; break;
    case Variant::kNoU: t.u = false; break;
    case Variant::kNoI2P: t.i2p = false; break;
    case Variant::kFull:
    case Variant::kNoP2P: break;
  }
  return t;
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::kConfig, "train config: " + what); };
  if (k_top == 0) bad("k_top must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must lie in [0, 1]");
  if (!(beta >= 0.0)) bad("beta must be non-negative");
  if (!(tau > 0.0)) bad("tau must be positive");
  if (batch_size < 2) bad("batch_size must be at least 2");
  if (!(lr_pretrain > 0.0) || !(lr_train > 0.0)) bad("learning rates must be positive");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) bad("validation_fraction must lie in [0, 1)");
  if (!(drop_ratio > 0.0 && drop_ratio < 1.0)) bad("drop_ratio must lie in (0, 1)");
  if (refresh_every == 0) bad("refresh_every must be positive");
  if (feature_dim == 0) bad("feature_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (!(aug_noise >= 0.0)) bad("aug_noise must be non-negative");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

EncoderHead make_head(const Dataset& ds, const TrainConfig& cfg) {
  require(ds.num_known() > 0, "make_head: dataset has no labeled categories");
  EncoderShape shape;
  shape.input_dim = ds.dim();
  shape.hidden = cfg.hidden;
  shape.feature_dim = cfg.feature_dim;
  shape.num_classes = ds.num_known();
  shape.dropout_rate = cfg.dropout;
  EncoderHead head = EncoderHead::create(shape, derive_seed(cfg.seed, kInit));
  head.input_noise = cfg.aug_noise;
  return head;
}

EncoderHead pretrain(EncoderHead head, const Dataset& ds, const TrainConfig& cfg, PretrainReport* report) {
  cfg.validate();
  const auto labeled = ds.indices(Split::kLabeled);
  if (labeled.empty()) fail(ErrorKind::kInvalidArgument, "pretrain: dataset has no labeled instances");
  if (head.num_classes() < ds.num_known())
    fail(ErrorKind::kInvalidArgument, "pretrain: classifier has fewer outputs than known categories");

  PretrainReport local;
  PretrainReport& rep = report ? *report : local;
  rep = {};
  if (cfg.pretrain_epochs == 0) return head;

  // Hold out a slice of the labeled rows for early stopping.
  const auto order = shuffled(labeled.size(), derive_seed(cfg.seed, kValidationSplit));
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(labeled.size())));
  if (labeled.size() < 2) n_val = 0;
  std::vector<std::size_t> val_rows, fit_rows;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val_rows : fit_rows).push_back(labeled[order[i]]);

  const Matrix x_fit = ds.embeddings(fit_rows);
  const auto y_fit = known_targets(ds, ds.labels(fit_rows));
  const Matrix x_val = ds.embeddings(val_rows);
  const auto y_val = known_targets(ds, ds.labels(val_rows));

  AdamW opt({.lr = cfg.lr_pretrain, .weight_decay = cfg.weight_decay});
  EncoderHead best = head;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const auto perm = shuffled(fit_rows.size(), derive_seed(cfg.seed, kPretrainShuffle, epoch));
    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(perm.size(), start + cfg.batch_size);
      std::vector<std::size_t> rows(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                    perm.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> targets;
      for (auto r : rows) targets.push_back(y_fit[r]);
      auto grads = HeadGradients::zeros_like(head);
      labeled_ce_step(head, x_fit.select_rows(rows), targets, Mode::kTrain,
                      derive_seed(cfg.seed, kPretrainNoise, epoch * 100003 + start), 1.0, grads);
      opt.step(head, grads);
    }
    ++rep.epochs_run;

    const double monitor = val_rows.empty() ? mean_ce(head, x_fit, y_fit, nullptr) : mean_ce(head, x_val, y_val, nullptr);
    if (monitor < best_loss) {
      best_loss = monitor;
      best = head;
      rep.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  rep.best_validation_loss = best_loss;
  mean_ce(best, x_fit, y_fit, &rep.train_accuracy);
  return best;
}

std::size_t resolve_cluster_count(const ClusterCount& count, const Dataset& ds, const EncoderHead& head,
                                  const TrainConfig& cfg) {
  switch (count.mode) {
    case ClusterCount::Mode::kTrue: return ds.num_categories();
    case ClusterCount::Mode::kFixed: return count.value;
    case ClusterCount::Mode::kOvercluster:
      return static_cast<std::size_t>(std::ceil(count.factor * static_cast<double>(ds.num_categories()) - 1e-9));
    case ClusterCount::Mode::kEstimate: {
      const auto rows = ds.indices(Split::kUnlabeled);
      const Matrix z = maybe_normalized(encode(head, ds.embeddings(rows)), cfg.normalize_distances);
      const std::size_t k_max = std::min(rows.size(), cfg.k_max > 0 ? cfg.k_max : 2 * ds.num_categories());
      return estimate_k(z, k_max, cfg.drop_ratio, derive_seed(cfg.seed, kEstimate), cfg.kmeans);
    }
  }
  return ds.num_categories();
}

MetricsReport evaluate_head(const EncoderHead& head, const Dataset& ds, std::size_t num_clusters,
                            const TrainConfig& cfg) {
  const auto unl = ds.indices(Split::kUnlabeled);
  const auto test = ds.indices(Split::kTest);
  require(!test.empty(), "evaluate_head: dataset has no test instances");
  const Matrix zu = maybe_normalized(encode(head, ds.embeddings(unl)), cfg.normalize_distances);
  const Matrix zt = maybe_normalized(encode(head, ds.embeddings(test)), cfg.normalize_distances);
  const Clustering cl = kmeans(zu, num_clusters, derive_seed(cfg.seed, kEvaluate), cfg.kmeans);
  const auto pred = assign_nearest(zt, cl.centers, cfg.kmeans.threads);
  MetricsReport report = split_metrics(pred, ds.labels(test), ds.known_categories(), cfg.mapping);
  report.pseudo_label_acc = pseudo_label_accuracy(cl.assignment, ds.labels(unl));
  return report;
}

MetricsReport kmeans_baseline(const EncoderHead& pretrained, const Dataset& ds, const TrainConfig& cfg) {
  return evaluate_head(pretrained, ds, resolve_cluster_count(cfg.k_clusters, ds, pretrained, cfg), cfg);
}

TrainResult train(EncoderHead head, const Dataset& ds, const TrainConfig& cfg, Variant variant) {
  cfg.validate();
  const auto unl = ds.indices(Split::kUnlabeled);
  const auto lab = ds.indices(Split::kLabeled);
  if (lab.empty()) fail(ErrorKind::kInvalidArgument, "train: dataset has no labeled instances");
  if (unl.size() < 2) fail(ErrorKind::kInvalidArgument, "train: need at least two unlabeled instances");

  const std::size_t m = ds.num_known();
  const std::size_t k = resolve_cluster_count(cfg.k_clusters, ds, head, cfg);
  if (k < m)
    fail(ErrorKind::kConfig, "train: " + std::to_string(k) + " clusters cannot hold " + std::to_string(m) +
                                 " known categories");
  if (k > unl.size()) fail(ErrorKind::kConfig, "train: more clusters than unlabeled instances");

  const LossTerms terms = terms_for(variant);
  const double alpha = variant == Variant::kNoP2P ? 1.0 : cfg.alpha;
  const bool norm_d = cfg.normalize_distances;

  const Matrix x_u = ds.embeddings(unl);
  const Matrix x_l = ds.embeddings(lab);
  const auto labels_l = ds.labels(lab);
  const auto targets_l = known_targets(ds, labels_l);  // == matched cluster ids after renumbering
  const auto truth_u = ds.labels(unl);  // evaluation-only

  resize_classifier(head, k, derive_seed(cfg.seed, kClassifier));
  AdamW opt({.lr = cfg.lr_train, .weight_decay = cfg.weight_decay});

  TrainResult result;
  result.num_clusters = k;
  PrototypeState st;
  Matrix extra_centers;  // centers of the clusters not matched to a labeled category
  std::size_t labeled_cursor = 0;
  auto labeled_order = shuffled(lab.size(), derive_seed(cfg.seed, kLabeledShuffle, 0));
  const std::size_t labeled_batch = std::min(cfg.batch_size, lab.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochReport rep;
    rep.epoch = epoch + 1;
    if (epoch % cfg.refresh_every == 0) {
      const Matrix z_u = maybe_normalized(encode(head, x_u), norm_d);
      const Matrix z_l = maybe_normalized(encode(head, x_l), norm_d);
      st = refresh_prototypes(z_u, z_l, labels_l, k, cfg, alpha, derive_seed(cfg.seed, kCluster, epoch),
                              extra_centers.empty() ? nullptr : &extra_centers);
      std::vector<std::size_t> rest(k - m);
      std::iota(rest.begin(), rest.end(), m);
      extra_centers = st.unlabeled.vectors.select_rows(rest);
      rep.pseudo_label_acc = pseudo_label_accuracy(st.assignment, truth_u);
      std::tie(rep.proto_dist_before, rep.proto_dist_after) = feature_space_prototype_distances(z_u, truth_u, st);
    } else {
      rep.pseudo_label_acc = result.epochs.back().pseudo_label_acc;
      rep.proto_dist_before = result.epochs.back().proto_dist_before;
      rep.proto_dist_after = result.epochs.back().proto_dist_after;
    }
    rep.match_cost = st.match.total_cost;

    LossBreakdown sums;
    std::size_t batches = 0;
    const auto order = shuffled(unl.size(), derive_seed(cfg.seed, kShuffle, epoch));
    for (std::size_t start = 0; start + 2 <= order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) break;
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> assigned;
      for (auto r : rows) assigned.push_back(st.assignment[r]);
      const Matrix xb = x_u.select_rows(rows);
      const std::uint64_t step_id = epoch * 1000003 + start;

      auto grads = HeadGradients::zeros_like(head);
      auto view_a = forward(head, xb, Mode::kTrain, derive_seed(cfg.seed, kViewA, step_id));
      auto view_b = forward(head, xb, Mode::kTrain, derive_seed(cfg.seed, kViewB, step_id));
      const Matrix& z = view_a.features;
      Matrix dz(z.rows(), z.cols());
      Matrix dz_b(z.rows(), z.cols());
      LossBreakdown c;

      // Distance terms, optionally on normalized features.
      {
        Normalized zn;
        const Matrix* zd = &z;
        if (norm_d) {
          zn = normalize_rows(z);
          zd = &zn.rows;
        }
        const auto p2i = loss_p2i(*zd, assigned, st.labeled, st.match);
        const auto i2p = loss_i2p(*zd, assigned, st.calibrated);
        c.l_p2i = p2i.value;
        c.l_i2p = i2p.value;
        if (p2i.empty()) ++rep.p2i_empty_batches;
        Matrix dd(z.rows(), z.cols());
        if (terms.p2i) axpy(1.0, p2i.grad.values(), dd.values());
        if (terms.i2p) axpy(1.0, i2p.grad.values(), dd.values());
        if (norm_d) dd = normalize_rows_backward(zn, dd);
        axpy(1.0, dd.values(), dz.values());
      }

      {
        const auto na = normalize_rows(z);
        const auto nb = normalize_rows(view_b.features);
        const auto i2i = loss_i2i(na.rows, nb.rows, cfg.tau);
        c.l_i2i = i2i.value;
        if (terms.i2i) {
          axpy(1.0, normalize_rows_backward(na, i2i.grad_a).values(), dz.values());
          axpy(1.0, normalize_rows_backward(nb, i2i.grad_b).values(), dz_b.values());
        }
      }

      {
        const auto lu = loss_ce(classify(head, z), assigned);
        c.l_u = lu.value;
        if (terms.u) axpy(1.0, classify_backward(head, z, lu.grad, grads).values(), dz.values());
      }

      {
        std::vector<std::size_t> lrows;
        std::vector<int> ltargets;
        for (std::size_t i = 0; i < labeled_batch; ++i) {
          if (labeled_cursor == labeled_order.size()) {
            labeled_cursor = 0;
            labeled_order = shuffled(lab.size(), derive_seed(cfg.seed, kLabeledShuffle, step_id + 1));
          }
          const auto r = labeled_order[labeled_cursor++];
          lrows.push_back(r);
          ltargets.push_back(targets_l[r]);
        }
        const Matrix xl = x_l.select_rows(lrows);
        if (terms.ce) {
          c.l_ce = labeled_ce_step(head, xl, ltargets, Mode::kTrain, derive_seed(cfg.seed, kLabeledView, step_id),
                                   cfg.beta, grads);
        } else {
          c.l_ce = mean_ce(head, xl, ltargets, nullptr);
        }
      }

      backward(head, view_a.tape, dz, grads);
      if (terms.i2i) backward(head, view_b.tape, dz_b, grads);
      opt.step(head, grads);

      c = total_loss(c, cfg.beta, terms);
      sums.l_p2i += c.l_p2i;
      sums.l_i2p += c.l_i2p;
      sums.l_i2i += c.l_i2i;
      sums.l_u += c.l_u;
      sums.l_ce += c.l_ce;
      ++batches;
    }
    if (batches > 0) {
      const double inv = 1.0 / static_cast<double>(batches);
      sums.l_p2i *= inv;
      sums.l_i2p *= inv;
      sums.l_i2i *= inv;
      sums.l_u *= inv;
      sums.l_ce *= inv;
    }
    sums.tau = cfg.tau;
    rep.losses = total_loss(sums, cfg.beta, terms);
    result.epochs.push_back(rep);
  }

  result.final = evaluate_head(head, ds, k, cfg);
  result.head = std::move(head);
  return result;
}

CalibrationDiagnostics calibration_diagnostics(const Matrix& unlabeled_features, const Matrix& labeled_features,
                                               std::span<const int> labeled_labels, std::size_t num_clusters,
                                               const TrainConfig& cfg, const PrototypeSet* truth) {
  CalibrationDiagnostics d;
  d.clustering = kmeans(unlabeled_features, num_clusters, derive_seed(cfg.seed, kCluster), cfg.kmeans);
  d.labeled = labeled_prototypes(labeled_features, labeled_labels);
  d.unlabeled = unlabeled_prototypes(unlabeled_features, d.clustering);
  d.match = match_prototypes(d.labeled, d.unlabeled);
  auto cal = calibrate(d.unlabeled, d.labeled, std::min(cfg.k_top, d.labeled.size()), cfg.alpha);
  d.calibrated = std::move(cal.calibrated);
  d.transfer = std::move(cal.transfer);
  if (truth) d.distances = prototype_distance_report(d.unlabeled, d.calibrated, *truth, d.match);
  return d;
}

MetricsReport run_ablation(Variant variant, const EncoderHead& pretrained, const Dataset& ds, const TrainConfig& cfg) {
  return train(pretrained, ds, cfg, variant).final;
}

MetricsReport run_ablation(Variant variant, const Dataset& ds, const TrainConfig& cfg) {
  return run_ablation(variant, pretrain(make_head(ds, cfg), ds, cfg), ds, cfg);
}

}  // namespace tanet
