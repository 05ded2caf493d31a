#include "tanet/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tanet/assignment.hpp"
#include "tanet/error.hpp"

namespace tanet {

std::string_view to_string(PrototypeKind kind) {
  switch (kind) {
    case PrototypeKind::kLabeled: return "labeled";
    case PrototypeKind::kUnlabeled: return "unlabeled";
    case PrototypeKind::kCalibrated: return "calibrated";
    case PrototypeKind::kGroundTruth: return "ground-truth";
  }
  return "unlabeled";
}

std::optional<std::size_t> PrototypeSet::index_of(int id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

std::optional<int> MatchMap::cluster_of(int labeled_id) const {
  for (const auto& [l, c] : pairs)
    if (l == labeled_id) return c;
  return std::nullopt;
}

std::optional<int> MatchMap::labeled_of(int cluster_id) const {
  for (const auto& [l, c] : pairs)
    if (c == cluster_id) return l;
  return std::nullopt;
}

PrototypeSet labeled_prototypes(const Matrix& features, std::span<const int> labels) {
  require(features.rows() == labels.size(), "labeled_prototypes: one label per feature row required");
  std::map<int, std::size_t> slot;
  for (int y : labels) slot.emplace(y, 0);
  std::size_t next = 0;
  for (auto& [label, s] : slot) s = next++;

  PrototypeSet out;
  out.kind = PrototypeKind::kLabeled;
  out.vectors = Matrix(slot.size(), features.cols());
  std::vector<std::size_t> counts(slot.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto s = slot.at(labels[i]);
    axpy(1.0, features.row(i), out.vectors.row(s));
    ++counts[s];
  }
  for (const auto& [label, s] : slot) {
    for (double& v : out.vectors.row(s)) v /= static_cast<double>(counts[s]);
    out.ids.push_back(label);
  }
  return out;
}

PrototypeSet labeled_prototypes(const Dataset& ds, const Matrix& features) {
  require(features.rows() == ds.size(), "labeled_prototypes: one feature row per instance required");
  const auto rows = ds.indices(Split::kLabeled);
  require(!rows.empty(), "labeled_prototypes: dataset has no labeled instances");
  return labeled_prototypes(features.select_rows(rows), ds.labels(rows));
}

PrototypeSet unlabeled_prototypes(const Clustering& clustering) {
  PrototypeSet out;
  out.kind = PrototypeKind::kUnlabeled;
  out.vectors = clustering.centers;
  out.ids.resize(clustering.k());
  std::iota(out.ids.begin(), out.ids.end(), 0);
  return out;
}

PrototypeSet unlabeled_prototypes(const Matrix& features, const Clustering& clustering) {
  require(features.rows() == clustering.assignment.size(),
          "unlabeled_prototypes: one feature row per assigned point required");
  PrototypeSet out = unlabeled_prototypes(clustering);
  Matrix sums(clustering.k(), features.cols());
  std::vector<std::size_t> counts(clustering.k(), 0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto c = static_cast<std::size_t>(clustering.assignment[i]);
    axpy(1.0, features.row(i), sums.row(c));
    ++counts[c];
  }
  for (std::size_t c = 0; c < clustering.k(); ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < features.cols(); ++j)
      out.vectors(c, j) = sums(c, j) / static_cast<double>(counts[c]);
  }
  return out;
}

MatchMap match_prototypes(const PrototypeSet& labeled, const PrototypeSet& unlabeled) {
  require(labeled.size() <= unlabeled.size(),
          "match_prototypes: " + std::to_string(labeled.size()) + " labeled prototypes cannot be matched onto " +
              std::to_string(unlabeled.size()) + " clusters");
  require(labeled.dim() == unlabeled.dim() || labeled.size() == 0, "match_prototypes: dimension mismatch");

  const Matrix cost = pairwise_distances(labeled.vectors, unlabeled.vectors);
  const Assignment a = solve_assignment(cost);
  MatchMap mm;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto c = static_cast<std::size_t>(a.row_to_col[i]);
    mm.pairs.emplace_back(labeled.ids[i], unlabeled.ids[c]);
    mm.total_cost += cost(i, c);
  }
  return mm;
}

Calibration calibrate(const PrototypeSet& unlabeled, const PrototypeSet& labeled, std::size_t k, double alpha) {
  const std::size_t m = labeled.size();
  require(k >= 1 && k <= m, "calibrate: k must lie in [1, M] (k=" + std::to_string(k) +
                                ", M=" + std::to_string(m) + ")");
  require(alpha >= 0.0 && alpha <= 1.0, "calibrate: alpha must lie in [0, 1]");
  require(labeled.dim() == unlabeled.dim(), "calibrate: dimension mismatch");

  const std::size_t dim = unlabeled.dim();
  const double temperature = std::sqrt(static_cast<double>(dim));

  Calibration out;
  out.calibrated.kind = PrototypeKind::kCalibrated;
  out.calibrated.ids = unlabeled.ids;
  out.calibrated.vectors = Matrix(unlabeled.size(), dim);
  out.transfer.k = k;
  out.transfer.alpha = alpha;

  std::vector<double> similarity(m);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    const auto u = unlabeled.vectors.row(i);
    for (std::size_t j = 0; j < m; ++j) similarity[j] = -distance(u, labeled.vectors.row(j));

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (similarity[a] != similarity[b]) return similarity[a] > similarity[b];
      return labeled.ids[a] < labeled.ids[b];
    });
    std::vector<std::size_t> top(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));

    // Softmax with the max subtracted; top[0] carries the max similarity.
    Vector w(k);
    const double peak = similarity[top[0]] / temperature;
    double z = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      w[t] = std::exp(similarity[top[t]] / temperature - peak);
      z += w[t];
    }
    for (double& x : w) x /= z;

    auto c = out.calibrated.vectors.row(i);
    axpy(alpha, u, c);
    for (std::size_t t = 0; t < k; ++t) axpy((1.0 - alpha) * w[t], labeled.vectors.row(top[t]), c);

    out.transfer.sets.push_back(std::move(top));
    out.transfer.weights.push_back(std::move(w));
  }
  return out;
}

}  // namespace tanet
