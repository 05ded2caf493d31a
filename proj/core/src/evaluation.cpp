#include "tanet/evaluation.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tanet/assignment.hpp"
#include "tanet/error.hpp"

namespace tanet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> distinct(std::span<const int> values) {
  std::set<int> s(values.begin(), values.end());
  return {s.begin(), s.end()};
}

double mapped_accuracy(std::span<const int> predicted, std::span<const int> truth, const std::map<int, int>& mapping,
                       const std::vector<std::size_t>& rows) {
  if (rows.empty()) return kNaN;
  std::size_t hits = 0;
  for (auto r : rows) {
    const auto it = mapping.find(predicted[r]);
    if (it != mapping.end() && it->second == truth[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

template <typename T>
std::vector<T> gather(std::span<const T> v, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

HungarianResult hungarian_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require(!predicted.empty(), "hungarian_accuracy: empty input");
  require(predicted.size() == truth.size(), "hungarian_accuracy: length mismatch");

  const auto clusters = distinct(predicted);
  const auto categories = distinct(truth);
  std::map<int, std::size_t> crow, ccol;
  for (std::size_t i = 0; i < clusters.size(); ++i) crow[clusters[i]] = i;
  for (std::size_t j = 0; j < categories.size(); ++j) ccol[categories[j]] = j;

  Matrix counts(clusters.size(), categories.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) counts(crow[predicted[i]], ccol[truth[i]]) += 1.0;
  Matrix cost = counts;
  for (double& v : cost.values()) v = -v;

  const Assignment a = solve_assignment(cost);
  HungarianResult out;
  for (std::size_t r = 0; r < clusters.size(); ++r) {
    if (a.row_to_col[r] < 0) continue;
    const auto c = static_cast<std::size_t>(a.row_to_col[r]);
    out.mapping[clusters[r]] = categories[c];
    out.matched += static_cast<std::size_t>(counts(r, c));
  }
  out.accuracy = static_cast<double>(out.matched) / static_cast<double>(predicted.size());
  return out;
}

double h_score(double known_acc, double novel_acc) {
  if (!(known_acc > 0.0) || !(novel_acc > 0.0)) return 0.0;
  return 2.0 * known_acc * novel_acc / (known_acc + novel_acc);
}

MetricsReport split_metrics(std::span<const int> predicted, std::span<const int> truth, const std::set<int>& known,
                            MappingMode mode) {
  const auto global = hungarian_accuracy(predicted, truth);
  std::vector<std::size_t> known_rows, novel_rows;
  for (std::size_t i = 0; i < truth.size(); ++i) (known.contains(truth[i]) ? known_rows : novel_rows).push_back(i);

  MetricsReport out;
  out.overall_acc = global.accuracy;
  out.mapping = global.mapping;
  out.known_count = known_rows.size();
  out.novel_count = novel_rows.size();
  out.known_empty = known_rows.empty();
  out.novel_empty = novel_rows.empty();
  out.pseudo_label_acc = kNaN;
  out.proto_dist_before = kNaN;
  out.proto_dist_after = kNaN;

  if (mode == MappingMode::kGlobal) {
    out.known_acc = mapped_accuracy(predicted, truth, global.mapping, known_rows);
    out.novel_acc = mapped_accuracy(predicted, truth, global.mapping, novel_rows);
  } else {
    auto subset = [&](const std::vector<std::size_t>& rows) {
      if (rows.empty()) return kNaN;
      const auto p = gather(predicted, rows);
      const auto t = gather(truth, rows);
      return hungarian_accuracy(p, t).accuracy;
    };
    out.known_acc = subset(known_rows);
    out.novel_acc = subset(novel_rows);
  }
  out.h_score = (out.known_empty || out.novel_empty) ? 0.0 : h_score(out.known_acc, out.novel_acc);
  return out;
}

double pseudo_label_accuracy(std::span<const int> assignment, std::span<const int> truth) {
  require(!assignment.empty(), "pseudo_label_accuracy: empty unlabeled split");
  return hungarian_accuracy(assignment, truth).accuracy;
}

PrototypeDistances prototype_distance_report(const PrototypeSet& unlabeled, const PrototypeSet& calibrated,
                                             const PrototypeSet& truth, const MatchMap& match) {
  require(truth.size() > 0, "prototype_distance_report: ground-truth prototypes are required");
  require(unlabeled.size() == calibrated.size() && unlabeled.ids == calibrated.ids,
          "prototype_distance_report: unlabeled and calibrated sets must align");
  require(unlabeled.dim() == truth.dim(), "prototype_distance_report: dimension mismatch");

  const Assignment a = solve_assignment(pairwise_distances(unlabeled.vectors, truth.vectors));
  PrototypeDistances out;
  out.truth_row = a.row_to_col;
  out.per_cluster_before.assign(unlabeled.size(), kNaN);
  out.per_cluster_after.assign(unlabeled.size(), kNaN);
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    if (a.row_to_col[i] < 0) continue;
    const auto gt = truth.vectors.row(static_cast<std::size_t>(a.row_to_col[i]));
    const double before = distance(unlabeled.vectors.row(i), gt);
    const double after = distance(calibrated.vectors.row(i), gt);
    out.per_cluster_before[i] = before;
    out.per_cluster_after[i] = after;
    out.before += before;
    out.after += after;
    ++out.clusters;
    if (match.labeled_of(unlabeled.ids[i])) {
      out.before_known += before;
      out.after_known += after;
      ++out.known_clusters;
    }
  }
  const auto mean = [](double sum, std::size_t n) { return n == 0 ? kNaN : sum / static_cast<double>(n); };
  out.before = mean(out.before, out.clusters);
  out.after = mean(out.after, out.clusters);
  out.before_known = mean(out.before_known, out.known_clusters);
  out.after_known = mean(out.after_known, out.known_clusters);
  return out;
}

}  // namespace tanet
