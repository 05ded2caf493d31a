#include "tanet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "tanet/error.hpp"

namespace tanet {
namespace {

constexpr double kNormFloor = 1e-12;

// Row index of each cluster id's prototype.
std::unordered_map<int, std::size_t> row_index(const PrototypeSet& set) {
  std::unordered_map<int, std::size_t> out;
  for (std::size_t r = 0; r < set.size(); ++r) out.emplace(set.ids[r], r);
  return out;
}

// Adds scale * (z - target) / |z - target| to grad; returns |z - target|.
double distance_with_grad(std::span<const double> z, std::span<const double> target, double scale,
                          std::span<double> grad) {
  const double d = distance(z, target);
  if (d > 0.0)
    for (std::size_t k = 0; k < z.size(); ++k) grad[k] += scale * (z[k] - target[k]) / d;
  return d;
}

}  // namespace

P2ILoss loss_p2i(const Matrix& features, std::span<const int> assignment, const PrototypeSet& labeled,
                 const MatchMap& match) {
  require(features.rows() == assignment.size(), "loss_p2i: one cluster id per row required");
  const auto labeled_row = row_index(labeled);
  std::unordered_map<int, std::size_t> target_of;  // cluster id -> labeled row
  for (const auto& [label, cluster] : match.pairs) {
    const auto it = labeled_row.find(label);
    require(it != labeled_row.end(), "loss_p2i: match refers to unknown labeled category");
    target_of.emplace(cluster, it->second);
  }

  P2ILoss out;
  out.grad = Matrix(features.rows(), features.cols());
  for (int c : assignment)
    if (target_of.contains(c)) ++out.count;
  if (out.count == 0) return out;

  const double scale = 1.0 / static_cast<double>(out.count);
  for (std::size_t j = 0; j < features.rows(); ++j) {
    const auto it = target_of.find(assignment[j]);
    if (it == target_of.end()) continue;
    out.value += distance_with_grad(features.row(j), labeled.vectors.row(it->second), scale, out.grad.row(j));
  }
  out.value *= scale;
  return out;
}

LossGrad loss_i2p(const Matrix& features, std::span<const int> assignment, const PrototypeSet& calibrated) {
  require(features.rows() == assignment.size(), "loss_i2p: one cluster id per row required");
  LossGrad out;
  out.grad = Matrix(features.rows(), features.cols());
  if (features.rows() == 0) return out;
  const auto proto_row = row_index(calibrated);
  const double scale = 1.0 / static_cast<double>(features.rows());
  for (std::size_t j = 0; j < features.rows(); ++j) {
    const auto it = proto_row.find(assignment[j]);
    require(it != proto_row.end(), "loss_i2p: cluster without a calibrated prototype");
    out.value += distance_with_grad(features.row(j), calibrated.vectors.row(it->second), scale, out.grad.row(j));
  }
  out.value *= scale;
  return out;
}

PairLossGrad loss_i2i(const Matrix& a, const Matrix& b, double tau) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "loss_i2i: view batches must have equal shape");
  require(a.rows() >= 2, "loss_i2i: batch size must be at least 2");
  require(tau > 0.0, "loss_i2i: tau must be positive");

  const std::size_t batch = a.rows();
  const std::size_t n = 2 * batch;
  auto view = [&](std::size_t i) { return i < batch ? a.row(i) : b.row(i - batch); };
  auto partner = [&](std::size_t i) { return i < batch ? i + batch : i - batch; };

  // Row-wise softmax over the off-diagonal similarities.
  Matrix prob(n, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      prob(i, j) = dot(view(i), view(j)) / tau;
      peak = std::max(peak, prob(i, j));
    }
    const double positive = prob(i, partner(i));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      prob(i, j) = std::exp(prob(i, j) - peak);
      z += prob(i, j);
    }
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) prob(i, j) /= z;
    total += peak + std::log(z) - positive;
  }

  PairLossGrad out;
  out.value = total / static_cast<double>(n);
  out.grad_a = Matrix(batch, a.cols());
  out.grad_b = Matrix(batch, a.cols());
  const double scale = 1.0 / (static_cast<double>(n) * tau);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = i < batch ? out.grad_a.row(i) : out.grad_b.row(i - batch);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double target = j == partner(i) ? 1.0 : 0.0;
      const double coeff = (prob(i, j) - target) + (prob(j, i) - target);
      axpy(scale * coeff, view(j), g);
    }
  }
  return out;
}

LossGrad loss_ce(const Matrix& logits, std::span<const int> targets) {
  require(logits.rows() > 0, "loss_ce: empty batch");
  require(logits.rows() == targets.size(), "loss_ce: one target per row required");
  LossGrad out;
  out.grad = Matrix(logits.rows(), logits.cols());
  const double scale = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int t = targets[i];
    require(t >= 0 && static_cast<std::size_t>(t) < logits.cols(), "loss_ce: target out of range");
    const auto row = logits.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - peak);
    const double lse = peak + std::log(z);
    out.value += lse - row[static_cast<std::size_t>(t)];
    auto g = out.grad.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) g[c] = scale * std::exp(row[c] - lse);
    g[static_cast<std::size_t>(t)] -= scale;
  }
  out.value *= scale;
  return out;
}

Normalized normalize_rows(const Matrix& x) {
  Normalized out{x, Vector(x.rows())};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double n = std::max(norm(x.row(r)), kNormFloor);
    out.norms[r] = n;
    for (double& v : out.rows.row(r)) v /= n;
  }
  return out;
}

Matrix normalize_rows_backward(const Normalized& y, const Matrix& dy) {
  Matrix dx(dy.rows(), dy.cols());
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const auto yr = y.rows.row(r);
    const double proj = y.norms[r] > kNormFloor ? dot(yr, dy.row(r)) : 0.0;
    auto out = dx.row(r);
    for (std::size_t k = 0; k < dy.cols(); ++k) out[k] = (dy(r, k) - proj * yr[k]) / y.norms[r];
  }
  return dx;
}

LossBreakdown total_loss(const LossBreakdown& c, double beta, const LossTerms& terms) {
  LossBreakdown out = c;
  out.beta = beta;
  out.terms = terms;
  out.total = 0.0;
  if (terms.p2i) out.total += c.l_p2i;
  if (terms.i2p) out.total += c.l_i2p;
  if (terms.i2i) out.total += c.l_i2i;
  if (terms.u) out.total += c.l_u;
  if (terms.ce) out.total += beta * c.l_ce;
  return out;
}

}  // namespace tanet
