#pragma once

// Independent reference implementations used by unit and acceptance tests.
// Deliberately naive: exhaustive search, double loops, finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "tanet/encoder.hpp"
#include "tanet/linalg.hpp"
#include "tanet/losses.hpp"
#include "tanet/prototypes.hpp"

namespace oracle {

using tanet::Matrix;
using tanet::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

struct BruteAssignment {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<int> row_to_col;
};

// Every injection of the smaller side into the larger; costs summed in row order.
inline BruteAssignment brute_force_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows(), m = cost.cols();
  BruteAssignment best;
  std::vector<int> current(n, -1);
  std::vector<bool> used(m, false);
  const std::size_t to_assign = std::min(n, m);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t r, std::size_t assigned) {
    if (r == n) {
      if (assigned != to_assign) return;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (current[i] >= 0) total += cost(i, static_cast<std::size_t>(current[i]));
      if (total < best.cost) {
        best.cost = total;
        best.row_to_col = current;
      }
      return;
    }
    // Leaving a row out is only possible when rows outnumber columns.
    if (n - r > to_assign - assigned) {
      current[r] = -1;
      rec(r + 1, assigned);
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      used[c] = true;
      current[r] = static_cast<int>(c);
      rec(r + 1, assigned + 1);
      used[c] = false;
      current[r] = -1;
    }
  };
  rec(0, 0);
  return best;
}

// Largest number of points agreeing with some injective cluster -> category map.
inline std::size_t brute_force_matched(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::vector<int> clusters(std::set<int>(pred.begin(), pred.end()).size());
  std::set<int> cs(pred.begin(), pred.end()), gs(truth.begin(), truth.end());
  std::vector<int> cv(cs.begin(), cs.end()), gv(gs.begin(), gs.end());
  std::map<std::pair<int, int>, std::size_t> counts;
  for (std::size_t i = 0; i < pred.size(); ++i) ++counts[{pred[i], truth[i]}];
  std::size_t best = 0;
  std::vector<bool> used(gv.size(), false);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t c, std::size_t acc) {
    if (c == cv.size()) {
      best = std::max(best, acc);
      return;
    }
    rec(c + 1, acc);
    for (std::size_t g = 0; g < gv.size(); ++g) {
      if (used[g]) continue;
      used[g] = true;
      const auto it = counts.find({cv[c], gv[g]});
      rec(c + 1, acc + (it == counts.end() ? 0 : it->second));
      used[g] = false;
    }
  };
  rec(0, 0);
  return best;
}

inline std::map<int, Vector> naive_class_means(const Matrix& x, const std::vector<int>& labels) {
  std::map<int, Vector> sums;
  std::map<int, double> counts;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto& s = sums[labels[i]];
    s.resize(x.cols(), 0.0);
    for (std::size_t d = 0; d < x.cols(); ++d) s[d] += x(i, d);
    counts[labels[i]] += 1.0;
  }
  for (auto& [k, s] : sums)
    for (double& v : s) v /= counts[k];
  return sums;
}

inline double naive_distance(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.cols(); ++d) s += (a(i, d) - b(j, d)) * (a(i, d) - b(j, d));
  return std::sqrt(s);
}

// Symmetric InfoNCE over 2B views, written out pair by pair.
inline double naive_info_nce(const Matrix& a, const Matrix& b, double tau) {
  const std::size_t bsz = a.rows();
  Matrix v(2 * bsz, a.cols());
  for (std::size_t i = 0; i < bsz; ++i) {
    v.set_row(i, a.row(i));
    v.set_row(bsz + i, b.row(i));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < 2 * bsz; ++i) {
    const std::size_t pos = i < bsz ? i + bsz : i - bsz;
    double denom = 0.0;
    for (std::size_t j = 0; j < 2 * bsz; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < v.cols(); ++d) s += v(i, d) * v(j, d);
      denom += std::exp(s / tau);
    }
    double sp = 0.0;
    for (std::size_t d = 0; d < v.cols(); ++d) sp += v(i, d) * v(pos, d);
    total += -std::log(std::exp(sp / tau) / denom);
  }
  return total / static_cast<double>(2 * bsz);
}

inline double naive_cross_entropy(const Matrix& logits, const std::vector<int>& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) z += std::exp(logits(i, c));
    total += std::log(z) - logits(i, static_cast<std::size_t>(targets[i]));
  }
  return total / static_cast<double>(logits.rows());
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

inline std::vector<double> flatten(const tanet::HeadGradients& g) {
  std::vector<double> out;
  for (auto block : tanet::parameter_blocks(g)) out.insert(out.end(), block.begin(), block.end());
  return out;
}

// Central differences of `loss` over every parameter of `head`.
inline std::vector<double> finite_difference(tanet::EncoderHead head,
                                             const std::function<double(const tanet::EncoderHead&)>& loss,
                                             double eps = 1e-4) {
  std::vector<double> out;
  const auto blocks = tanet::parameter_blocks(head);
  for (auto block : blocks) {
    for (double& p : block) {
      const double saved = p;
      p = saved + eps;
      const double up = loss(head);
      p = saved - eps;
      const double down = loss(head);
      p = saved;
      out.push_back((up - down) / (2.0 * eps));
    }
  }
  return out;
}

enum class GradLoss { kP2I, kI2P, kI2I, kCE };

// One randomized case: a small head, a batch, and a loss composed through the
// encoder. Returns the relative error between the analytic gradient and
// central finite differences over all parameters.
inline double gradient_case(GradLoss which, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t dim = 3 + seed % 4, hidden = 4 + seed % 3, feat = 3 + seed % 3, batch = 4 + seed % 4;
  const std::size_t classes = 3;
  tanet::EncoderShape shape{dim, {hidden}, feat, classes, 0.2};
  auto head = tanet::EncoderHead::create(shape, seed * 7 + 1);
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (auto block : tanet::parameter_blocks(head))
    for (double& p : block) p += jitter(rng);
  const Matrix x = random_matrix(rng, batch, dim);
  const Matrix x2 = random_matrix(rng, batch, dim);
  const std::uint64_t s1 = seed * 31 + 5, s2 = seed * 31 + 6;

  std::vector<int> assignment(batch);
  for (std::size_t i = 0; i < batch; ++i) assignment[i] = static_cast<int>(rng() % 3);
  tanet::PrototypeSet protos;
  protos.vectors = random_matrix(rng, 3, feat);
  protos.ids = {0, 1, 2};
  tanet::PrototypeSet labeled;
  labeled.kind = tanet::PrototypeKind::kLabeled;
  labeled.vectors = random_matrix(rng, 2, feat);
  labeled.ids = {0, 1};
  tanet::MatchMap match;
  match.pairs = {{0, 2}, {1, 0}};
  std::vector<int> targets(batch);
  for (std::size_t i = 0; i < batch; ++i) targets[i] = static_cast<int>(rng() % classes);
  const double tau = 0.07 + 0.2 * static_cast<double>(seed % 3);

  auto value = [&](const tanet::EncoderHead& h) -> double {
    switch (which) {
      case GradLoss::kP2I:
        return tanet::loss_p2i(tanet::forward(h, x, tanet::Mode::kTrain, s1).features, assignment, labeled, match)
            .value;
      case GradLoss::kI2P:
        return tanet::loss_i2p(tanet::forward(h, x, tanet::Mode::kTrain, s1).features, assignment, protos).value;
      case GradLoss::kI2I: {
        const auto a = tanet::normalize_rows(tanet::forward(h, x, tanet::Mode::kTrain, s1).features);
        const auto b = tanet::normalize_rows(tanet::forward(h, x2, tanet::Mode::kTrain, s2).features);
        return tanet::loss_i2i(a.rows, b.rows, tau).value;
      }
      case GradLoss::kCE: {
        const auto z = tanet::forward(h, x, tanet::Mode::kTrain, s1).features;
        return tanet::loss_ce(tanet::classify(h, z), targets).value;
      }
    }
    return 0.0;
  };

  auto grads = tanet::HeadGradients::zeros_like(head);
  switch (which) {
    case GradLoss::kP2I: {
      const auto fp = tanet::forward(head, x, tanet::Mode::kTrain, s1);
      const auto l = tanet::loss_p2i(fp.features, assignment, labeled, match);
      tanet::backward(head, fp.tape, l.grad, grads);
      break;
    }
    case GradLoss::kI2P: {
      const auto fp = tanet::forward(head, x, tanet::Mode::kTrain, s1);
      const auto l = tanet::loss_i2p(fp.features, assignment, protos);
      tanet::backward(head, fp.tape, l.grad, grads);
      break;
    }
    case GradLoss::kI2I: {
      const auto fa = tanet::forward(head, x, tanet::Mode::kTrain, s1);
      const auto fb = tanet::forward(head, x2, tanet::Mode::kTrain, s2);
      const auto na = tanet::normalize_rows(fa.features), nb = tanet::normalize_rows(fb.features);
      const auto l = tanet::loss_i2i(na.rows, nb.rows, tau);
      tanet::backward(head, fa.tape, tanet::normalize_rows_backward(na, l.grad_a), grads);
      tanet::backward(head, fb.tape, tanet::normalize_rows_backward(nb, l.grad_b), grads);
      break;
    }
    case GradLoss::kCE: {
      const auto fp = tanet::forward(head, x, tanet::Mode::kTrain, s1);
      const auto l = tanet::loss_ce(tanet::classify(head, fp.features), targets);
      const auto dz = tanet::classify_backward(head, fp.features, l.grad, grads);
      tanet::backward(head, fp.tape, dz, grads);
      break;
    }
  }
  return relative_error(flatten(grads), finite_difference(head, value));
}

}  // namespace oracle
