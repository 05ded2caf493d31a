#pragma once

#include <cstddef>
#include <span>

#include "tanet/linalg.hpp"
#include "tanet/prototypes.hpp"

namespace tanet {

// A loss value together with its gradient w.r.t. the input rows.
struct LossGrad {
  double value = 0.0;
  Matrix grad;
};

struct P2ILoss : LossGrad {
  std::size_t count = 0;  // N: rows that fell into matched clusters
  bool empty() const noexcept { return count == 0; }
};

struct PairLossGrad {
  double value = 0.0;
  Matrix grad_a;
  Matrix grad_b;
};

/// Mean Euclidean distance between each row in a matched cluster and the
/// labeled prototype matched to that cluster. Rows in unmatched clusters do
/// not contribute; with none matched the loss is 0 and count is 0.
P2ILoss loss_p2i(const Matrix& features, std::span<const int> assignment, const PrototypeSet& labeled,
                 const MatchMap& match);

/// Mean Euclidean distance between every row and the calibrated prototype
/// of its cluster. Prototypes are constants. Zero-distance rows get a zero
/// subgradient.
LossGrad loss_i2p(const Matrix& features, std::span<const int> assignment, const PrototypeSet& calibrated);

/// Symmetric InfoNCE over the 2B views {a_i} u {b_i}: each view's positive is
/// its partner, the denominator runs over the other 2B-1 views. Averaged over
/// all 2B anchors. Inputs are expected to be L2-normalized rows.
PairLossGrad loss_i2i(const Matrix& a, const Matrix& b, double tau);

/// Mean softmax cross-entropy; the gradient is w.r.t. the logits.
LossGrad loss_ce(const Matrix& logits, std::span<const int> targets);

struct Normalized {
  Matrix rows;
  Vector norms;
};

/// Row norms are floored at 1e-12, so an all-zero row stays zero.
Normalized normalize_rows(const Matrix& x);
/// Back-propagates through y = x / |x| given dL/dy.
Matrix normalize_rows_backward(const Normalized& y, const Matrix& dy);

// Which terms enter the total objective.
struct LossTerms {
  bool p2i = true;
  bool i2p = true;
  bool i2i = true;
  bool u = true;
  bool ce = true;
};

struct LossBreakdown {
  double l_p2i = 0.0;
  double l_i2p = 0.0;
  double l_i2i = 0.0;
  double l_u = 0.0;
  double l_ce = 0.0;
  double total = 0.0;
  double beta = 100.0;
  double tau = 0.07;
  LossTerms terms;
};

/// total = l_p2i + l_i2p + l_i2i + l_u + beta * l_ce over the enabled terms.
LossBreakdown total_loss(const LossBreakdown& components, double beta, const LossTerms& terms = {});

}  // namespace tanet
