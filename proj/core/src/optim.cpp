#include "tanet/optim.hpp"

#include <cmath>

#include "tanet/error.hpp"

namespace tanet {
namespace {

void check_grads(const EncoderHead& head, const HeadGradients& grads) {
  require(grads.layers.size() == head.layers.size(), "optimizer: gradient layout differs from head");
  if (!grads.finite()) fail(ErrorKind::kNumeric, "optimizer: non-finite gradient");
}

}  // namespace

void AdamW::step(EncoderHead& head, const HeadGradients& grads) {
  check_grads(head, grads);
  if (t_ == 0) {
    m_ = HeadGradients::zeros_like(head);
    v_ = HeadGradients::zeros_like(head);
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

  auto params = parameter_blocks(head);
  const auto g = parameter_blocks(grads);
  auto m = parameter_blocks(m_);
  auto v = parameter_blocks(v_);
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      m[b][i] = config_.beta1 * m[b][i] + (1.0 - config_.beta1) * g[b][i];
      v[b][i] = config_.beta2 * v[b][i] + (1.0 - config_.beta2) * g[b][i] * g[b][i];
      const double mhat = m[b][i] / bc1;
      const double vhat = v[b][i] / bc2;
      params[b][i] -= config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * params[b][i]);
    }
  }
  ++head.generation;
}

void sgd_step(EncoderHead& head, const HeadGradients& grads, double lr, double weight_decay) {
  check_grads(head, grads);
  auto params = parameter_blocks(head);
  const auto g = parameter_blocks(grads);
  for (std::size_t b = 0; b < params.size(); ++b)
    for (std::size_t i = 0; i < params[b].size(); ++i) params[b][i] -= lr * (g[b][i] + weight_decay * params[b][i]);
  ++head.generation;
}

}  // namespace tanet
