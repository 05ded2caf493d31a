#pragma once

#include <cstddef>

#include "tanet/encoder.hpp"

namespace tanet {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: theta -= lr * wd * theta
};

/// Adaptive-moment optimizer with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  void step(EncoderHead& head, const HeadGradients& grads);

  std::size_t steps() const noexcept { return t_; }
  const AdamWConfig& config() const noexcept { return config_; }

 private:
  AdamWConfig config_;
  HeadGradients m_;
  HeadGradients v_;
  std::size_t t_ = 0;
};

void sgd_step(EncoderHead& head, const HeadGradients& grads, double lr, double weight_decay = 0.0);

}  // namespace tanet
