#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tanet/linalg.hpp"

namespace tanet {

// y = x * weight + bias, weight stored in x out.
struct Dense {
  Matrix weight;
  Vector bias;

  std::size_t in() const noexcept { return weight.rows(); }
  std::size_t out() const noexcept { return weight.cols(); }

  friend bool operator==(const Dense&, const Dense&) = default;
};

struct EncoderShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden = {64};
  std::size_t feature_dim = 32;
  std::size_t num_classes = 1;
  double dropout_rate = 0.1;
};

/// Trainable feature mapper: an MLP with tanh between layers and a linear
/// output, followed by a linear classifier over the features.
struct EncoderHead {
  std::vector<Dense> layers;
  Dense classifier;
  double dropout_rate = 0.0;
  // Optional Gaussian noise added to the input in Train mode.
  double input_noise = 0.0;
  // Bumped by every optimizer step; tapes from older generations are stale.
  std::uint64_t generation = 0;

  std::size_t input_dim() const { return layers.front().in(); }
  std::size_t feature_dim() const { return layers.back().out(); }
  std::size_t num_classes() const { return classifier.out(); }

  /// Glorot-uniform weights, zero biases.
  static EncoderHead create(const EncoderShape& shape, std::uint64_t seed);

  void validate() const;

  // Compares parameters and configuration; the generation counter is
  // bookkeeping and does not take part.
  friend bool operator==(const EncoderHead& a, const EncoderHead& b) {
    return a.layers == b.layers && a.classifier == b.classifier && a.dropout_rate == b.dropout_rate &&
           a.input_noise == b.input_noise;
  }
};

/// Same layout as the head's parameters.
struct HeadGradients {
  std::vector<Dense> layers;
  Dense classifier;

  static HeadGradients zeros_like(const EncoderHead& head);
  void scale(double factor);
  void add(const HeadGradients& other);
  bool finite() const;
};

// Flat views over every parameter block, in a fixed order shared by the
// head and its gradients.
std::vector<std::span<double>> parameter_blocks(EncoderHead& head);
std::vector<std::span<const double>> parameter_blocks(const HeadGradients& grads);
std::vector<std::span<double>> parameter_blocks(HeadGradients& grads);

enum class Mode { kTrain, kEval };

struct ForwardTape {
  std::uint64_t generation = 0;
  // Per layer: the input actually multiplied by the weight (after dropout),
  // the dropout scale mask applied to produce it (empty in Eval mode) and
  // the layer output after its activation.
  std::vector<Matrix> inputs;
  std::vector<Matrix> masks;
  std::vector<Matrix> outputs;
};

struct ForwardPass {
  Matrix features;
  ForwardTape tape;
};

/// Batch forward, one row per instance. Train mode draws inverted-dropout
/// masks (and input noise) from noise_seed; Eval mode is deterministic.
ForwardPass forward(const EncoderHead& head, const Matrix& x, Mode mode, std::uint64_t noise_seed = 0);
Vector forward(const EncoderHead& head, std::span<const double> x, Mode mode, std::uint64_t noise_seed = 0);

/// Features in Eval mode without keeping a tape.
Matrix encode(const EncoderHead& head, const Matrix& x);

/// Accumulates parameter gradients for dL/dfeatures into grads and returns
/// dL/dx. Throws if the tape was recorded on another generation of the head.
Matrix backward(const EncoderHead& head, const ForwardTape& tape, const Matrix& dfeatures, HeadGradients& grads);

Matrix classify(const EncoderHead& head, const Matrix& features);
/// Accumulates classifier gradients and returns dL/dfeatures.
Matrix classify_backward(const EncoderHead& head, const Matrix& features, const Matrix& dlogits,
                         HeadGradients& grads);

/// Grows or shrinks the classifier to num_classes outputs. Existing outputs
/// keep their weights; new ones are freshly initialized.
void resize_classifier(EncoderHead& head, std::size_t num_classes, std::uint64_t seed);

// JSON checkpoint: shapes plus every parameter, exact round trip.
void save_checkpoint(const EncoderHead& head, const std::filesystem::path& path);
EncoderHead load_checkpoint(const std::filesystem::path& path);

}  // namespace tanet
