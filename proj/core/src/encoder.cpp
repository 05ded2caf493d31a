#include "tanet/encoder.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "tanet/error.hpp"

namespace tanet {
namespace {

Dense glorot(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  Dense d{Matrix(in, out), Vector(out, 0.0)};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : d.weight.values()) w = dist(rng);
  return d;
}

Dense zeros_like(const Dense& d) { return {Matrix(d.in(), d.out()), Vector(d.out(), 0.0)}; }

Matrix affine(const Dense& layer, const Matrix& x) {
  Matrix y = matmul(x, layer.weight);
  for (std::size_t r = 0; r < y.rows(); ++r) axpy(1.0, layer.bias, y.row(r));
  return y;
}

// Accumulates dW += x^T dy, db += colsum(dy) and returns dy W^T.
Matrix affine_backward(const Dense& layer, const Matrix& x, const Matrix& dy, Dense& grad) {
  const Matrix dw = matmul_tn(x, dy);
  axpy(1.0, dw.values(), grad.weight.values());
  for (std::size_t r = 0; r < dy.rows(); ++r) axpy(1.0, dy.row(r), grad.bias);
  return matmul_nt(dy, layer.weight);
}

template <typename Blocks, typename Owner>
Blocks blocks_of(Owner& owner) {
  Blocks out;
  for (auto& l : owner.layers) {
    out.emplace_back(l.weight.values());
    out.emplace_back(l.bias);
  }
  out.emplace_back(owner.classifier.weight.values());
  out.emplace_back(owner.classifier.bias);
  return out;
}

nlohmann::json dense_to_json(const Dense& d) {
  const auto w = d.weight.values();
  return {{"in", d.in()},
          {"out", d.out()},
          {"weight", std::vector<double>(w.begin(), w.end())},
          {"bias", d.bias}};
}

Dense dense_from_json(const nlohmann::json& j) {
  const auto in = j.at("in").get<std::size_t>();
  const auto out = j.at("out").get<std::size_t>();
  const auto w = j.at("weight").get<std::vector<double>>();
  Dense d{Matrix(in, out), j.at("bias").get<Vector>()};
  if (w.size() != in * out || d.bias.size() != out) fail(ErrorKind::kFormat, "checkpoint: layer shape mismatch");
  std::copy(w.begin(), w.end(), d.weight.values().begin());
  return d;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

EncoderHead EncoderHead::create(const EncoderShape& shape, std::uint64_t seed) {
  require(shape.input_dim > 0 && shape.feature_dim > 0 && shape.num_classes > 0,
          "EncoderHead::create: dimensions must be positive");
  require(shape.dropout_rate >= 0.0 && shape.dropout_rate < 1.0, "EncoderHead::create: dropout must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  EncoderHead head;
  head.dropout_rate = shape.dropout_rate;
  std::size_t in = shape.input_dim;
  for (std::size_t h : shape.hidden) {
    head.layers.push_back(glorot(in, h, rng));
    in = h;
  }
  head.layers.push_back(glorot(in, shape.feature_dim, rng));
  head.classifier = glorot(shape.feature_dim, shape.num_classes, rng);
  return head;
}

void EncoderHead::validate() const {
  require(!layers.empty(), "EncoderHead: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(layers[l].bias.size() == layers[l].out(), "EncoderHead: bias shape mismatch");
    if (l > 0) require(layers[l].in() == layers[l - 1].out(), "EncoderHead: layer shapes do not chain");
    require(all_finite(layers[l].weight.values()) && all_finite(layers[l].bias), "EncoderHead: non-finite parameters");
  }
  require(classifier.in() == feature_dim(), "EncoderHead: classifier input differs from feature dimension");
  require(classifier.bias.size() == classifier.out(), "EncoderHead: classifier bias shape mismatch");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "EncoderHead: dropout must lie in [0, 1)");
}

HeadGradients HeadGradients::zeros_like(const EncoderHead& head) {
  HeadGradients g;
  for (const auto& l : head.layers) g.layers.push_back(tanet::zeros_like(l));
  g.classifier = tanet::zeros_like(head.classifier);
  return g;
}

void HeadGradients::scale(double factor) {
  for (auto block : parameter_blocks(*this))
    for (double& v : block) v *= factor;
}

void HeadGradients::add(const HeadGradients& other) {
  auto mine = parameter_blocks(*this);
  const auto theirs = parameter_blocks(other);
  require(mine.size() == theirs.size(), "HeadGradients::add: layout mismatch");
  for (std::size_t b = 0; b < mine.size(); ++b) axpy(1.0, theirs[b], mine[b]);
}

bool HeadGradients::finite() const {
  for (auto block : parameter_blocks(*this))
    if (!all_finite(block)) return false;
  return true;
}

std::vector<std::span<double>> parameter_blocks(EncoderHead& head) {
  return blocks_of<std::vector<std::span<double>>>(head);
}
std::vector<std::span<double>> parameter_blocks(HeadGradients& grads) {
  return blocks_of<std::vector<std::span<double>>>(grads);
}
std::vector<std::span<const double>> parameter_blocks(const HeadGradients& grads) {
  return blocks_of<std::vector<std::span<const double>>>(grads);
}

ForwardPass forward(const EncoderHead& head, const Matrix& x, Mode mode, std::uint64_t noise_seed) {
  require(!head.layers.empty(), "forward: head has no layers");
  require(x.cols() == head.input_dim(), "forward: input has " + std::to_string(x.cols()) +
                                            " columns, head expects " + std::to_string(head.input_dim()));
  const bool train = mode == Mode::kTrain;
  std::mt19937_64 rng(noise_seed);
  std::bernoulli_distribution keep(1.0 - head.dropout_rate);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / (1.0 - head.dropout_rate);

  ForwardPass pass;
  pass.tape.generation = head.generation;
  Matrix current = x;
  if (train && head.input_noise > 0.0)
    for (double& v : current.values()) v += head.input_noise * gauss(rng);

  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    Matrix mask;
    if (train && head.dropout_rate > 0.0) {
      mask = Matrix(current.rows(), current.cols());
      auto m = mask.values();
      auto c = current.values();
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = keep(rng) ? scale : 0.0;
        c[i] *= m[i];
      }
    }
    Matrix out = affine(head.layers[l], current);
    if (l + 1 < head.layers.size())
      for (double& v : out.values()) v = std::tanh(v);
    pass.tape.inputs.push_back(std::move(current));
    pass.tape.masks.push_back(std::move(mask));
    current = out;
    pass.tape.outputs.push_back(std::move(out));
  }
  pass.features = std::move(current);
  return pass;
}

Vector forward(const EncoderHead& head, std::span<const double> x, Mode mode, std::uint64_t noise_seed) {
  Matrix m(1, x.size());
  m.set_row(0, x);
  return forward(head, m, mode, noise_seed).features.row_vector(0);
}

Matrix encode(const EncoderHead& head, const Matrix& x) { return forward(head, x, Mode::kEval).features; }

Matrix backward(const EncoderHead& head, const ForwardTape& tape, const Matrix& dfeatures, HeadGradients& grads) {
  if (tape.generation != head.generation || tape.inputs.size() != head.layers.size())
    fail(ErrorKind::kInvalidArgument, "backward: stale tape (recorded on a different head state)");
  require(dfeatures.rows() == tape.outputs.back().rows() && dfeatures.cols() == head.feature_dim(),
          "backward: gradient shape mismatch");

  Matrix grad = dfeatures;
  for (std::size_t l = head.layers.size(); l-- > 0;) {
    if (l + 1 < head.layers.size()) {
      // tanh'(h) = 1 - tanh(h)^2
      const auto out = tape.outputs[l].values();
      auto g = grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - out[i] * out[i];
    }
    grad = affine_backward(head.layers[l], tape.inputs[l], grad, grads.layers[l]);
    if (!tape.masks[l].empty()) {
      const auto m = tape.masks[l].values();
      auto g = grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m[i];
    }
  }
  return grad;
}

Matrix classify(const EncoderHead& head, const Matrix& features) {
  require(features.cols() == head.classifier.in(), "classify: feature dimension mismatch");
  return affine(head.classifier, features);
}

Matrix classify_backward(const EncoderHead& head, const Matrix& features, const Matrix& dlogits,
                         HeadGradients& grads) {
  return affine_backward(head.classifier, features, dlogits, grads.classifier);
}

void resize_classifier(EncoderHead& head, std::size_t num_classes, std::uint64_t seed) {
  require(num_classes > 0, "resize_classifier: need at least one class");
  std::mt19937_64 rng(seed);
  Dense fresh = glorot(head.feature_dim(), num_classes, rng);
  const std::size_t keep = std::min(num_classes, head.num_classes());
  for (std::size_t r = 0; r < fresh.in(); ++r)
    for (std::size_t c = 0; c < keep; ++c) fresh.weight(r, c) = head.classifier.weight(r, c);
  for (std::size_t c = 0; c < keep; ++c) fresh.bias[c] = head.classifier.bias[c];
  head.classifier = std::move(fresh);
  ++head.generation;
}

void save_checkpoint(const EncoderHead& head, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "tanet-encoder-head";
  j["version"] = kCheckpointVersion;
  j["dropout_rate"] = head.dropout_rate;
  j["input_noise"] = head.input_noise;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : head.layers) j["layers"].push_back(dense_to_json(l));
  j["classifier"] = dense_to_json(head.classifier);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

EncoderHead load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != "tanet-encoder-head")
      fail(ErrorKind::kFormat, "checkpoint: unexpected format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      fail(ErrorKind::kFormat, "checkpoint: unsupported version");
    EncoderHead head;
    head.dropout_rate = j.at("dropout_rate").get<double>();
    head.input_noise = j.at("input_noise").get<double>();
    for (const auto& l : j.at("layers")) head.layers.push_back(dense_from_json(l));
    head.classifier = dense_from_json(j.at("classifier"));
    head.validate();
    return head;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, "checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace tanet
