#include "gesturelab/nn.hpp"

#include "gesturelab/error.hpp"
#include "gesturelab/rng.hpp"

#include <atomic>
#include <cmath>

namespace gesturelab::nn {
namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::sigmoid: return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return z;
}

}  // namespace

std::string_view to_string(Activation activation) noexcept {
  switch (activation) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  fail(ErrorCategory::config, "unknown activation '" + std::string(name) + "'");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)), generation_(next_generation()) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0) {
      fail(ErrorCategory::shape, "layer " + std::to_string(i) + " has an empty weight matrix");
    }
    if (l.bias.size() != l.weight.rows()) {
      fail(ErrorCategory::shape, "layer " + std::to_string(i) + " bias length does not match its outputs");
    }
    if (!(l.dropout_rate >= 0.0 && l.dropout_rate < 1.0)) {
      fail(ErrorCategory::config, "layer " + std::to_string(i) + " dropout rate must be in [0,1)");
    }
    if (i > 0 && layers_[i - 1].outputs() != l.inputs()) {
      fail(ErrorCategory::shape, "layer " + std::to_string(i - 1) + " outputs " +
                                     std::to_string(layers_[i - 1].outputs()) + " but layer " + std::to_string(i) +
                                     " expects " + std::to_string(l.inputs()));
    }
  }
}

DenseLayer& DenseNet::mutable_layer(std::size_t i) {
  generation_ = next_generation();
  return layers_.at(i);
}

std::size_t DenseNet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ForwardResult forward(const DenseNet& net, const Matrix& inputs, Mode mode, std::uint64_t seed) {
  if (net.layer_count() == 0) fail(ErrorCategory::shape, "forward through an empty network");
  if (static_cast<std::size_t>(inputs.cols()) != net.input_dim()) {
    fail(ErrorCategory::shape, "input width " + std::to_string(inputs.cols()) + " does not match layer 0 input " +
                                   std::to_string(net.input_dim()));
  }
  ForwardResult result;
  auto& cache = result.cache;
  cache.generation = net.generation();
  const std::size_t L = net.layer_count();
  cache.inputs.reserve(L);
  cache.activations.reserve(L);
  cache.masks.reserve(L);
  Matrix x = inputs;
  for (std::size_t i = 0; i < L; ++i) {
    const auto& layer = net.layer(i);
    Matrix z = x * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    Matrix a = activate(z, layer.activation);
    cache.inputs.push_back(std::move(x));
    Matrix mask;
    if (mode == Mode::train && layer.dropout_rate > 0.0) {
      Rng rng(derive_seed({seed, i, 0xD809}));
      const double keep = 1.0 - layer.dropout_rate;
      mask.resize(a.rows(), a.cols());
      // Column-major fill order is part of the determinism contract.
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
      x = a.cwiseProduct(mask);
    } else {
      x = a;
    }
    cache.activations.push_back(std::move(a));
    cache.masks.push_back(std::move(mask));
  }
  result.outputs = std::move(x);
  return result;
}

Matrix predict(const DenseNet& net, const Matrix& inputs) {
  return forward(net, inputs, Mode::eval).outputs;
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

void Gradients::add(const Gradients& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
}

Gradients backward(const DenseNet& net, const ForwardCache& cache, const Matrix& output_gradient) {
  const std::size_t L = net.layer_count();
  if (cache.generation != net.generation() || cache.inputs.size() != L) {
    fail(ErrorCategory::validation, "stale forward cache: parameters changed since the forward pass");
  }
  const auto& last = cache.activations.back();
  if (output_gradient.rows() != last.rows() || output_gradient.cols() != last.cols()) {
    fail(ErrorCategory::shape, "output gradient shape does not match network output");
  }
  Gradients g;
  g.weight.resize(L);
  g.bias.resize(L);
  Matrix upstream = output_gradient;
  for (std::size_t k = L; k-- > 0;) {
    const auto& layer = net.layer(k);
    const auto& a = cache.activations[k];
    if (cache.masks[k].size() > 0) upstream = upstream.cwiseProduct(cache.masks[k]);
    Matrix dz;
    switch (layer.activation) {
      case Activation::identity: dz = upstream; break;
      case Activation::relu: dz = upstream.cwiseProduct((a.array() > 0.0).cast<double>().matrix()); break;
      case Activation::sigmoid: dz = upstream.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix())); break;
    }
    g.weight[k] = dz.transpose() * cache.inputs[k];
    g.bias[k] = dz.colwise().sum().transpose();
    upstream = dz * layer.weight;
  }
  g.input = std::move(upstream);
  return g;
}

MseResult mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) fail(ErrorCategory::shape, "mse: prediction and target sizes differ");
  if (pred.empty()) fail(ErrorCategory::validation, "mse: empty set");
  MseResult r;
  r.gradient.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.value += d * d;
    r.gradient[i] = 2.0 * d / n;
  }
  r.value /= n;
  return r;
}

AdamState AdamState::for_net(const DenseNet& net, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const auto& l : net.layers()) {
    s.m_weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    s.v_weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    s.m_bias.push_back(Vector::Zero(l.bias.size()));
    s.v_bias.push_back(Vector::Zero(l.bias.size()));
  }
  return s;
}

namespace {

template <typename Param>
void adam_update(Param& p, const Param& g, Param& m, Param& v, const AdamConfig& c, double bc1, double bc2) {
  p *= (1.0 - c.learning_rate * c.weight_decay);
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  p.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
  const std::size_t L = net.layer_count();
  if (grads.weight.size() != L || grads.bias.size() != L || state.m_weight.size() != L) {
    fail(ErrorCategory::shape, "adam: gradient/state layer count does not match network");
  }
  for (std::size_t i = 0; i < L; ++i) {
    const auto& l = net.layer(i);
    if (grads.weight[i].rows() != l.weight.rows() || grads.weight[i].cols() != l.weight.cols() ||
        grads.bias[i].size() != l.bias.size()) {
      fail(ErrorCategory::shape, "adam: gradient shape mismatch at layer " + std::to_string(i));
    }
    if (!grads.weight[i].allFinite() || !grads.bias[i].allFinite()) {
      fail(ErrorCategory::numeric, "adam: non-finite gradient at layer " + std::to_string(i) + " (max |g_w| = " +
                                       std::to_string(grads.weight[i].cwiseAbs().maxCoeff()) + ")");
    }
  }
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < L; ++i) {
    auto& l = net.mutable_layer(i);
    adam_update(l.weight, grads.weight[i], state.m_weight[i], state.v_weight[i], c, bc1, bc2);
    adam_update(l.bias, grads.bias[i], state.m_bias[i], state.v_bias[i], c, bc1, bc2);
  }
}

std::string_view to_string(ArchitectureKind kind) noexcept {
  switch (kind) {
    case ArchitectureKind::audio_encoder: return "audio_encoder";
    case ArchitectureKind::classifier: return "classifier";
    case ArchitectureKind::fusion_classifier: return "fusion_classifier";
  }
  return "?";
}

ArchitectureKind architecture_from_string(std::string_view name) {
  if (name == "audio_encoder") return ArchitectureKind::audio_encoder;
  if (name == "classifier") return ArchitectureKind::classifier;
  if (name == "fusion_classifier") return ArchitectureKind::fusion_classifier;
  fail(ErrorCategory::config, "unknown architecture '" + std::string(name) + "'");
}

ArchitectureDims default_dims(ArchitectureKind kind, std::size_t class_count) {
  switch (kind) {
    case ArchitectureKind::audio_encoder:
      return {3024, {1024, 512, 512}, kAudioRepresentationDim, kDefaultDropout};
    case ArchitectureKind::classifier:
      return {kVideoFeatureDim, {256, 128, 64}, class_count, kDefaultDropout};
    case ArchitectureKind::fusion_classifier:
      return {kVideoFeatureDim + kAudioRepresentationDim, {256, 128, 64}, class_count, kDefaultDropout};
  }
  return {};
}

DenseNet build_architecture(ArchitectureKind kind, const ArchitectureDims& dims, std::uint64_t seed) {
  if (dims.input == 0 || dims.output == 0) fail(ErrorCategory::config, "architecture needs positive input/output widths");
  for (auto h : dims.hidden) {
    if (h == 0) fail(ErrorCategory::config, "hidden layer width must be positive");
  }
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(kind), 0x1417}));
  std::vector<DenseLayer> layers;
  std::size_t fan_in = dims.input;
  auto make = [&](std::size_t out, Activation act, double dropout) {
    DenseLayer l;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    l.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = rng.uniform(-bound, bound);
    }
    l.bias = Vector::Zero(static_cast<Eigen::Index>(out));
    l.activation = act;
    l.dropout_rate = dropout;
    layers.push_back(std::move(l));
    fan_in = out;
  };
  for (auto h : dims.hidden) make(h, Activation::relu, dims.dropout);
  const auto head = kind == ArchitectureKind::audio_encoder ? Activation::identity : Activation::sigmoid;
  make(dims.output, head, 0.0);
  return DenseNet(std::move(layers));
}

}  // namespace gesturelab::nn
