#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gesturelab::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint32_t { identity = 0, relu = 1, sigmoid = 2 };

std::string_view to_string(Activation activation) noexcept;
Activation activation_from_string(std::string_view name);

enum class Mode { train, eval };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;
  double dropout_rate = 0.0;  // applied after the activation, training only

  std::size_t inputs() const noexcept { return static_cast<std::size_t>(weight.cols()); }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

/// Fully connected stack. Every mutable access bumps a generation stamp so
/// backward() can reject caches taken against older parameters.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& mutable_layer(std::size_t i);

  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().inputs(); }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().outputs(); }
  std::size_t parameter_count() const noexcept;
  std::uint64_t generation() const noexcept { return generation_; }

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t generation_ = 0;
};

struct ForwardCache {
  std::uint64_t generation = 0;
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> activations;  // post-activation, pre-dropout
  std::vector<Matrix> masks;        // scaled keep masks; empty matrix when no dropout
};

struct ForwardResult {
  Matrix outputs;  // batch x output_dim
  ForwardCache cache;
};

/// Rows of `inputs` are examples. Train mode draws dropout masks from `seed`;
/// eval mode never touches randomness.
ForwardResult forward(const DenseNet& net, const Matrix& inputs, Mode mode, std::uint64_t seed = 0);

/// Eval-mode forward without keeping a cache.
Matrix predict(const DenseNet& net, const Matrix& inputs);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;  // dLoss/dInputs, used to chain networks

  static Gradients zeros_like(const DenseNet& net);
  void add(const Gradients& other);
};

Gradients backward(const DenseNet& net, const ForwardCache& cache, const Matrix& output_gradient);

struct MseResult {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d pred
};

/// Mean of squared differences; gradient 2 (pred - target) / n.
MseResult mse_loss(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;  // decoupled: p -= lr * wd * p before the Adam step
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> m_weight, v_weight;
  std::vector<Vector> m_bias, v_bias;

  static AdamState for_net(const DenseNet& net, const AdamConfig& config);
};

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

enum class ArchitectureKind { audio_encoder, classifier, fusion_classifier };

std::string_view to_string(ArchitectureKind kind) noexcept;
ArchitectureKind architecture_from_string(std::string_view name);

inline constexpr std::size_t kVideoFeatureDim = 400;
inline constexpr std::size_t kAudioRepresentationDim = 400;
inline constexpr double kDefaultDropout = 0.3;

struct ArchitectureDims {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::size_t output = 0;
  double dropout = kDefaultDropout;
};

/// audio_encoder: 3024 -> 1024, 512, 512 -> 400 (identity head)
/// classifier: 400 -> 256, 128, 64 -> N sigmoid
/// fusion_classifier: 800 -> 256, 128, 64 -> N sigmoid
ArchitectureDims default_dims(ArchitectureKind kind, std::size_t class_count);

/// Hidden layers are ReLU with dropout; weights U(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases 0.
DenseNet build_architecture(ArchitectureKind kind, const ArchitectureDims& dims, std::uint64_t seed);

}  // namespace gesturelab::nn
