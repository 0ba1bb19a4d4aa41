#pragma once

#include "gesturelab/dataset.hpp"
#include "gesturelab/nn.hpp"

#include <optional>
#include <string>
#include <vector>

// Dynamic Batch Balance: per-batch, per-class loss factors that up-weight
// classes whose positives are outnumbered within the batch.
namespace gesturelab::dbb {

using Matrix = nn::Matrix;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// An example is positive for a class iff its target exceeds `threshold`.
/// With threshold 0 a temporally smoothed target counts as soon as any frame is positive.
Mask positive_mask(const Matrix& targets, double threshold = 0.0);

struct BatchClassStats {
  std::size_t batch_size = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;

  static BatchClassStats from_mask(const Mask& mask);
};

/// 0 without positives, 1 when positives are at least as many as negatives,
/// batch_size / positives otherwise.
double loss_factor(const BatchClassStats& stats, std::size_t c);

struct ClassWeights {
  std::vector<double> values;  // 0 marks a class with no positives (excluded)
};

/// W[c] = (sum of positives over all classes) / positives of c.
ClassWeights class_weights(const Matrix& targets, double threshold = 0.0);
ClassWeights class_weights(const dataset::ClipSet& clips);

struct ConditionalLoss {
  double value = 0.0;
  nn::Vector gradient;  // d value / d predictions(:, c)
};

/// MSE over the positives (times `positive_weight` when given) plus MSE over the
/// negatives; 0 with no gradient when the class has no positives in the batch.
ConditionalLoss conditional_loss(const Matrix& predictions, const Matrix& targets, const Mask& mask,
                                 std::size_t c, std::optional<double> positive_weight = std::nullopt);

enum class BalanceMode {
  none,  // sum over classes of the per-class MSE over the whole batch
  dbb,
};

struct BatchLossOptions {
  BalanceMode mode = BalanceMode::dbb;
  double positive_threshold = 0.0;
  std::optional<ClassWeights> weights;  // enables the class-weighted positive term
  bool scale_positive_only = false;     // ablation: F multiplies only the positive term
};

struct ClassTerm {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double factor = 0.0;
  double loss = 0.0;  // conditional loss before the factor
};

struct BatchLoss {
  double value = 0.0;
  Matrix gradient;  // batch x classes
  std::vector<ClassTerm> terms;
};

BatchLoss batch_loss(const Matrix& predictions, const Matrix& targets, const BatchLossOptions& options = {});

/// One CSV line per class: batch,class,pos,neg,factor,loss
std::string diagnostics_csv(const BatchLoss& loss, const std::vector<std::string>& class_names,
                            std::size_t batch_index);

}  // namespace gesturelab::dbb
