#include "gesturelab/dbb.hpp"

#include "gesturelab/error.hpp"
#include "gesturelab/text_io.hpp"

#include <cmath>
#include <sstream>

namespace gesturelab::dbb {

Mask positive_mask(const Matrix& targets, double threshold) { return targets.array() > threshold; }

BatchClassStats BatchClassStats::from_mask(const Mask& mask) {
  BatchClassStats s;
  s.batch_size = static_cast<std::size_t>(mask.rows());
  for (Eigen::Index c = 0; c < mask.cols(); ++c) {
    const auto pos = static_cast<std::size_t>(mask.col(c).count());
    s.positives.push_back(pos);
    s.negatives.push_back(s.batch_size - pos);
  }
  return s;
}

double loss_factor(const BatchClassStats& stats, std::size_t c) {
  const std::size_t pos = stats.positives.at(c);
  const std::size_t neg = stats.negatives.at(c);
  if (pos == 0) return 0.0;
  if (pos >= neg) return 1.0;
  return static_cast<double>(stats.batch_size) / static_cast<double>(pos);
}

ClassWeights class_weights(const Matrix& targets, double threshold) {
  const Mask mask = positive_mask(targets, threshold);
  std::vector<double> counts(static_cast<std::size_t>(targets.cols()));
  double total = 0.0;
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    counts[static_cast<std::size_t>(c)] = static_cast<double>(mask.col(c).count());
    total += counts[static_cast<std::size_t>(c)];
  }
  if (total == 0.0) fail(ErrorCategory::validation, "class weights need at least one positive example");
  ClassWeights w;
  for (double n : counts) w.values.push_back(n > 0.0 ? total / n : 0.0);
  return w;
}

ClassWeights class_weights(const dataset::ClipSet& clips) {
  Matrix targets(static_cast<Eigen::Index>(clips.size()), static_cast<Eigen::Index>(clips.class_names.size()));
  for (std::size_t i = 0; i < clips.size(); ++i) {
    for (std::size_t c = 0; c < clips.class_names.size(); ++c) {
      targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = clips.clips[i].binary_labels[c];
    }
  }
  return class_weights(targets, 0.0);
}

namespace {

struct SetTerms {
  double positive = 0.0;
  double negative = 0.0;
  nn::Vector positive_grad;
  nn::Vector negative_grad;
};

// MSE over the positive and the negative subsets of column c, with gradients.
SetTerms set_terms(const Matrix& predictions, const Matrix& targets, const Mask& mask, std::size_t c) {
  const auto col = static_cast<Eigen::Index>(c);
  const Eigen::Index B = predictions.rows();
  SetTerms t;
  t.positive_grad = nn::Vector::Zero(B);
  t.negative_grad = nn::Vector::Zero(B);
  const auto n_pos = static_cast<double>(mask.col(col).count());
  const double n_neg = static_cast<double>(B) - n_pos;
  for (Eigen::Index b = 0; b < B; ++b) {
    const double d = predictions(b, col) - targets(b, col);
    if (mask(b, col)) {
      t.positive += d * d / n_pos;
      t.positive_grad(b) = 2.0 * d / n_pos;
    } else {
      t.negative += d * d / n_neg;
      t.negative_grad(b) = 2.0 * d / n_neg;
    }
  }
  return t;
}

void check_shapes(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    fail(ErrorCategory::shape, "prediction and target shapes differ");
  }
  if (predictions.rows() == 0) fail(ErrorCategory::validation, "empty batch");
}

}  // namespace

ConditionalLoss conditional_loss(const Matrix& predictions, const Matrix& targets, const Mask& mask,
                                 std::size_t c, std::optional<double> positive_weight) {
  check_shapes(predictions, targets);
  ConditionalLoss out;
  out.gradient = nn::Vector::Zero(predictions.rows());
  if (mask.col(static_cast<Eigen::Index>(c)).count() == 0) return out;
  const auto t = set_terms(predictions, targets, mask, c);
  const double w = positive_weight.value_or(1.0);
  out.value = w * t.positive + t.negative;
  out.gradient = w * t.positive_grad + t.negative_grad;
  return out;
}

BatchLoss batch_loss(const Matrix& predictions, const Matrix& targets, const BatchLossOptions& options) {
  check_shapes(predictions, targets);
  const Eigen::Index B = predictions.rows();
  const Eigen::Index C = predictions.cols();
  BatchLoss out;
  out.gradient = Matrix::Zero(B, C);
  out.terms.resize(static_cast<std::size_t>(C));
  const Mask mask = positive_mask(targets, options.positive_threshold);
  const auto stats = BatchClassStats::from_mask(mask);

  if (options.weights && options.weights->values.size() != static_cast<std::size_t>(C)) {
    fail(ErrorCategory::shape, "class weight count does not match class count");
  }

  for (Eigen::Index col = 0; col < C; ++col) {
    const auto c = static_cast<std::size_t>(col);
    auto& term = out.terms[c];
    term.positives = stats.positives[c];
    term.negatives = stats.negatives[c];

    if (options.mode == BalanceMode::none) {
      const nn::Vector diff = predictions.col(col) - targets.col(col);
      term.factor = 1.0;
      term.loss = diff.squaredNorm() / static_cast<double>(B);
      out.value += term.loss;
      out.gradient.col(col) = 2.0 * diff / static_cast<double>(B);
      continue;
    }

    term.factor = loss_factor(stats, c);
    if (term.factor == 0.0) continue;
    // A class that never occurs in the training set has weight 0 and drops out
    // of the weighted positive term.
    const double w = options.weights ? options.weights->values[c] : 1.0;
    const auto t = set_terms(predictions, targets, mask, c);
    term.loss = w * t.positive + t.negative;
    if (options.scale_positive_only) {
      out.value += term.factor * w * t.positive + t.negative;
      out.gradient.col(col) = term.factor * w * t.positive_grad + t.negative_grad;
    } else {
      out.value += term.factor * term.loss;
      out.gradient.col(col) = term.factor * (w * t.positive_grad + t.negative_grad);
    }
  }

  if (!std::isfinite(out.value) || !out.gradient.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite batch loss; per class (pos, neg, F, loss):";
    for (std::size_t c = 0; c < out.terms.size(); ++c) {
      const auto& t = out.terms[c];
      msg << "\n  " << c << ": " << t.positives << ", " << t.negatives << ", " << t.factor << ", " << t.loss;
    }
    fail(ErrorCategory::numeric, msg.str());
  }
  return out;
}

std::string diagnostics_csv(const BatchLoss& loss, const std::vector<std::string>& class_names,
                            std::size_t batch_index) {
  std::string out;
  for (std::size_t c = 0; c < loss.terms.size(); ++c) {
    const auto& t = loss.terms[c];
    out += std::to_string(batch_index) + "," + (c < class_names.size() ? class_names[c] : std::to_string(c)) + "," +
           std::to_string(t.positives) + "," + std::to_string(t.negatives) + "," + text::format_double(t.factor) +
           "," + text::format_double(t.loss) + "\n";
  }
  return out;
}

}  // namespace gesturelab::dbb
