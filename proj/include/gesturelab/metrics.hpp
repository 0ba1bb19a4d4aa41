#pragma once

#include "gesturelab/nn.hpp"

#include <span>
#include <string>
#include <vector>

namespace gesturelab::metrics {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kDefaultThreshold = 0.5;

/// output >= threshold (inclusive). Threshold must lie in (0, 1).
BoolMatrix binarize(const nn::Matrix& outputs, double threshold = kDefaultThreshold);

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t support() const noexcept { return tp + fn; }
};

struct ConfusionCounts {
  std::size_t examples = 0;
  std::vector<ClassCounts> classes;
};

ConfusionCounts confusion(const BoolMatrix& predicted, const BoolMatrix& truth);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// 0/0 ratios are reported as 0.
std::vector<ClassMetrics> prf1(const ConfusionCounts& counts);

/// Unweighted mean of per-class F1. Classes without positive support are left
/// out unless `include_zero_support`, in which case they count as 0.
double macro_f1(std::span<const ClassMetrics> per_class, bool include_zero_support = false);

/// F1 of the pooled counts over all classes.
double micro_f1(const ConfusionCounts& counts);

struct MetricsReport {
  std::string experiment;
  std::string split;
  double threshold = kDefaultThreshold;
  bool include_zero_support = false;
  std::vector<std::string> class_names;
  ConfusionCounts counts;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

MetricsReport make_report(const nn::Matrix& outputs, const BoolMatrix& truth, std::vector<std::string> class_names,
                          double threshold, std::string split, std::string experiment,
                          bool include_zero_support = false);

/// class,support,tp,fp,fn,tn,precision,recall,f1 plus a trailing macro row.
std::string report_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);

/// class,precision_train,precision_test,recall_train,recall_test,f1_train,f1_test
std::string appendix_table_csv(const MetricsReport& train, const MetricsReport& test);

}  // namespace gesturelab::metrics
