#include "gesturelab/metrics.hpp"

#include "gesturelab/error.hpp"
#include "gesturelab/text_io.hpp"

#include <nlohmann/json.hpp>

namespace gesturelab::metrics {

BoolMatrix binarize(const nn::Matrix& outputs, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCategory::config, "threshold must lie in (0, 1)");
  return outputs.array() >= threshold;
}

ConfusionCounts confusion(const BoolMatrix& predicted, const BoolMatrix& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    fail(ErrorCategory::shape, "prediction and truth shapes differ");
  }
  ConfusionCounts out;
  out.examples = static_cast<std::size_t>(truth.rows());
  out.classes.resize(static_cast<std::size_t>(truth.cols()));
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    auto& k = out.classes[static_cast<std::size_t>(c)];
    k.tp = static_cast<std::size_t>((predicted.col(c) && truth.col(c)).count());
    k.fp = static_cast<std::size_t>((predicted.col(c) && !truth.col(c)).count());
    k.fn = static_cast<std::size_t>((!predicted.col(c) && truth.col(c)).count());
    k.tn = out.examples - k.tp - k.fp - k.fn;
  }
  return out;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

std::vector<ClassMetrics> prf1(const ConfusionCounts& counts) {
  std::vector<ClassMetrics> out;
  out.reserve(counts.classes.size());
  for (const auto& k : counts.classes) {
    ClassMetrics m;
    m.precision = ratio(k.tp, k.tp + k.fp);
    m.recall = ratio(k.tp, k.tp + k.fn);
    m.f1 = harmonic(m.precision, m.recall);
    m.support = k.support();
    out.push_back(m);
  }
  return out;
}

double macro_f1(std::span<const ClassMetrics> per_class, bool include_zero_support) {
  if (per_class.empty()) fail(ErrorCategory::validation, "macro F1 needs at least one class");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : per_class) {
    if (m.support == 0 && !include_zero_support) continue;
    sum += m.f1;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double micro_f1(const ConfusionCounts& counts) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& k : counts.classes) {
    tp += k.tp;
    fp += k.fp;
    fn += k.fn;
  }
  return harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn));
}

MetricsReport make_report(const nn::Matrix& outputs, const BoolMatrix& truth, std::vector<std::string> class_names,
                          double threshold, std::string split, std::string experiment, bool include_zero_support) {
  if (class_names.size() != static_cast<std::size_t>(truth.cols())) {
    fail(ErrorCategory::shape, "class name count does not match label columns");
  }
  MetricsReport r;
  r.experiment = std::move(experiment);
  r.split = std::move(split);
  r.threshold = threshold;
  r.include_zero_support = include_zero_support;
  r.class_names = std::move(class_names);
  r.counts = confusion(binarize(outputs, threshold), truth);
  r.per_class = prf1(r.counts);
  r.macro_f1 = metrics::macro_f1(r.per_class, include_zero_support);
  r.micro_f1 = metrics::micro_f1(r.counts);
  return r;
}

std::string report_csv(const MetricsReport& report) {
  std::string out = "class,support,tp,fp,fn,tn,precision,recall,f1\n";
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    const auto& k = report.counts.classes[c];
    const auto& m = report.per_class[c];
    out += report.class_names[c] + "," + std::to_string(m.support) + "," + std::to_string(k.tp) + "," +
           std::to_string(k.fp) + "," + std::to_string(k.fn) + "," + std::to_string(k.tn) + "," +
           text::format_double(m.precision) + "," + text::format_double(m.recall) + "," +
           text::format_double(m.f1) + "\n";
  }
  out += "macro_f1,,,,,,,," + text::format_double(report.macro_f1) + "\n";
  out += "micro_f1,,,,,,,," + text::format_double(report.micro_f1) + "\n";
  return out;
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["experiment"] = report.experiment;
  doc["split"] = report.split;
  doc["threshold"] = report.threshold;
  doc["include_zero_support"] = report.include_zero_support;
  doc["examples"] = report.counts.examples;
  doc["macro_f1"] = report.macro_f1;
  doc["micro_f1"] = report.micro_f1;
  auto& rows = doc["classes"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    const auto& k = report.counts.classes[c];
    const auto& m = report.per_class[c];
    rows.push_back({{"class", report.class_names[c]},
                    {"support", m.support},
                    {"tp", k.tp},
                    {"fp", k.fp},
                    {"fn", k.fn},
                    {"tn", k.tn},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1}});
  }
  return doc.dump(2) + "\n";
}

std::string appendix_table_csv(const MetricsReport& train, const MetricsReport& test) {
  if (train.class_names != test.class_names) fail(ErrorCategory::validation, "reports cover different classes");
  std::string out = "class,precision_train,precision_test,recall_train,recall_test,f1_train,f1_test\n";
  for (std::size_t c = 0; c < train.class_names.size(); ++c) {
    const auto& a = train.per_class[c];
    const auto& b = test.per_class[c];
    out += train.class_names[c] + "," + text::format_double(a.precision) + "," + text::format_double(b.precision) +
           "," + text::format_double(a.recall) + "," + text::format_double(b.recall) + "," +
           text::format_double(a.f1) + "," + text::format_double(b.f1) + "\n";
  }
  out += "average_f1,,,,," + text::format_double(train.macro_f1) + "," + text::format_double(test.macro_f1) + "\n";
  return out;
}

}  // namespace gesturelab::metrics
