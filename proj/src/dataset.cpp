#include "gesturelab/dataset.hpp"

#include "gesturelab/error.hpp"
#include "gesturelab/rng.hpp"
#include "gesturelab/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

namespace gesturelab::dataset {
namespace {

// Overlaps shorter than this are float noise at frame boundaries, not overlap.
constexpr double kOverlapTolerance = 1e-9;

}  // namespace

std::vector<GestureAnnotation> parse_annotations(std::string_view text, const ColumnSpec& columns) {
  if (columns.label == columns.start || columns.label == columns.end || columns.start == columns.end) {
    fail(ErrorCategory::config, "column spec assigns one column to two roles");
  }
  const std::size_t needed = std::max({columns.label, columns.start, columns.end}) + 1;

  std::vector<GestureAnnotation> out;
  std::vector<std::string> problems;
  ErrorCategory worst = ErrorCategory::validation;
  const auto all_lines = text::lines(text);
  for (std::size_t i = 0; i < all_lines.size(); ++i) {
    const std::string_view raw = all_lines[i];
    if (text::trim(raw).empty() || text::trim(raw).front() == '#') continue;
    const std::size_t line_no = i + 1;
    const auto fields = text::split(raw, '\t');
    if (fields.size() < needed) {
      fail(ErrorCategory::config, "line " + std::to_string(line_no) + ": column spec needs " +
                                      std::to_string(needed) + " columns, line has " +
                                      std::to_string(fields.size()));
    }
    bool ok_start = false;
    bool ok_end = false;
    const double start = text::parse_double(fields[columns.start], &ok_start);
    const double end = text::parse_double(fields[columns.end], &ok_end);
    const std::string label{text::trim(fields[columns.label])};
    if (!ok_start || !ok_end) {
      problems.push_back("line " + std::to_string(line_no) + ": non-numeric time '" +
                         std::string(ok_start ? fields[columns.end] : fields[columns.start]) + "'");
      worst = ErrorCategory::parse;
      continue;
    }
    if (label.empty()) {
      problems.push_back("line " + std::to_string(line_no) + ": empty label");
      continue;
    }
    if (start < 0.0) {
      problems.push_back("line " + std::to_string(line_no) + ": negative start time");
      continue;
    }
    if (!(end > start)) {
      problems.push_back("line " + std::to_string(line_no) + ": end " + text::format_double(end) +
                         " <= start " + text::format_double(start));
      continue;
    }
    out.push_back({label, start, end});
  }
  if (!problems.empty()) {
    std::string message = "malformed annotation lines:";
    for (const auto& p : problems) message += "\n  " + p;
    fail(worst, message);
  }
  return out;
}

const std::vector<std::string>& default_gesture_classes() {
  static const std::vector<std::string> names = {
      "Facial expression",        "Nodding",
      "Right hand round",         "Expressive shoulder movement",
      "Left hand gesture",        "Lifting head",
      "Minimal movement",         "Eyes closed",
      "Vibrato",                  "Expressive preparation",
      "Freeze",                   "Expressive head movement",
      "Frowning",                 "Physical energy",
      "Upbeat in head movement",  "Repositioning guitar",
      "Sympathetic body movement",
  };
  return names;
}

Vocabulary::Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  folded_.reserve(names_.size());
  for (const auto& n : names_) {
    auto f = text::fold(n);
    if (std::find(folded_.begin(), folded_.end(), f) != folded_.end()) {
      fail(ErrorCategory::config, "duplicate class in vocabulary: " + n);
    }
    folded_.push_back(std::move(f));
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view name) const {
  const auto f = text::fold(name);
  const auto it = std::find(folded_.begin(), folded_.end(), f);
  if (it == folded_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - folded_.begin());
}

std::string Vocabulary::listing() const {
  std::string out;
  for (const auto& n : names_) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

FrameLabelMatrix::FrameLabelMatrix(std::string video, double fps, std::size_t frames,
                                   std::vector<std::string> classes)
    : video_id(std::move(video)),
      frame_rate(fps),
      frame_count(frames),
      class_names(std::move(classes)),
      values(class_names.size() * frames, 0) {}

std::optional<std::size_t> FrameLabelMatrix::class_index(std::string_view name) const {
  const auto f = text::fold(name);
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    if (text::fold(class_names[c]) == f) return c;
  }
  return std::nullopt;
}

std::size_t FrameLabelMatrix::active_frames(std::size_t c) const noexcept {
  const auto* row = values.data() + c * frame_count;
  return static_cast<std::size_t>(std::count(row, row + frame_count, std::uint8_t{1}));
}

RasterizeResult rasterize_labels(std::span<const GestureAnnotation> annotations,
                                 const Vocabulary& vocabulary, double frame_rate,
                                 std::size_t frame_count, std::string video_id) {
  if (!(frame_rate > 0.0)) fail(ErrorCategory::config, "frame rate must be positive");
  if (frame_count == 0) fail(ErrorCategory::config, "frame count must be at least 1");

  RasterizeResult result{FrameLabelMatrix(std::move(video_id), frame_rate, frame_count, vocabulary.names()), {}};
  auto& m = result.matrix;
  const double video_end = static_cast<double>(frame_count) / frame_rate;

  std::vector<std::string> unknown;
  for (const auto& a : annotations) {
    const auto c = vocabulary.find(a.label);
    if (!c) {
      if (std::find(unknown.begin(), unknown.end(), a.label) == unknown.end()) unknown.push_back(a.label);
      continue;
    }
    if (!(a.end > a.start)) {
      fail(ErrorCategory::validation, "annotation '" + a.label + "' has end <= start");
    }
    if (a.end > video_end + kOverlapTolerance) {
      result.warnings.push_back("annotation '" + a.label + "' [" + text::format_double(a.start) + ", " +
                                text::format_double(a.end) + "] clipped at video end " +
                                text::format_double(video_end) + " s");
    }
    const auto first_guess = std::floor(a.start * frame_rate) - 1.0;
    const auto last_guess = std::ceil(a.end * frame_rate);
    if (last_guess < 0.0 || first_guess >= static_cast<double>(frame_count)) continue;
    const auto first = static_cast<std::size_t>(std::max(0.0, first_guess));
    const auto last = static_cast<std::size_t>(std::min(static_cast<double>(frame_count - 1), last_guess));
    for (std::size_t t = first; t <= last; ++t) {
      const double lo = std::max(a.start, static_cast<double>(t) / frame_rate);
      const double hi = std::min(a.end, static_cast<double>(t + 1) / frame_rate);
      if (hi - lo > kOverlapTolerance) m.set(*c, t, true);
    }
  }
  if (!unknown.empty()) {
    std::string message = "unknown gesture class(es):";
    for (const auto& u : unknown) message += " '" + u + "'";
    message += "; vocabulary: " + vocabulary.listing();
    fail(ErrorCategory::validation, message);
  }
  return result;
}

FrameLabelMatrix derive_normal_play(const FrameLabelMatrix& matrix) {
  if (matrix.class_index(kNormalPlay)) {
    fail(ErrorCategory::validation, "matrix already has a '" + std::string(kNormalPlay) + "' column");
  }
  auto classes = matrix.class_names;
  classes.emplace_back(kNormalPlay);
  FrameLabelMatrix out(matrix.video_id, matrix.frame_rate, matrix.frame_count, std::move(classes));
  std::copy(matrix.values.begin(), matrix.values.end(), out.values.begin());
  const std::size_t np = matrix.class_count();
  for (std::size_t t = 0; t < matrix.frame_count; ++t) {
    bool any = false;
    for (std::size_t c = 0; c < np && !any; ++c) any = matrix.at(c, t);
    out.set(np, t, !any);
  }
  return out;
}

SuperClassMap::SuperClassMap(std::vector<std::pair<std::string, std::string>> entries,
                             std::vector<std::string> super_order)
    : entries_(std::move(entries)), super_names_(std::move(super_order)) {
  std::vector<std::string> seen;
  for (const auto& [fine, super] : entries_) {
    const auto f = text::fold(fine);
    if (std::find(seen.begin(), seen.end(), f) != seen.end()) {
      fail(ErrorCategory::config, "fine class mapped twice: " + fine);
    }
    seen.push_back(f);
    const bool known = std::any_of(super_names_.begin(), super_names_.end(),
                                   [&](const std::string& s) { return text::fold(s) == text::fold(super); });
    if (!known) super_names_.push_back(super);
  }
}

SuperClassMap SuperClassMap::defaults() {
  const std::string facial = "Facial Expression";
  const std::string head = "Head related action";
  const std::string right = "Right Hand action";
  const std::string left = "Left hand action";
  const std::string still = "Relative stillness";
  const std::string upper = "Upper body movement";
  const std::string normal{kNormalPlay};
  return SuperClassMap(
      {
          {"Facial expression", facial},
          {"Eyes closed", facial},
          {"Frowning", facial},
          {"Nodding", head},
          {"Lifting head", head},
          {"Expressive head movement", head},
          {"Upbeat in head movement", head},
          {"Right hand round", right},
          {"Repositioning guitar", right},
          {"Left hand gesture", left},
          {"Vibrato", left},
          {"Minimal movement", still},
          {"Freeze", still},
          {"Expressive shoulder movement", upper},
          {"Sympathetic body movement", upper},
          {"Expressive preparation", normal},
          {"Physical energy", normal},
          {normal, normal},
      },
      {facial, head, right, left, still, upper, normal});
}

SuperClassMap SuperClassMap::from_json(std::string_view json_text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("super-class map: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCategory::config, "super-class map must be a JSON object");
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> order;
  for (const auto& [key, value] : doc.items()) {
    if (key == "__order__") {
      if (!value.is_array()) fail(ErrorCategory::config, "__order__ must be an array of names");
      for (const auto& v : value) order.push_back(v.get<std::string>());
      continue;
    }
    if (!value.is_string()) fail(ErrorCategory::config, "super class for '" + key + "' must be a string");
    entries.emplace_back(key, value.get<std::string>());
  }
  return SuperClassMap(std::move(entries), std::move(order));
}

std::string SuperClassMap::to_json() const {
  nlohmann::ordered_json doc;
  doc["__order__"] = super_names_;
  for (const auto& [fine, super] : entries_) doc[fine] = super;
  return doc.dump(2) + "\n";
}

std::optional<std::size_t> SuperClassMap::super_index_of(std::string_view fine_class) const {
  const auto f = text::fold(fine_class);
  for (const auto& [fine, super] : entries_) {
    if (text::fold(fine) != f) continue;
    for (std::size_t s = 0; s < super_names_.size(); ++s) {
      if (text::fold(super_names_[s]) == text::fold(super)) return s;
    }
  }
  return std::nullopt;
}

std::vector<std::string> SuperClassMap::fine_classes_of(std::string_view super_class) const {
  std::vector<std::string> out;
  for (const auto& [fine, super] : entries_) {
    if (text::fold(super) == text::fold(super_class)) out.push_back(fine);
  }
  return out;
}

FrameLabelMatrix map_super_classes(const FrameLabelMatrix& matrix, const SuperClassMap& map) {
  std::vector<std::size_t> target(matrix.class_count());
  std::vector<std::string> unmapped;
  for (std::size_t c = 0; c < matrix.class_count(); ++c) {
    const auto s = map.super_index_of(matrix.class_names[c]);
    if (!s) {
      unmapped.push_back(matrix.class_names[c]);
      continue;
    }
    target[c] = *s;
  }
  if (!unmapped.empty()) {
    std::string message = "classes missing from super-class map:";
    for (const auto& u : unmapped) message += " '" + u + "'";
    fail(ErrorCategory::validation, message);
  }
  FrameLabelMatrix out(matrix.video_id, matrix.frame_rate, matrix.frame_count, map.super_class_names());
  for (std::size_t c = 0; c < matrix.class_count(); ++c) {
    for (std::size_t t = 0; t < matrix.frame_count; ++t) {
      if (matrix.at(c, t)) out.set(target[c], t, true);
    }
  }
  return out;
}

std::vector<double> temporal_smooth(std::span<const std::uint8_t> frame_labels, std::size_t class_count) {
  if (class_count == 0 || frame_labels.empty() || frame_labels.size() % class_count != 0) {
    fail(ErrorCategory::shape, "temporal_smooth: label grid is not frames x classes");
  }
  const std::size_t n = frame_labels.size() / class_count;
  const double denom = static_cast<double>(n * (n + 1) / 2);
  std::vector<double> out(class_count, 0.0);
  for (std::size_t c = 0; c < class_count; ++c) {
    std::size_t weighted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (frame_labels[i * class_count + c]) weighted += i + 1;
    }
    out[c] = static_cast<double>(weighted) / denom;
  }
  return out;
}

ClipSet assemble_clips(const FrameLabelMatrix& matrix) {
  if (matrix.frame_count < kClipFrames) {
    fail(ErrorCategory::validation, "video '" + matrix.video_id + "' has " + std::to_string(matrix.frame_count) +
                                        " frames; at least " + std::to_string(kClipFrames) + " are needed");
  }
  const std::size_t C = matrix.class_count();
  ClipSet set{matrix.class_names, {}};
  const std::size_t count = matrix.frame_count / kClipFrames;
  set.clips.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Clip clip;
    clip.video_id = matrix.video_id;
    clip.start_frame = k * kClipFrames;
    clip.class_count = C;
    clip.frame_labels.assign(kClipFrames * C, 0);
    clip.binary_labels.assign(C, 0);
    for (std::size_t i = 0; i < kClipFrames; ++i) {
      for (std::size_t c = 0; c < C; ++c) {
        const bool on = matrix.at(c, clip.start_frame + i);
        clip.frame_labels[i * C + c] = on ? 1 : 0;
        if (on) clip.binary_labels[c] = 1;
      }
    }
    clip.smoothed_labels = temporal_smooth(clip.frame_labels, C);
    set.clips.push_back(std::move(clip));
  }
  return set;
}

SplitSizes holdout_sizes(std::size_t n, const SplitRatios& ratios) {
  const double total = ratios.train + ratios.validation + ratios.test;
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCategory::config, "split ratios must be non-negative and sum to 1");
  }
  SplitSizes s;
  // The small epsilon keeps exact products such as 0.1 * 750 from flooring to 74.
  s.validation = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(n) + 1e-9));
  s.test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n) + 1e-9));
  s.train = n - s.validation - s.test;
  return s;
}

namespace {

ClipSet subset(const ClipSet& all, std::span<const std::size_t> indices) {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  ClipSet out{all.class_names, {}};
  out.clips.reserve(sorted.size());
  for (auto i : sorted) out.clips.push_back(all.clips[i]);
  return out;
}

}  // namespace

DatasetSplit split_dataset(const ClipSet& clips, const SplitRatios& ratios, std::uint64_t seed) {
  if (clips.size() < 10) fail(ErrorCategory::validation, "need at least 10 clips to split");
  const auto sizes = holdout_sizes(clips.size(), ratios);
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0x5B1177}));
  rng.shuffle(order);
  const std::span<const std::size_t> all(order);
  return {subset(clips, all.subspan(0, sizes.train)),
          subset(clips, all.subspan(sizes.train, sizes.validation)),
          subset(clips, all.subspan(sizes.train + sizes.validation))};
}

ClipSet concatenate(std::span<const ClipSet> parts) {
  ClipSet out;
  for (const auto& p : parts) {
    if (out.class_names.empty()) out.class_names = p.class_names;
    if (p.class_names != out.class_names) fail(ErrorCategory::validation, "clip sets have different class lists");
    out.clips.insert(out.clips.end(), p.clips.begin(), p.clips.end());
  }
  return out;
}

DatasetSplit leave_one_out_split(std::span<const ClipSet> videos, std::string_view held_out,
                                 double val_fraction, std::uint64_t seed) {
  if (videos.size() < 2) fail(ErrorCategory::validation, "leave-one-out needs at least 2 videos");
  if (val_fraction < 0.0 || val_fraction >= 1.0) fail(ErrorCategory::config, "validation fraction must be in [0,1)");
  std::vector<ClipSet> rest;
  const ClipSet* test = nullptr;
  std::string ids;
  for (const auto& v : videos) {
    const std::string id = v.clips.empty() ? std::string{} : v.clips.front().video_id;
    ids += (ids.empty() ? "" : ", ") + id;
    if (id == held_out) {
      test = &v;
    } else {
      rest.push_back(v);
    }
  }
  if (!test) fail(ErrorCategory::validation, "unknown video '" + std::string(held_out) + "'; have: " + ids);
  const ClipSet pool = concatenate(rest);
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(pool.size()) + 1e-9));
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0x100}));
  rng.shuffle(order);
  const std::span<const std::size_t> all(order);
  return {subset(pool, all.subspan(0, pool.size() - n_val)), subset(pool, all.subspan(pool.size() - n_val)), *test};
}

Correlation intercorrelation(const FrameLabelMatrix& matrix) {
  if (matrix.frame_count < 2) fail(ErrorCategory::validation, "correlation needs at least 2 frames");
  const std::size_t C = matrix.class_count();
  const double T = static_cast<double>(matrix.frame_count);
  Correlation out{matrix.class_names, std::vector<double>(C * C, 0.0), {}};
  std::vector<double> mean(C);
  std::vector<double> sd(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double p = static_cast<double>(matrix.active_frames(c)) / T;
    mean[c] = p;
    sd[c] = std::sqrt(p * (1.0 - p));  // population sd of a 0/1 vector
    if (sd[c] == 0.0) out.zero_variance.push_back(matrix.class_names[c]);
  }
  for (std::size_t i = 0; i < C; ++i) {
    out.values[i * C + i] = 1.0;
    for (std::size_t j = i + 1; j < C; ++j) {
      double r = 0.0;
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        std::size_t both = 0;
        const auto* a = matrix.values.data() + i * matrix.frame_count;
        const auto* b = matrix.values.data() + j * matrix.frame_count;
        for (std::size_t t = 0; t < matrix.frame_count; ++t) both += (a[t] & b[t]);
        const double cov = static_cast<double>(both) / T - mean[i] * mean[j];
        r = std::clamp(cov / (sd[i] * sd[j]), -1.0, 1.0);
      }
      out.values[i * C + j] = r;
      out.values[j * C + i] = r;
    }
  }
  return out;
}

std::string to_csv(const FrameLabelMatrix& matrix) {
  std::string out;
  for (std::size_t c = 0; c < matrix.class_count(); ++c) {
    if (c) out += ',';
    out += matrix.class_names[c];
  }
  out += '\n';
  out.reserve(out.size() + matrix.frame_count * matrix.class_count() * 2);
  for (std::size_t t = 0; t < matrix.frame_count; ++t) {
    for (std::size_t c = 0; c < matrix.class_count(); ++c) {
      if (c) out += ',';
      out += matrix.at(c, t) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

FrameLabelMatrix frame_matrix_from_csv(std::string_view csv, std::string video_id, double frame_rate) {
  auto rows = text::lines(csv);
  while (!rows.empty() && text::trim(rows.back()).empty()) rows.pop_back();
  if (rows.empty()) fail(ErrorCategory::parse, "frame label CSV is empty");
  std::vector<std::string> classes;
  for (auto& h : text::split(rows.front(), ',')) classes.emplace_back(text::trim(h));
  FrameLabelMatrix m(std::move(video_id), frame_rate, rows.size() - 1, classes);
  for (std::size_t t = 0; t + 1 < rows.size(); ++t) {
    const auto cells = text::split(rows[t + 1], ',');
    if (cells.size() != classes.size()) {
      fail(ErrorCategory::parse, "frame label CSV row " + std::to_string(t + 2) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(classes.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = text::trim(cells[c]);
      if (v != "0" && v != "1") {
        fail(ErrorCategory::parse, "frame label CSV row " + std::to_string(t + 2) + ": cell '" +
                                       std::string(v) + "' is not 0/1");
      }
      m.set(c, t, v == "1");
    }
  }
  return m;
}

std::string to_csv(const Correlation& correlation) {
  std::ostringstream out;
  const auto& names = correlation.class_names;
  out << "class";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i];
    for (std::size_t j = 0; j < names.size(); ++j) out << ',' << text::format_double(correlation.at(i, j));
    out << '\n';
  }
  return out.str();
}

std::vector<std::size_t> occurrence_counts(std::span<const GestureAnnotation> annotations,
                                           const Vocabulary& vocabulary) {
  std::vector<std::size_t> counts(vocabulary.size(), 0);
  for (const auto& a : annotations) {
    if (auto c = vocabulary.find(a.label)) ++counts[*c];
  }
  return counts;
}

std::vector<std::size_t> clip_counts(const ClipSet& clips) {
  std::vector<std::size_t> counts(clips.class_names.size(), 0);
  for (const auto& clip : clips.clips) {
    for (std::size_t c = 0; c < counts.size(); ++c) counts[c] += clip.binary_labels[c];
  }
  return counts;
}

}  // namespace gesturelab::dataset
