#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gesturelab::dataset {

inline constexpr double kDefaultFrameRate = 25.0;
inline constexpr std::size_t kClipFrames = 16;
inline constexpr std::string_view kNormalPlay = "Normal play";

struct GestureAnnotation {
  std::string label;
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds
};

/// Which tab-separated column holds each annotation field (0-based).
struct ColumnSpec {
  std::size_t label = 0;
  std::size_t start = 1;
  std::size_t end = 2;
};

/// Parses an ELAN tab-delimited export. Blank lines and lines starting with '#'
/// are skipped. All malformed lines are collected and reported in one error.
std::vector<GestureAnnotation> parse_annotations(std::string_view text, const ColumnSpec& columns = {});

/// The 17 annotated gesture classes, in the order of the per-video frame tables.
/// Normal play is not part of it; it is derived.
const std::vector<std::string>& default_gesture_classes();

/// Resolves hand-typed names against a class list, ignoring case and whitespace runs.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> names);

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  std::string listing() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::string> folded_;
};

/// Per-video boolean presence of each class at each frame step.
/// Storage is class-major: values[c * frame_count + t].
struct FrameLabelMatrix {
  std::string video_id;
  double frame_rate = kDefaultFrameRate;
  std::size_t frame_count = 0;
  std::vector<std::string> class_names;
  std::vector<std::uint8_t> values;

  FrameLabelMatrix() = default;
  FrameLabelMatrix(std::string video, double fps, std::size_t frames, std::vector<std::string> classes);

  std::size_t class_count() const noexcept { return class_names.size(); }
  bool at(std::size_t c, std::size_t t) const noexcept { return values[c * frame_count + t] != 0; }
  void set(std::size_t c, std::size_t t, bool on) noexcept { values[c * frame_count + t] = on ? 1 : 0; }
  std::optional<std::size_t> class_index(std::string_view name) const;
  std::size_t active_frames(std::size_t c) const noexcept;
};

struct RasterizeResult {
  FrameLabelMatrix matrix;
  std::vector<std::string> warnings;
};

/// A class is active in frame t iff an annotation of that class overlaps
/// [t/fps, (t+1)/fps) with positive length. Annotations past the last frame
/// are clipped with a warning.
RasterizeResult rasterize_labels(std::span<const GestureAnnotation> annotations,
                                 const Vocabulary& vocabulary, double frame_rate,
                                 std::size_t frame_count, std::string video_id = {});

/// Appends the Normal play column: active exactly when no other class is.
FrameLabelMatrix derive_normal_play(const FrameLabelMatrix& matrix);

/// Fine class -> super class assignment. Default is the 18 -> 7 grouping where
/// Expressive preparation and Physical energy fall into Normal play.
class SuperClassMap {
 public:
  static SuperClassMap defaults();

  /// JSON object {"fine class": "super class", ...}. Super-class order follows
  /// first appearance unless a "__order__" array is given.
  static SuperClassMap from_json(std::string_view json_text);
  std::string to_json() const;

  SuperClassMap(std::vector<std::pair<std::string, std::string>> entries,
                std::vector<std::string> super_order);

  const std::vector<std::string>& super_class_names() const noexcept { return super_names_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::optional<std::size_t> super_index_of(std::string_view fine_class) const;
  std::vector<std::string> fine_classes_of(std::string_view super_class) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> super_names_;
};

/// Super-class column is active iff any constituent fine class is active.
FrameLabelMatrix map_super_classes(const FrameLabelMatrix& matrix, const SuperClassMap& map);

struct Clip {
  std::string video_id;
  std::size_t start_frame = 0;
  std::size_t class_count = 0;
  std::vector<std::uint8_t> frame_labels;  // kClipFrames x class_count, frame-major
  std::vector<std::uint8_t> binary_labels;
  std::vector<double> smoothed_labels;

  bool frame(std::size_t i, std::size_t c) const noexcept { return frame_labels[i * class_count + c] != 0; }
};

struct ClipSet {
  std::vector<std::string> class_names;
  std::vector<Clip> clips;

  std::size_t size() const noexcept { return clips.size(); }
};

/// floor(T/16) non-overlapping clips; the trailing T mod 16 frames are dropped.
ClipSet assemble_clips(const FrameLabelMatrix& matrix);

/// Recency-weighted average of per-frame labels: frame i (1-based, i = n most
/// recent) has weight i / (n(n+1)/2). frame_labels is n x class_count, frame-major.
std::vector<double> temporal_smooth(std::span<const std::uint8_t> frame_labels, std::size_t class_count);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// validation = floor(r_val * n), test = floor(r_test * n), train takes the rest.
SplitSizes holdout_sizes(std::size_t n, const SplitRatios& ratios);

struct DatasetSplit {
  ClipSet train;
  ClipSet validation;
  ClipSet test;
};

DatasetSplit split_dataset(const ClipSet& clips, const SplitRatios& ratios, std::uint64_t seed);

/// Test = every clip of the held-out video; the others are pooled, shuffled and
/// split with validation = floor(val_fraction * pool).
DatasetSplit leave_one_out_split(std::span<const ClipSet> videos, std::string_view held_out,
                                 double val_fraction, std::uint64_t seed);

ClipSet concatenate(std::span<const ClipSet> parts);

struct Correlation {
  std::vector<std::string> class_names;
  std::vector<double> values;                 // row-major C x C
  std::vector<std::string> zero_variance;     // classes whose r was set to 0

  double at(std::size_t i, std::size_t j) const noexcept { return values[i * class_names.size() + j]; }
};

/// Pearson correlation between class indicator vectors over frames.
Correlation intercorrelation(const FrameLabelMatrix& matrix);

// CSV surfaces
std::string to_csv(const FrameLabelMatrix& matrix);
FrameLabelMatrix frame_matrix_from_csv(std::string_view csv, std::string video_id,
                                       double frame_rate = kDefaultFrameRate);
std::string to_csv(const Correlation& correlation);

/// Number of annotations per class (vocabulary order).
std::vector<std::size_t> occurrence_counts(std::span<const GestureAnnotation> annotations,
                                           const Vocabulary& vocabulary);

/// Number of clips whose any-frame label is set, per class.
std::vector<std::size_t> clip_counts(const ClipSet& clips);

}  // namespace gesturelab::dataset
