#pragma once

#include "gesturelab/dataset.hpp"
#include "gesturelab/dbb.hpp"
#include "gesturelab/feature_file.hpp"
#include "gesturelab/metrics.hpp"
#include "gesturelab/nn.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gesturelab::trainer {

enum class Arm { sm, sm_bb, sm_bb_ts, bimodal_sm_bb_ts };
enum class ClassMode { fine18, super7 };

std::string_view to_string(Arm arm) noexcept;
Arm arm_from_string(std::string_view name);
std::string_view to_string(ClassMode mode) noexcept;
ClassMode class_mode_from_string(std::string_view name);

/// What each arm turns on. Adjacent arms differ in exactly one switch.
struct ArmSwitches {
  bool dbb = false;
  bool temporal_smoothing = false;
  bool bimodal = false;
};

ArmSwitches switches(Arm arm) noexcept;

struct SplitSpec {
  enum class Kind { holdout, leave_one_out };
  Kind kind = Kind::holdout;
  std::string held_out;  // video id for leave_one_out

  /// "holdout" or "loo:<video>"
  std::string name() const;
  static SplitSpec parse(std::string_view text);
};

inline constexpr std::size_t kReferenceEpochs = 3000;
inline constexpr std::size_t kDeskEpochs = 200;

struct ExperimentConfig {
  Arm arm = Arm::sm_bb_ts;
  ClassMode class_mode = ClassMode::super7;
  SplitSpec split;
  dataset::SplitRatios ratios;
  double loo_validation_fraction = 0.1;

  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t epochs = kDeskEpochs;
  double weight_decay = 1e-2;
  double threshold = metrics::kDefaultThreshold;
  std::uint64_t seed = 0;

  double dropout = nn::kDefaultDropout;
  std::vector<std::size_t> classifier_hidden{256, 128, 64};
  std::vector<std::size_t> encoder_hidden{1024, 512, 512};
  std::size_t audio_representation = nn::kAudioRepresentationDim;

  double positive_threshold = 0.0;
  bool class_weighting = false;
  bool scale_positive_only = false;
  bool include_zero_support = false;

  std::string labels_dir;
  std::vector<std::string> video_features;
  std::vector<std::string> audio_features;
  std::string superclass_map;  // empty: built-in default

  std::string to_json() const;
  static ExperimentConfig from_json(std::string_view json_text);
  /// FNV-1a of the canonical JSON; identifies a protocol cell for caching.
  std::string hash() const;
  void validate() const;
};

/// Inputs and labels of one split, rows aligned with `clips`.
struct SplitData {
  dataset::ClipSet clips;
  nn::Matrix video;  // clips x 400 (or any width the classifier was built for)
  nn::Matrix audio;  // clips x 3024, empty for unimodal arms
};

struct PreparedSplits {
  std::vector<std::string> class_names;
  SplitData train;
  SplitData validation;
  SplitData test;
};

/// Binary any-frame labels, or temporally smoothed labels for the *_ts arms.
nn::Matrix make_targets(const dataset::ClipSet& clips, Arm arm);

/// Evaluation truth: any-frame presence.
metrics::BoolMatrix truth_labels(const dataset::ClipSet& clips);

struct Model {
  std::optional<nn::DenseNet> audio_encoder;
  nn::DenseNet classifier;
};

Model build_model(const ExperimentConfig& config, std::size_t class_count, std::size_t video_dim);

/// Eval-mode outputs (no dropout, no RNG).
nn::Matrix predict(const Model& model, const SplitData& data);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainResult {
  Model best;   // highest validation macro-F1 (earliest on ties)
  Model final;  // after the last epoch
  std::size_t best_epoch = 0;
  double best_val_macro_f1 = -1.0;
  std::vector<EpochLog> log;
};

TrainResult train(const ExperimentConfig& config, const PreparedSplits& data);

metrics::MetricsReport evaluate(const Model& model, const SplitData& data, const ExperimentConfig& config,
                                const std::vector<std::string>& class_names, std::string split_name);

std::string log_csv(const std::vector<EpochLog>& log);

// ---- file-backed pipeline --------------------------------------------------

/// Per-video clip sets from a `prepare` output directory, at the config's class level.
std::vector<dataset::ClipSet> load_label_videos(const ExperimentConfig& config);

PreparedSplits make_splits(const ExperimentConfig& config, const std::vector<dataset::ClipSet>& videos,
                           const features::FeatureTable& video_table,
                           const features::FeatureTable* audio_table);

PreparedSplits load_experiment_data(const ExperimentConfig& config);

struct CellResult {
  std::string name;
  std::filesystem::path dir;
  bool reused = false;
  bool ok = false;
  std::string error;
  double test_macro_f1 = 0.0;
};

/// Trains, evaluates and writes manifest.json, train_log.csv, checkpoints and
/// reports into `dir`. Reuses an existing result with the same config hash
/// unless `force`.
CellResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir, bool force = false);

/// Same, with data already in memory (its hash is recorded in the manifest).
CellResult run_experiment(const ExperimentConfig& config, const PreparedSplits& data,
                          const std::filesystem::path& dir, bool force = false);

std::string cell_name(const ExperimentConfig& config);

/// Cartesian product of arms x class modes x splits, one directory per cell.
/// A failing cell is recorded and does not stop the others.
std::vector<CellResult> run_protocol(const ExperimentConfig& base, const std::vector<Arm>& arms,
                                     const std::vector<ClassMode>& modes, const std::vector<SplitSpec>& splits,
                                     const std::filesystem::path& out_dir, bool force = false);

/// Reloads a cell written by run_experiment and re-evaluates one split.
metrics::MetricsReport evaluate_cell(const std::filesystem::path& dir, std::string_view split_name);

std::string manifest_json(const ExperimentConfig& config, const PreparedSplits& data, const TrainResult* result);

}  // namespace gesturelab::trainer
