#include "gesturelab/trainer.hpp"

#include "gesturelab/checkpoint.hpp"
#include "gesturelab/error.hpp"
#include "gesturelab/rng.hpp"
#include "gesturelab/text_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

namespace gesturelab::trainer {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view to_string(Arm arm) noexcept {
  switch (arm) {
    case Arm::sm: return "sm";
    case Arm::sm_bb: return "sm_bb";
    case Arm::sm_bb_ts: return "sm_bb_ts";
    case Arm::bimodal_sm_bb_ts: return "bimodal_sm_bb_ts";
  }
  return "?";
}

Arm arm_from_string(std::string_view name) {
  for (Arm a : {Arm::sm, Arm::sm_bb, Arm::sm_bb_ts, Arm::bimodal_sm_bb_ts}) {
    if (to_string(a) == name) return a;
  }
  fail(ErrorCategory::config, "unknown arm '" + std::string(name) + "' (sm, sm_bb, sm_bb_ts, bimodal_sm_bb_ts)");
}

std::string_view to_string(ClassMode mode) noexcept { return mode == ClassMode::fine18 ? "fine18" : "super7"; }

ClassMode class_mode_from_string(std::string_view name) {
  if (name == "fine18") return ClassMode::fine18;
  if (name == "super7") return ClassMode::super7;
  fail(ErrorCategory::config, "unknown class mode '" + std::string(name) + "' (fine18, super7)");
}

ArmSwitches switches(Arm arm) noexcept {
  switch (arm) {
    case Arm::sm: return {false, false, false};
    case Arm::sm_bb: return {true, false, false};
    case Arm::sm_bb_ts: return {true, true, false};
    case Arm::bimodal_sm_bb_ts: return {true, true, true};
  }
  return {};
}

std::string SplitSpec::name() const { return kind == Kind::holdout ? "holdout" : "loo:" + held_out; }

SplitSpec SplitSpec::parse(std::string_view text) {
  if (text == "holdout") return {};
  for (std::string_view prefix : {"loo:", "leave_one_out:"}) {
    if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
      return {Kind::leave_one_out, std::string(text.substr(prefix.size()))};
    }
  }
  fail(ErrorCategory::config, "unknown split '" + std::string(text) + "' (holdout or loo:<video>)");
}

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t fnv1a_matrix(const nn::Matrix& m, std::uint64_t h) {
  if (m.size() == 0) return h;
  return fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double)), h);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["arm"] = to_string(c.arm);
  j["class_mode"] = to_string(c.class_mode);
  j["split"] = c.split.name();
  j["train_ratio"] = c.ratios.train;
  j["validation_ratio"] = c.ratios.validation;
  j["test_ratio"] = c.ratios.test;
  j["loo_validation_fraction"] = c.loo_validation_fraction;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["weight_decay"] = c.weight_decay;
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  j["dropout"] = c.dropout;
  j["classifier_hidden"] = c.classifier_hidden;
  j["encoder_hidden"] = c.encoder_hidden;
  j["audio_representation"] = c.audio_representation;
  j["positive_threshold"] = c.positive_threshold;
  j["class_weighting"] = c.class_weighting;
  j["scale_positive_only"] = c.scale_positive_only;
  j["include_zero_support"] = c.include_zero_support;
  j["labels_dir"] = c.labels_dir;
  j["video_features"] = c.video_features;
  j["audio_features"] = c.audio_features;
  j["superclass_map"] = c.superclass_map;
  return j;
}

}  // namespace

std::string ExperimentConfig::to_json() const { return config_json(*this).dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::from_json(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("experiment config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCategory::config, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "arm") c.arm = arm_from_string(v.get<std::string>());
      else if (key == "class_mode") c.class_mode = class_mode_from_string(v.get<std::string>());
      else if (key == "split") c.split = SplitSpec::parse(v.get<std::string>());
      else if (key == "train_ratio") c.ratios.train = v.get<double>();
      else if (key == "validation_ratio") c.ratios.validation = v.get<double>();
      else if (key == "test_ratio") c.ratios.test = v.get<double>();
      else if (key == "loo_validation_fraction") c.loo_validation_fraction = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "threshold") c.threshold = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "classifier_hidden") c.classifier_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "encoder_hidden") c.encoder_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "audio_representation") c.audio_representation = v.get<std::size_t>();
      else if (key == "positive_threshold") c.positive_threshold = v.get<double>();
      else if (key == "class_weighting") c.class_weighting = v.get<bool>();
      else if (key == "scale_positive_only") c.scale_positive_only = v.get<bool>();
      else if (key == "include_zero_support") c.include_zero_support = v.get<bool>();
      else if (key == "labels_dir") c.labels_dir = v.get<std::string>();
      else if (key == "video_features") c.video_features = v.get<std::vector<std::string>>();
      else if (key == "audio_features") c.audio_features = v.get<std::vector<std::string>>();
      else if (key == "superclass_map") c.superclass_map = v.get<std::string>();
      else fail(ErrorCategory::config, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::config, std::string("experiment config: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::hash() const { return hex(fnv1a(config_json(*this).dump())); }

void ExperimentConfig::validate() const {
  if (batch_size == 0) fail(ErrorCategory::config, "batch_size must be positive");
  if (epochs == 0) fail(ErrorCategory::config, "epochs must be positive");
  if (learning_rate < 0.0 || weight_decay < 0.0) fail(ErrorCategory::config, "learning rate and weight decay must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCategory::config, "threshold must lie in (0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorCategory::config, "dropout must lie in [0, 1)");
  (void)dataset::holdout_sizes(0, ratios);
}

nn::Matrix make_targets(const dataset::ClipSet& clips, Arm arm) {
  const bool smooth = switches(arm).temporal_smoothing;
  const auto C = static_cast<Eigen::Index>(clips.class_names.size());
  nn::Matrix t(static_cast<Eigen::Index>(clips.size()), C);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto& clip = clips.clips[i];
    for (Eigen::Index c = 0; c < C; ++c) {
      const auto k = static_cast<std::size_t>(c);
      t(static_cast<Eigen::Index>(i), c) = smooth ? clip.smoothed_labels[k] : static_cast<double>(clip.binary_labels[k]);
    }
  }
  return t;
}

metrics::BoolMatrix truth_labels(const dataset::ClipSet& clips) {
  const auto C = static_cast<Eigen::Index>(clips.class_names.size());
  metrics::BoolMatrix t(static_cast<Eigen::Index>(clips.size()), C);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    for (Eigen::Index c = 0; c < C; ++c) {
      t(static_cast<Eigen::Index>(i), c) = clips.clips[i].binary_labels[static_cast<std::size_t>(c)] != 0;
    }
  }
  return t;
}

Model build_model(const ExperimentConfig& config, std::size_t class_count, std::size_t video_dim) {
  Model m;
  const bool bimodal = switches(config.arm).bimodal;
  if (bimodal) {
    nn::ArchitectureDims enc{3024, config.encoder_hidden, config.audio_representation, config.dropout};
    m.audio_encoder = nn::build_architecture(nn::ArchitectureKind::audio_encoder, enc, config.seed);
  }
  const auto kind = bimodal ? nn::ArchitectureKind::fusion_classifier : nn::ArchitectureKind::classifier;
  const std::size_t input = bimodal ? video_dim + config.audio_representation : video_dim;
  nn::ArchitectureDims cls{input, config.classifier_hidden, class_count, config.dropout};
  m.classifier = nn::build_architecture(kind, cls, config.seed);
  return m;
}

namespace {

nn::Matrix rows_of(const nn::Matrix& m, std::span<const std::size_t> rows) {
  nn::Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

nn::Matrix fuse(const nn::Matrix& video, const nn::Matrix& audio_repr) {
  nn::Matrix x(video.rows(), video.cols() + audio_repr.cols());
  x << video, audio_repr;
  return x;
}

}  // namespace

nn::Matrix predict(const Model& model, const SplitData& data) {
  if (data.clips.size() == 0) return nn::Matrix(0, static_cast<Eigen::Index>(model.classifier.output_dim()));
  if (model.audio_encoder) {
    if (data.audio.rows() != data.video.rows()) fail(ErrorCategory::alignment, "audio rows do not match video rows");
    return nn::predict(model.classifier, fuse(data.video, nn::predict(*model.audio_encoder, data.audio)));
  }
  return nn::predict(model.classifier, data.video);
}

metrics::MetricsReport evaluate(const Model& model, const SplitData& data, const ExperimentConfig& config,
                                const std::vector<std::string>& class_names, std::string split_name) {
  return metrics::make_report(predict(model, data), truth_labels(data.clips), class_names, config.threshold,
                              std::move(split_name), cell_name(config), config.include_zero_support);
}

TrainResult train(const ExperimentConfig& config, const PreparedSplits& data) {
  config.validate();
  const auto sw = switches(config.arm);
  const auto& tr = data.train;
  if (tr.clips.size() == 0) fail(ErrorCategory::validation, "training split is empty");
  if (static_cast<std::size_t>(tr.video.rows()) != tr.clips.size()) {
    fail(ErrorCategory::alignment, "training features do not match training clips");
  }
  if (sw.bimodal && tr.audio.rows() != tr.video.rows()) {
    fail(ErrorCategory::config, "the bimodal arm needs audio features for every clip");
  }

  const std::size_t C = data.class_names.size();
  TrainResult result;
  Model model = build_model(config, C, static_cast<std::size_t>(tr.video.cols()));
  nn::AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay};
  auto cls_state = nn::AdamState::for_net(model.classifier, adam);
  std::optional<nn::AdamState> enc_state;
  if (model.audio_encoder) enc_state = nn::AdamState::for_net(*model.audio_encoder, adam);

  const nn::Matrix targets = make_targets(tr.clips, config.arm);
  dbb::BatchLossOptions loss_options;
  loss_options.mode = sw.dbb ? dbb::BalanceMode::dbb : dbb::BalanceMode::none;
  loss_options.positive_threshold = config.positive_threshold;
  loss_options.scale_positive_only = config.scale_positive_only;
  if (sw.dbb && config.class_weighting) loss_options.weights = dbb::class_weights(targets, config.positive_threshold);

  const bool have_validation = data.validation.clips.size() > 0;
  std::vector<std::size_t> order(tr.clips.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler(derive_seed({config.seed, epoch, 0xE90C}));
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(config.batch_size, order.size() - start));
      const nn::Matrix video = rows_of(tr.video, idx);
      const nn::Matrix t = rows_of(targets, idx);
      std::optional<nn::ForwardResult> enc;
      nn::Matrix x;
      if (model.audio_encoder) {
        enc = nn::forward(*model.audio_encoder, rows_of(tr.audio, idx), nn::Mode::train,
                          derive_seed({config.seed, epoch, batches, 1}));
        x = fuse(video, enc->outputs);
      } else {
        x = video;
      }
      const auto out = nn::forward(model.classifier, x, nn::Mode::train, derive_seed({config.seed, epoch, batches, 2}));
      dbb::BatchLoss loss;
      try {
        loss = dbb::batch_loss(out.outputs, t, loss_options);
      } catch (const Error& e) {
        fail(e.category(), "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches) + ": " + e.what());
      }
      const auto g = nn::backward(model.classifier, out.cache, loss.gradient);
      if (model.audio_encoder) {
        const nn::Matrix g_audio = g.input.rightCols(static_cast<Eigen::Index>(config.audio_representation));
        const auto ge = nn::backward(*model.audio_encoder, enc->cache, g_audio);
        nn::adam_step(*model.audio_encoder, ge, *enc_state);
      }
      nn::adam_step(model.classifier, g, cls_state);
      loss_sum += loss.value;
      ++batches;
    }

    EpochLog entry{epoch, loss_sum / static_cast<double>(batches), 0.0};
    if (!std::isfinite(entry.train_loss)) {
      fail(ErrorCategory::numeric, "non-finite training loss at epoch " + std::to_string(epoch));
    }
    if (have_validation) {
      const auto report = metrics::make_report(predict(model, data.validation), truth_labels(data.validation.clips),
                                               data.class_names, config.threshold, "validation", "",
                                               config.include_zero_support);
      entry.val_macro_f1 = report.macro_f1;
    }
    if (!have_validation || entry.val_macro_f1 > result.best_val_macro_f1) {
      result.best_val_macro_f1 = entry.val_macro_f1;
      result.best_epoch = epoch;
      result.best = model;
    }
    result.log.push_back(entry);
  }
  result.final = std::move(model);
  return result;
}

std::string log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,val_macro_f1\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "," + text::format_double(e.train_loss) + "," +
           text::format_double(e.val_macro_f1) + "\n";
  }
  return out;
}

std::string cell_name(const ExperimentConfig& config) {
  std::string split = config.split.name();
  std::replace(split.begin(), split.end(), ':', '-');
  return std::string(to_string(config.arm)) + "__" + std::string(to_string(config.class_mode)) + "__" + split;
}

// ---- file-backed pipeline --------------------------------------------------

std::vector<dataset::ClipSet> load_label_videos(const ExperimentConfig& config) {
  if (config.labels_dir.empty()) fail(ErrorCategory::config, "labels_dir is not set");
  const fs::path dir(config.labels_dir);
  if (!fs::is_directory(dir)) fail(ErrorCategory::io, "labels directory not found: " + dir.string());

  std::vector<std::pair<std::string, double>> videos;  // id, fps
  const auto index = dir / "videos.json";
  if (fs::exists(index)) {
    const auto j = nlohmann::json::parse(text::read_file(index));
    for (const auto& v : j.at("videos")) videos.emplace_back(v.at("video_id").get<std::string>(), v.at("fps").get<double>());
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      const std::string suffix = ".fine.csv";
      if (name.size() > suffix.size() && name.ends_with(suffix)) {
        videos.emplace_back(name.substr(0, name.size() - suffix.size()), dataset::kDefaultFrameRate);
      }
    }
    std::sort(videos.begin(), videos.end());
  }
  if (videos.empty()) fail(ErrorCategory::validation, "no label matrices in " + dir.string());

  const auto map = config.superclass_map.empty()
                       ? dataset::SuperClassMap::defaults()
                       : dataset::SuperClassMap::from_json(text::read_file(config.superclass_map));
  std::vector<dataset::ClipSet> out;
  for (const auto& [id, fps] : videos) {
    auto fine = dataset::frame_matrix_from_csv(text::read_file(dir / (id + ".fine.csv")), id, fps);
    if (config.class_mode == ClassMode::super7) fine = dataset::map_super_classes(fine, map);
    out.push_back(dataset::assemble_clips(fine));
  }
  return out;
}

namespace {

SplitData make_split_data(dataset::ClipSet clips, const features::FeatureTable& video,
                          const features::FeatureTable* audio) {
  SplitData d;
  d.video = features::gather(video, clips);
  if (audio) d.audio = features::gather(*audio, clips);
  d.clips = std::move(clips);
  return d;
}

}  // namespace

PreparedSplits make_splits(const ExperimentConfig& config, const std::vector<dataset::ClipSet>& videos,
                           const features::FeatureTable& video_table, const features::FeatureTable* audio_table) {
  for (const auto& v : videos) {
    features::check_alignment(video_table, v);
    if (audio_table) features::check_alignment(*audio_table, v);
  }
  dataset::DatasetSplit split;
  if (config.split.kind == SplitSpec::Kind::holdout) {
    split = dataset::split_dataset(dataset::concatenate(videos), config.ratios, config.seed);
  } else {
    split = dataset::leave_one_out_split(videos, config.split.held_out, config.loo_validation_fraction, config.seed);
  }
  PreparedSplits p;
  p.class_names = videos.front().class_names;
  p.train = make_split_data(std::move(split.train), video_table, audio_table);
  p.validation = make_split_data(std::move(split.validation), video_table, audio_table);
  p.test = make_split_data(std::move(split.test), video_table, audio_table);
  return p;
}

PreparedSplits load_experiment_data(const ExperimentConfig& config) {
  config.validate();
  if (config.video_features.empty()) fail(ErrorCategory::config, "no video feature files configured");
  if (switches(config.arm).bimodal && config.audio_features.empty()) {
    fail(ErrorCategory::config, "the bimodal arm needs audio feature files");
  }
  const auto videos = load_label_videos(config);
  std::vector<features::FeatureTable> vt;
  for (const auto& p : config.video_features) vt.push_back(features::read_feature_file(p, features::FeatureRole::video));
  const auto video_table = features::merge(vt);
  std::optional<features::FeatureTable> audio_table;
  if (switches(config.arm).bimodal) {
    std::vector<features::FeatureTable> at;
    for (const auto& p : config.audio_features) at.push_back(features::read_feature_file(p, features::FeatureRole::audio));
    audio_table = features::merge(at);
  }
  return make_splits(config, videos, video_table, audio_table ? &*audio_table : nullptr);
}

std::string manifest_json(const ExperimentConfig& config, const PreparedSplits& data, const TrainResult* result) {
  const auto sw = switches(config.arm);
  ordered_json m;
  m["format"] = "gesturelab-manifest/1";
  m["config_hash"] = config.hash();
  m["config"] = config_json(config);
  m["switches"] = {{"dbb", sw.dbb},
                   {"temporal_smoothing", sw.temporal_smoothing},
                   {"input_source", sw.bimodal ? "video+audio" : "video"}};
  const std::size_t video_dim = static_cast<std::size_t>(data.train.video.cols());
  ordered_json arch;
  arch["classifier"] = {{"kind", sw.bimodal ? "fusion_classifier" : "classifier"},
                        {"input", sw.bimodal ? video_dim + config.audio_representation : video_dim},
                        {"hidden", config.classifier_hidden},
                        {"output", data.class_names.size()}};
  if (sw.bimodal) {
    arch["audio_encoder"] = {{"input", 3024}, {"hidden", config.encoder_hidden}, {"output", config.audio_representation}};
  }
  arch["dropout"] = config.dropout;
  arch["init"] = "uniform +-sqrt(6/fan_in), zero bias";
  m["architecture"] = arch;
  m["training"] = {{"optimizer", "adam"},
                   {"beta1", 0.9},
                   {"beta2", 0.999},
                   {"epsilon", 1e-8},
                   {"weight_decay_mode", "decoupled"},
                   {"criterion", "mse"},
                   {"dbb_criterion_reduction", "mean over example set"},
                   {"epochs_reference", kReferenceEpochs},
                   {"epochs_override", config.epochs != kReferenceEpochs},
                   {"shuffle", "per-epoch reseed derive(seed, epoch)"},
                   {"checkpoint_selection", "best validation macro-F1"},
                   {"fusion", "concatenation"}};
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto* s : {&data.train, &data.validation, &data.test}) {
    h = fnv1a_matrix(s->video, h);
    h = fnv1a_matrix(s->audio, h);
    h = fnv1a_matrix(make_targets(s->clips, Arm::sm), h);
    h = fnv1a_matrix(make_targets(s->clips, Arm::sm_bb_ts), h);
  }
  m["data"] = {{"hash", hex(h)},
               {"classes", data.class_names},
               {"train", data.train.clips.size()},
               {"validation", data.validation.clips.size()},
               {"test", data.test.clips.size()}};
  if (result) m["result"] = {{"best_epoch", result->best_epoch}, {"best_val_macro_f1", result->best_val_macro_f1}};
  return m.dump(2) + "\n";
}

namespace {

bool cached(const ExperimentConfig& config, const fs::path& dir, CellResult& out) {
  const auto manifest = dir / "manifest.json";
  const auto report = dir / "report_test.json";
  if (!fs::exists(manifest) || !fs::exists(report)) return false;
  try {
    const auto m = nlohmann::json::parse(text::read_file(manifest));
    if (m.at("config_hash").get<std::string>() != config.hash()) return false;
    const auto r = nlohmann::json::parse(text::read_file(report));
    out.test_macro_f1 = r.at("macro_f1").get<double>();
    out.reused = true;
    out.ok = true;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

CellResult run_experiment(const ExperimentConfig& config, const PreparedSplits& data, const fs::path& dir, bool force) {
  CellResult out;
  out.name = cell_name(config);
  out.dir = dir;
  if (!force && cached(config, dir, out)) return out;
  const auto result = train(config, data);
  fs::create_directories(dir);
  text::write_file(dir / "manifest.json", manifest_json(config, data, &result));
  text::write_file(dir / "train_log.csv", log_csv(result.log));
  nn::save_checkpoint(dir / "classifier.mgw", result.best.classifier);
  if (result.best.audio_encoder) nn::save_checkpoint(dir / "audio_encoder.mgw", *result.best.audio_encoder);
  const auto train_report = evaluate(result.best, data.train, config, data.class_names, "train");
  const auto val_report = evaluate(result.best, data.validation, config, data.class_names, "validation");
  const auto test_report = evaluate(result.best, data.test, config, data.class_names, "test");
  for (const auto* r : {&train_report, &val_report, &test_report}) {
    text::write_file(dir / ("report_" + r->split + ".csv"), metrics::report_csv(*r));
    text::write_file(dir / ("report_" + r->split + ".json"), metrics::report_json(*r));
  }
  text::write_file(dir / "appendix.csv", metrics::appendix_table_csv(train_report, test_report));
  out.ok = true;
  out.test_macro_f1 = test_report.macro_f1;
  return out;
}

CellResult run_experiment(const ExperimentConfig& config, const fs::path& dir, bool force) {
  CellResult out;
  out.name = cell_name(config);
  out.dir = dir;
  if (!force && cached(config, dir, out)) return out;
  return run_experiment(config, load_experiment_data(config), dir, true);
}

std::vector<CellResult> run_protocol(const ExperimentConfig& base, const std::vector<Arm>& arms,
                                     const std::vector<ClassMode>& modes, const std::vector<SplitSpec>& splits,
                                     const fs::path& out_dir, bool force) {
  std::vector<CellResult> results;
  for (const auto arm : arms) {
    for (const auto mode : modes) {
      for (const auto& split : splits) {
        auto config = base;
        config.arm = arm;
        config.class_mode = mode;
        config.split = split;
        const auto dir = out_dir / cell_name(config);
        try {
          results.push_back(run_experiment(config, dir, force));
        } catch (const std::exception& e) {
          CellResult failed;
          failed.name = cell_name(config);
          failed.dir = dir;
          failed.error = e.what();
          results.push_back(std::move(failed));
        }
      }
    }
  }
  return results;
}

metrics::MetricsReport evaluate_cell(const fs::path& dir, std::string_view split_name) {
  const auto m = nlohmann::json::parse(text::read_file(dir / "manifest.json"));
  const auto config = ExperimentConfig::from_json(m.at("config").dump());
  const auto data = load_experiment_data(config);
  Model model;
  model.classifier = nn::load_checkpoint(dir / "classifier.mgw");
  if (switches(config.arm).bimodal) model.audio_encoder = nn::load_checkpoint(dir / "audio_encoder.mgw");
  const SplitData* split = nullptr;
  if (split_name == "train") split = &data.train;
  else if (split_name == "validation") split = &data.validation;
  else if (split_name == "test") split = &data.test;
  else fail(ErrorCategory::config, "unknown split '" + std::string(split_name) + "' (train, validation, test)");
  return evaluate(model, *split, config, data.class_names, std::string(split_name));
}

}  // namespace gesturelab::trainer
