#include "gesturelab/cli.hpp"

#include "gesturelab/audio_features.hpp"
#include "gesturelab/dataset.hpp"
#include "gesturelab/error.hpp"
#include "gesturelab/feature_file.hpp"
#include "gesturelab/metrics.hpp"
#include "gesturelab/text_io.hpp"
#include "gesturelab/trainer.hpp"
#include "gesturelab/wav.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>

namespace gesturelab::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<double> resample_linear(std::span<const double> samples, double from_rate, double to_rate) {
  if (!(from_rate > 0.0 && to_rate > 0.0)) fail(ErrorCategory::config, "sample rates must be positive");
  if (samples.empty()) return {};
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(samples.size()) * to_rate / from_rate));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * from_rate / to_rate;
    const auto k = static_cast<std::size_t>(x);
    if (k + 1 >= samples.size()) {
      out[i] = samples.back();
    } else {
      const double f = x - static_cast<double>(k);
      out[i] = samples[k] * (1.0 - f) + samples[k + 1] * f;
    }
  }
  return out;
}

namespace {

struct PrepareArgs {
  std::vector<std::string> annotations;
  std::vector<std::size_t> frames;
  double fps = dataset::kDefaultFrameRate;
  std::string classes;
  std::string superclass_map;
  std::string out;
};

struct ExtractArgs {
  std::string wav;
  std::string clips;
  std::string video;
  std::string out;
  bool allow_resample = false;
};

struct TrainArgs {
  std::string config;
  std::string arm;
  std::string class_mode;
  std::string split;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> weight_decay;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  std::string labels;
  std::vector<std::string> video_features;
  std::vector<std::string> audio_features;
  std::string superclass_map;
  std::string out;
  bool force = false;
};

struct EvaluateArgs {
  std::string run;
  std::string split = "test";
  std::string out;
};

struct ProtocolArgs {
  TrainArgs base;
  std::vector<std::string> arms{"sm", "sm_bb", "sm_bb_ts", "bimodal_sm_bb_ts"};
  std::vector<std::string> modes{"fine18", "super7"};
  std::vector<std::string> splits{"holdout"};
};

struct CorrelateArgs {
  std::string labels;
  std::string level = "fine";
  std::string superclass_map;
  std::string out;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) fail(ErrorCategory::io, what + " not found: " + path);
}

dataset::SuperClassMap load_map(const std::string& path) {
  if (path.empty()) return dataset::SuperClassMap::defaults();
  require_file(path, "super-class map");
  return dataset::SuperClassMap::from_json(text::read_file(path));
}

std::vector<std::string> load_vocabulary(const std::string& path) {
  if (path.empty()) return dataset::default_gesture_classes();
  require_file(path, "class vocabulary");
  std::vector<std::string> names;
  for (const auto& line : text::lines(text::read_file(path))) {
    const auto name = text::trim(line);
    if (!name.empty() && name.front() != '#') names.emplace_back(name);
  }
  if (names.empty()) fail(ErrorCategory::config, "class vocabulary is empty: " + path);
  return names;
}

std::string counts_csv(const std::vector<std::string>& rows, const std::vector<std::string>& videos,
                       const std::vector<std::vector<std::size_t>>& per_video) {
  std::string out = "class";
  for (const auto& v : videos) out += "," + v;
  out += ",total\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += rows[r];
    std::size_t total = 0;
    for (const auto& column : per_video) {
      out += "," + std::to_string(column[r]);
      total += column[r];
    }
    out += "," + std::to_string(total) + "\n";
  }
  return out;
}

void run_prepare(const PrepareArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.frames.empty() && a.frames.size() != a.annotations.size()) {
    fail(ErrorCategory::config, "--frames needs one value per annotation file");
  }
  if (!(a.fps > 0.0)) fail(ErrorCategory::config, "--fps must be positive");
  for (const auto& p : a.annotations) require_file(p, "annotation file");
  const dataset::Vocabulary vocabulary(load_vocabulary(a.classes));
  const auto map = load_map(a.superclass_map);

  struct Video {
    std::string id;
    std::vector<dataset::GestureAnnotation> annotations;
    dataset::FrameLabelMatrix fine;
    dataset::FrameLabelMatrix super;
    dataset::ClipSet clips;
  };
  std::vector<Video> videos;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < a.annotations.size(); ++i) {
    Video v;
    v.id = fs::path(a.annotations[i]).stem().string();
    try {
      v.annotations = dataset::parse_annotations(text::read_file(a.annotations[i]));
    } catch (const Error& e) {
      fail(e.category(), a.annotations[i] + ": " + e.what());
    }
    std::size_t frames = 0;
    if (!a.frames.empty()) {
      frames = a.frames[i];
    } else {
      double last = 0.0;
      for (const auto& ann : v.annotations) last = std::max(last, ann.end);
      frames = static_cast<std::size_t>(std::ceil(last * a.fps - 1e-9));
    }
    auto raster = dataset::rasterize_labels(v.annotations, vocabulary, a.fps, frames, v.id);
    for (auto& w : raster.warnings) warnings.push_back(v.id + ": " + w);
    v.fine = dataset::derive_normal_play(raster.matrix);
    v.super = dataset::map_super_classes(v.fine, map);
    v.clips = dataset::assemble_clips(v.fine);
    videos.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < videos.size(); ++i) {
    for (std::size_t j = i + 1; j < videos.size(); ++j) {
      if (videos[i].id == videos[j].id) fail(ErrorCategory::config, "duplicate video id '" + videos[i].id + "'");
    }
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<std::string> ids;
  std::vector<std::vector<std::size_t>> frame_counts, occurrences, super_clips;
  ordered_json index;
  index["classes"] = videos.empty() ? ordered_json::array() : ordered_json(videos.front().fine.class_names);
  index["super_classes"] = map.super_class_names();
  index["videos"] = ordered_json::array();
  std::string clips_csv = "video_id,start_frame";
  if (!videos.empty()) {
    for (const auto& c : videos.front().fine.class_names) clips_csv += "," + c;
  }
  clips_csv += "\n";
  for (const auto& v : videos) {
    text::write_file(dir / (v.id + ".fine.csv"), dataset::to_csv(v.fine));
    text::write_file(dir / (v.id + ".super.csv"), dataset::to_csv(v.super));
    index["videos"].push_back({{"video_id", v.id}, {"fps", v.fine.frame_rate},
                               {"frames", v.fine.frame_count}, {"clips", v.clips.size()}});
    for (const auto& clip : v.clips.clips) {
      clips_csv += clip.video_id + "," + std::to_string(clip.start_frame);
      for (auto b : clip.binary_labels) clips_csv += b ? ",1" : ",0";
      clips_csv += "\n";
    }
    ids.push_back(v.id);
    std::vector<std::size_t> fc(v.fine.class_count());
    for (std::size_t c = 0; c < fc.size(); ++c) fc[c] = v.fine.active_frames(c);
    frame_counts.push_back(std::move(fc));
    auto occ = dataset::occurrence_counts(v.annotations, vocabulary);
    occ.resize(v.fine.class_count(), 0);  // Normal play has no annotations of its own
    occurrences.push_back(std::move(occ));
    super_clips.push_back(dataset::clip_counts(dataset::assemble_clips(v.super)));
  }
  if (!videos.empty()) {
    const auto& names = videos.front().fine.class_names;
    text::write_file(dir / "frame_counts.csv", counts_csv(names, ids, frame_counts));
    text::write_file(dir / "occurrences.csv", counts_csv(names, ids, occurrences));
    text::write_file(dir / "super_clip_counts.csv", counts_csv(map.super_class_names(), ids, super_clips));
  }
  text::write_file(dir / "clips.csv", clips_csv);
  text::write_file(dir / "videos.json", index.dump(2) + "\n");
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  for (const auto& v : videos) out << v.id << ": " << v.fine.frame_count << " frames, " << v.clips.size() << " clips\n";
}

std::size_t clips_for_video(const std::string& clips_path, std::string& video) {
  require_file(clips_path, "clip index");
  std::map<std::string, std::size_t> counts;
  const auto rows = text::lines(text::read_file(clips_path));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (text::trim(rows[i]).empty()) continue;
    const auto fields = text::split(rows[i], ',');
    ++counts[std::string(text::trim(fields.front()))];
  }
  if (video.empty()) {
    if (counts.size() != 1) fail(ErrorCategory::config, "clip index holds several videos; pass --video");
    video = counts.begin()->first;
  }
  const auto it = counts.find(video);
  if (it == counts.end()) fail(ErrorCategory::validation, "video '" + video + "' not in clip index " + clips_path);
  return it->second;
}

void run_extract(ExtractArgs a, std::ostream& out, std::ostream& err) {
  require_file(a.wav, "WAV file");
  const std::size_t count = clips_for_video(a.clips, a.video);
  auto wav = audio::read_wav(a.wav);
  if (wav.sample_rate != audio::kSampleRate) {
    if (!a.allow_resample) {
      fail(ErrorCategory::validation, a.wav + ": sample rate " + text::format_double(wav.sample_rate) +
                                          " Hz, expected 48000 Hz (use --allow-resample)");
    }
    err << "warning: resampling " << wav.sample_rate << " Hz to 48000 Hz\n";
    wav.samples = resample_linear(wav.samples, wav.sample_rate, audio::kSampleRate);
    wav.sample_rate = audio::kSampleRate;
  }
  const auto segments = audio::slice_audio(wav.samples, wav.sample_rate, count);
  features::FeatureTable table;
  table.dim = audio::kFeatureDim;
  table.metadata["role"] = "audio";
  table.metadata["source"] = fs::path(a.wav).filename().string();
  std::size_t padded = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto f = audio::extract_features(segments[i]);
    table.append({a.video, i * dataset::kClipFrames}, std::span<const double>(f.flattened()));
    if (segments[i].padded()) ++padded;
  }
  if (padded) err << "warning: " << padded << " segment(s) zero padded at the end of the audio\n";
  features::write_feature_file(a.out, table);
  out << a.video << ": " << table.size() << " records x " << table.dim << "\n";
}

trainer::ExperimentConfig build_config(const TrainArgs& a) {
  trainer::ExperimentConfig c;
  if (const char* env = std::getenv("GESTURELAB_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') fail(ErrorCategory::config, "GESTURELAB_SEED is not an unsigned integer");
    c.seed = v;
  }
  if (!a.config.empty()) {
    require_file(a.config, "config file");
    const auto env_seed = c.seed;
    const auto text = text::read_file(a.config);
    c = trainer::ExperimentConfig::from_json(text);
    if (nlohmann::json::parse(text).count("seed") == 0) c.seed = env_seed;
  }
  if (!a.arm.empty()) c.arm = trainer::arm_from_string(a.arm);
  if (!a.class_mode.empty()) c.class_mode = trainer::class_mode_from_string(a.class_mode);
  if (!a.split.empty()) c.split = trainer::SplitSpec::parse(a.split);
  if (a.epochs) c.epochs = *a.epochs;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.learning_rate) c.learning_rate = *a.learning_rate;
  if (a.weight_decay) c.weight_decay = *a.weight_decay;
  if (a.threshold) c.threshold = *a.threshold;
  if (a.seed) c.seed = *a.seed;
  if (!a.labels.empty()) c.labels_dir = a.labels;
  if (!a.video_features.empty()) c.video_features = a.video_features;
  if (!a.audio_features.empty()) c.audio_features = a.audio_features;
  if (!a.superclass_map.empty()) c.superclass_map = a.superclass_map;
  c.validate();
  return c;
}

void add_train_flags(CLI::App* app, TrainArgs& a) {
  app->add_option("--config", a.config, "Experiment config (JSON)");
  app->add_option("--class-mode", a.class_mode, "fine18 | super7");
  app->add_option("--epochs", a.epochs);
  app->add_option("--batch-size", a.batch_size);
  app->add_option("--learning-rate", a.learning_rate);
  app->add_option("--weight-decay", a.weight_decay);
  app->add_option("--threshold", a.threshold);
  app->add_option("--seed", a.seed, "Overrides GESTURELAB_SEED");
  app->add_option("--labels", a.labels, "Output directory of prepare");
  app->add_option("--video-features", a.video_features, "MGF1 files, dim 400")->expected(1, -1);
  app->add_option("--audio-features", a.audio_features, "MGF1 files, dim 3024")->expected(1, -1);
  app->add_option("--superclass-map", a.superclass_map);
  app->add_option("--out", a.out, "Output directory")->required();
  app->add_flag("--force", a.force, "Retrain even if a result with the same config exists");
}

void print_cell(const trainer::CellResult& r, std::ostream& out) {
  out << r.name << ": ";
  if (!r.ok) {
    out << "FAILED " << r.error << "\n";
  } else {
    out << "test macro-F1 " << text::format_double(r.test_macro_f1) << (r.reused ? " (cached)" : "") << "\n";
  }
}

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expressive-gesture recognition pipeline", "gesturelab"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  PrepareArgs prepare;
  auto* p = app.add_subcommand("prepare", "Rasterize annotations into frame label matrices and clip index");
  p->add_option("--annotations", prepare.annotations, "ELAN tab-delimited exports, one per video")->required()->expected(1, -1);
  p->add_option("--frames", prepare.frames, "Frame count per video (default: last annotation end)")->expected(1, -1);
  p->add_option("--fps", prepare.fps, "Label frame rate");
  p->add_option("--classes", prepare.classes, "Class vocabulary file, one name per line");
  p->add_option("--superclass-map", prepare.superclass_map, "Fine -> super class map (JSON)");
  p->add_option("--out", prepare.out)->required();

  ExtractArgs extract;
  auto* x = app.add_subcommand("extract-audio", "Compute 28x108 audio features per clip");
  x->add_option("--wav", extract.wav)->required();
  x->add_option("--clips", extract.clips, "clips.csv written by prepare")->required();
  x->add_option("--video", extract.video, "Video id in the clip index");
  x->add_option("--out", extract.out)->required();
  x->add_flag("--allow-resample", extract.allow_resample);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train and evaluate one experiment");
  t->add_option("--arm", train.arm, "sm | sm_bb | sm_bb_ts | bimodal_sm_bb_ts");
  t->add_option("--split", train.split, "holdout | loo:<video>");
  add_train_flags(t, train);

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Re-evaluate a trained experiment directory");
  e->add_option("--run", evaluate.run, "Directory written by train")->required();
  e->add_option("--split", evaluate.split, "train | validation | test");
  e->add_option("--out", evaluate.out, "Report CSV")->required();

  ProtocolArgs protocol;
  auto* r = app.add_subcommand("protocol", "Run arms x class modes x splits");
  r->add_option("--arms", protocol.arms)->expected(1, -1);
  r->add_option("--modes", protocol.modes)->expected(1, -1);
  r->add_option("--splits", protocol.splits)->expected(1, -1);
  add_train_flags(r, protocol.base);

  CorrelateArgs correlate;
  auto* c = app.add_subcommand("correlate", "Class inter-correlation of a frame label matrix");
  c->add_option("--labels", correlate.labels)->required();
  c->add_option("--level", correlate.level)->check(CLI::IsMember({"fine", "super"}));
  c->add_option("--superclass-map", correlate.superclass_map);
  c->add_option("--out", correlate.out)->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::config);
  }

  if (p->parsed()) {
    run_prepare(prepare, out, err);
  } else if (x->parsed()) {
    run_extract(extract, out, err);
  } else if (t->parsed()) {
    const auto config = build_config(train);
    print_cell(trainer::run_experiment(config, train.out, train.force), out);
  } else if (e->parsed()) {
    const auto report = trainer::evaluate_cell(evaluate.run, evaluate.split);
    text::write_file(evaluate.out, metrics::report_csv(report));
    out << report.experiment << " " << report.split << ": macro-F1 " << text::format_double(report.macro_f1) << "\n";
  } else if (r->parsed()) {
    const auto base = build_config(protocol.base);
    std::vector<trainer::Arm> arms;
    std::vector<trainer::ClassMode> modes;
    std::vector<trainer::SplitSpec> splits;
    for (const auto& s : protocol.arms) arms.push_back(trainer::arm_from_string(s));
    for (const auto& s : protocol.modes) modes.push_back(trainer::class_mode_from_string(s));
    for (const auto& s : protocol.splits) splits.push_back(trainer::SplitSpec::parse(s));
    const auto results = trainer::run_protocol(base, arms, modes, splits, protocol.base.out, protocol.base.force);
    std::string summary = "cell,status,reused,test_macro_f1,error\n";
    bool all_ok = true;
    for (const auto& cell : results) {
      print_cell(cell, out);
      all_ok = all_ok && cell.ok;
      std::string error = cell.error;
      for (auto& ch : error) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      summary += cell.name + "," + (cell.ok ? "ok" : "failed") + "," + (cell.reused ? "1" : "0") + "," +
                 text::format_double(cell.test_macro_f1) + "," + error + "\n";
    }
    text::write_file(fs::path(protocol.base.out) / "protocol_summary.csv", summary);
    if (!all_ok) return 1;
  } else if (c->parsed()) {
    require_file(correlate.labels, "label matrix");
    auto matrix = dataset::frame_matrix_from_csv(text::read_file(correlate.labels),
                                                 fs::path(correlate.labels).stem().string());
    if (correlate.level == "super") {
      const auto map = load_map(correlate.superclass_map);
      if (matrix.class_names != map.super_class_names()) matrix = dataset::map_super_classes(matrix, map);
    }
    const auto corr = dataset::intercorrelation(matrix);
    text::write_file(correlate.out, dataset::to_csv(corr));
    for (const auto& name : corr.zero_variance) err << "warning: class '" << name << "' never varies; r set to 0\n";
    out << corr.class_names.size() << "x" << corr.class_names.size() << " correlation written\n";
  }
  return 0;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    err << "error [" << to_string(e.category()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, out, err);
}

}  // namespace gesturelab::cli
