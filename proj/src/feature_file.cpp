#include "gesturelab/feature_file.hpp"

#include "gesturelab/binary_io.hpp"
#include "gesturelab/error.hpp"
#include "gesturelab/text_io.hpp"

#include <algorithm>

namespace gesturelab::features {

std::size_t expected_dim(FeatureRole role) noexcept { return role == FeatureRole::video ? 400 : 3024; }

std::string_view to_string(FeatureRole role) noexcept { return role == FeatureRole::video ? "video" : "audio"; }

std::optional<std::size_t> FeatureTable::find(const ClipKey& key) const {
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] == key) return i;
  }
  return std::nullopt;
}

void FeatureTable::append(const ClipKey& key, std::span<const double> record) {
  if (record.size() != dim) fail(ErrorCategory::shape, "feature record has wrong dimension");
  keys.push_back(key);
  for (double v : record) values.push_back(static_cast<float>(v));
}

void FeatureTable::append(const ClipKey& key, std::span<const float> record) {
  if (record.size() != dim) fail(ErrorCategory::shape, "feature record has wrong dimension");
  keys.push_back(key);
  values.insert(values.end(), record.begin(), record.end());
}

std::string encode_records(const FeatureTable& table) {
  if (table.values.size() != table.keys.size() * table.dim) {
    fail(ErrorCategory::shape, "feature table values do not match keys x dim");
  }
  std::string out(kFeatureMagic);
  out.reserve(kHeaderBytes + table.values.size() * sizeof(float));
  binary::put<std::uint32_t>(out, kFeatureVersion);
  binary::put<std::uint64_t>(out, table.keys.size());
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim));
  for (float v : table.values) binary::put<float>(out, v);
  return out;
}

std::string encode_sidecar(const FeatureTable& table) {
  std::string out;
  for (const auto& [k, v] : table.metadata) out += "# " + k + "=" + v + "\n";
  out += "row,video_id,start_frame\n";
  for (std::size_t i = 0; i < table.keys.size(); ++i) {
    out += std::to_string(i) + "," + table.keys[i].video_id + "," + std::to_string(table.keys[i].start_frame) + "\n";
  }
  return out;
}

FeatureTable decode(std::string_view records, std::string_view sidecar) {
  binary::Reader in(records, "MGF1 file");
  if (records.size() < kHeaderBytes) fail(ErrorCategory::format, "MGF1 file: truncated header");
  if (in.take(4) != kFeatureMagic) fail(ErrorCategory::format, "MGF1 file: bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kFeatureVersion) fail(ErrorCategory::format, "MGF1 file: unsupported version " + std::to_string(version));
  const auto count = in.get<std::uint64_t>();
  const auto dim = in.get<std::uint32_t>();
  if (dim == 0) fail(ErrorCategory::format, "MGF1 file: zero dimension");
  if (count > in.remaining() / sizeof(float) / dim || in.remaining() != count * dim * sizeof(float)) {
    fail(ErrorCategory::format, "MGF1 file: payload is " + std::to_string(in.remaining()) + " bytes, header implies " +
                                    std::to_string(count * dim * sizeof(float)));
  }
  FeatureTable t;
  t.dim = dim;
  t.values.resize(count * dim);
  for (auto& v : t.values) v = in.get<float>();

  bool header_seen = false;
  for (const auto& raw : text::lines(sidecar)) {
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = text::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        t.metadata[std::string(text::trim(body.substr(0, eq)))] = std::string(text::trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!header_seen) {
      if (line != "row,video_id,start_frame") fail(ErrorCategory::format, "MGF1 sidecar: unexpected header");
      header_seen = true;
      continue;
    }
    const auto cells = text::split(line, ',');
    bool ok_row = false, ok_frame = false;
    const double row = cells.size() == 3 ? text::parse_double(cells[0], &ok_row) : 0.0;
    const double frame = cells.size() == 3 ? text::parse_double(cells[2], &ok_frame) : 0.0;
    if (!ok_row || !ok_frame || row != static_cast<double>(t.keys.size()) || frame < 0) {
      fail(ErrorCategory::format, "MGF1 sidecar: bad line '" + std::string(line) + "'");
    }
    t.keys.push_back({std::string(text::trim(cells[1])), static_cast<std::size_t>(frame)});
  }
  if (t.keys.size() != count) {
    fail(ErrorCategory::alignment, "MGF1 sidecar lists " + std::to_string(t.keys.size()) + " clips, file holds " +
                                       std::to_string(count));
  }
  return t;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".idx";
  return p;
}

void write_feature_file(const std::filesystem::path& path, const FeatureTable& table) {
  text::write_file(path, encode_records(table));
  text::write_file(sidecar_path(path), encode_sidecar(table));
}

FeatureTable read_feature_file(const std::filesystem::path& path, std::optional<FeatureRole> role) {
  auto t = decode(text::read_file(path), text::read_file(sidecar_path(path)));
  if (role && t.dim != expected_dim(*role)) {
    fail(ErrorCategory::format, path.string() + ": dim " + std::to_string(t.dim) + " is not valid for " +
                                    std::string(to_string(*role)) + " features (expected " +
                                    std::to_string(expected_dim(*role)) + ")");
  }
  return t;
}

FeatureTable merge(std::span<const FeatureTable> tables) {
  FeatureTable out;
  for (const auto& t : tables) {
    if (out.dim == 0) out.dim = t.dim;
    if (t.dim != out.dim) fail(ErrorCategory::format, "cannot merge feature tables of different dimension");
    out.keys.insert(out.keys.end(), t.keys.begin(), t.keys.end());
    out.values.insert(out.values.end(), t.values.begin(), t.values.end());
    for (const auto& [k, v] : t.metadata) out.metadata.emplace(k, v);
  }
  auto sorted = out.keys;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorCategory::alignment, "duplicate clip in merged feature tables");
  }
  return out;
}

void check_alignment(const FeatureTable& table, const dataset::ClipSet& video_clips) {
  std::map<std::string, std::size_t> expected, have;
  for (const auto& c : video_clips.clips) ++expected[c.video_id];
  for (const auto& k : table.keys) {
    if (expected.count(k.video_id)) ++have[k.video_id];
  }
  for (const auto& [video, n] : expected) {
    if (have[video] != n) {
      fail(ErrorCategory::alignment, "video '" + video + "' has " + std::to_string(n) + " clips but " +
                                         std::to_string(have[video]) + " feature records");
    }
  }
}

nn::Matrix gather(const FeatureTable& table, const dataset::ClipSet& clips) {
  std::map<ClipKey, std::size_t> index;
  for (std::size_t i = 0; i < table.keys.size(); ++i) index.emplace(table.keys[i], i);
  nn::Matrix out(static_cast<Eigen::Index>(clips.size()), static_cast<Eigen::Index>(table.dim));
  for (std::size_t r = 0; r < clips.size(); ++r) {
    const ClipKey key{clips.clips[r].video_id, clips.clips[r].start_frame};
    const auto it = index.find(key);
    if (it == index.end()) {
      fail(ErrorCategory::alignment, "no feature record for clip " + key.video_id + "@" + std::to_string(key.start_frame));
    }
    const auto row = table.row(it->second);
    for (std::size_t d = 0; d < table.dim; ++d) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = static_cast<double>(row[d]);
    }
  }
  return out;
}

}  // namespace gesturelab::features
