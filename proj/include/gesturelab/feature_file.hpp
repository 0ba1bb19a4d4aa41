#pragma once

#include "gesturelab/dataset.hpp"
#include "gesturelab/nn.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gesturelab::features {

// MGF1 layout (little-endian):
//   "MGF1" | u32 version=1 | u64 clip_count | u32 dim | clip_count x dim f32
// Sidecar "<file>.idx" (text): optional "# key=value" metadata lines, then the
// header "row,video_id,start_frame" and one line per record.
inline constexpr std::string_view kFeatureMagic = "MGF1";
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

enum class FeatureRole { video, audio };

std::size_t expected_dim(FeatureRole role) noexcept;
std::string_view to_string(FeatureRole role) noexcept;

struct ClipKey {
  std::string video_id;
  std::size_t start_frame = 0;

  auto operator<=>(const ClipKey&) const = default;
};

struct FeatureTable {
  std::size_t dim = 0;
  std::vector<ClipKey> keys;
  std::vector<float> values;  // keys.size() x dim, row-major
  std::map<std::string, std::string> metadata;

  std::size_t size() const noexcept { return keys.size(); }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::optional<std::size_t> find(const ClipKey& key) const;
  void append(const ClipKey& key, std::span<const double> record);
  void append(const ClipKey& key, std::span<const float> record);
};

std::string encode_records(const FeatureTable& table);
std::string encode_sidecar(const FeatureTable& table);
FeatureTable decode(std::string_view records, std::string_view sidecar);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_feature_file(const std::filesystem::path& path, const FeatureTable& table);

/// Validates magic, version, size and (when `role` is given) the dimension.
FeatureTable read_feature_file(const std::filesystem::path& path, std::optional<FeatureRole> role = std::nullopt);

/// Merges tables of the same dimension; duplicate keys are an error.
FeatureTable merge(std::span<const FeatureTable> tables);

/// Every video of `video_clips` must have exactly as many records as clips.
void check_alignment(const FeatureTable& table, const dataset::ClipSet& video_clips);

/// Feature rows for `clips`, in clip order; a missing clip is an alignment error.
nn::Matrix gather(const FeatureTable& table, const dataset::ClipSet& clips);

}  // namespace gesturelab::features
