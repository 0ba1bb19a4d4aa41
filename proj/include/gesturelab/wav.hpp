#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace gesturelab::audio {

struct WavAudio {
  double sample_rate = 0.0;
  std::size_t channels = 0;
  std::vector<double> samples;  // mono; multi-channel input is averaged
};

/// PCM 16-bit RIFF/WAVE (plain or extensible header). Samples are scaled by 1/32768.
WavAudio parse_wav(std::string_view bytes);
WavAudio read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM, clamping to the representable range.
void write_wav(const std::filesystem::path& path, std::span<const double> samples, double sample_rate);

}  // namespace gesturelab::audio
