#include "gesturelab/wav.hpp"

#include "gesturelab/error.hpp"
#include "gesturelab/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace gesturelab::audio {
namespace {

std::uint32_t u32le(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t u16le(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

WavAudio parse_wav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    fail(ErrorCategory::format, "not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::string_view data;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.substr(pos, 4);
    const std::uint32_t size = u32le(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a data chunk whose declared size overruns the file (streamed writers).
      if (id != "data") fail(ErrorCategory::format, "truncated WAV chunk");
    }
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (id == "fmt ") {
      if (avail < 16) fail(ErrorCategory::format, "WAV fmt chunk too short");
      format = u16le(bytes, body);
      channels = u16le(bytes, body + 2);
      rate = u32le(bytes, body + 4);
      bits = u16le(bytes, body + 14);
      if (format == 0xFFFE && avail >= 26) format = u16le(bytes, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.substr(body, avail);
      have_data = true;
    }
    pos = body + avail + (avail % 2);
  }
  if (!have_fmt || !have_data) fail(ErrorCategory::format, "WAV file lacks fmt or data chunk");
  if (format != 1 || bits != 16) {
    fail(ErrorCategory::format, "only 16-bit PCM WAV is supported (format " + std::to_string(format) + ", " +
                                    std::to_string(bits) + " bits)");
  }
  if (channels == 0) fail(ErrorCategory::format, "WAV declares zero channels");
  WavAudio out;
  out.sample_rate = static_cast<double>(rate);
  out.channels = channels;
  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data.size() / frame_bytes;
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const auto raw = static_cast<std::int16_t>(u16le(data, f * frame_bytes + 2 * ch));
      acc += static_cast<double>(raw) / 32768.0;
    }
    out.samples[f] = acc / static_cast<double>(channels);
  }
  return out;
}

WavAudio read_wav(const std::filesystem::path& path) { return parse_wav(text::read_file(path)); }

void write_wav(const std::filesystem::path& path, std::span<const double> samples, double sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double scaled = std::round(s * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  text::write_file(path, out);
}

}  // namespace gesturelab::audio
