#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gesturelab::audio {

inline constexpr double kSampleRate = 48000.0;
inline constexpr std::size_t kSegmentSamples = 30720;  // 0.64 s at 48 kHz
inline constexpr std::size_t kWindowSize = 2048;
inline constexpr std::size_t kWindowCount = 28;
// 27 * 1062 + 2048 = 30722: the last window runs 2 samples past the segment
// and is zero padded.
inline constexpr std::size_t kHop = 1062;
inline constexpr std::size_t kBinCount = kWindowSize / 2 + 1;
inline constexpr std::size_t kMelFilters = 40;
inline constexpr std::size_t kMfccCount = 20;
inline constexpr std::size_t kBaseChannels = kMfccCount + 7;
inline constexpr std::size_t kChannels = kBaseChannels * 4;
inline constexpr std::size_t kFeatureDim = kWindowCount * kChannels;  // 3024
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kRolloffFraction = 0.85;

struct AudioSegment {
  std::vector<double> samples;
  double sample_rate = kSampleRate;
  std::size_t padded_samples = 0;  // zeros appended to reach full length

  bool padded() const noexcept { return padded_samples > 0; }
};

/// Segment i covers samples [i*L, (i+1)*L) with L = 0.64 s worth of samples.
/// A short final segment is zero padded; a shortfall of a full segment or more
/// is an alignment error.
std::vector<AudioSegment> slice_audio(std::span<const double> samples, double sample_rate,
                                      std::size_t clip_count);

struct SpectralFrame {
  std::vector<double> magnitudes;  // |FFT| for bins 0..N/2
  double bin_hz = kSampleRate / static_cast<double>(kWindowSize);

  std::size_t window_size() const noexcept { return 2 * (magnitudes.size() - 1); }
  double sample_rate() const noexcept { return bin_hz * static_cast<double>(window_size()); }
};

/// Raw (unwindowed) samples of window w; zero padded past the segment end.
std::vector<double> window_samples(const AudioSegment& segment, std::size_t w,
                                   std::size_t window_size = kWindowSize, std::size_t hop = kHop);

/// Hann-windowed magnitude spectra of the analysis windows of one segment.
std::vector<SpectralFrame> stft_windows(const AudioSegment& segment, std::size_t window_size = kWindowSize,
                                        std::size_t window_count = kWindowCount, std::size_t hop = kHop);

/// Magnitude spectrum of one (already windowed) block; block length must be even.
SpectralFrame magnitude_spectrum(std::span<const double> block, double sample_rate);

/// Triangular mel filters (HTK mel scale, 0 Hz to Nyquist), each normalized to unit area.
class MelFilterBank {
 public:
  MelFilterBank(std::size_t filter_count, std::size_t bin_count, double sample_rate);

  std::vector<double> apply(std::span<const double> power) const;
  std::size_t filter_count() const noexcept { return first_bin_.size(); }
  double weight(std::size_t filter, std::size_t bin) const;

 private:
  std::size_t bin_count_;
  std::vector<std::size_t> first_bin_;
  std::vector<std::vector<double>> weights_;
};

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// Power spectrum -> mel energies -> natural log (floored) -> orthonormal DCT-II.
class MfccExtractor {
 public:
  MfccExtractor(std::size_t bin_count, double sample_rate, std::size_t mel_filters = kMelFilters,
                std::size_t coefficients = kMfccCount);

  std::vector<double> operator()(const SpectralFrame& frame) const;

 private:
  MelFilterBank bank_;
  std::size_t coefficients_;
  std::vector<double> dct_;  // coefficients x mel_filters
};

std::vector<double> mfcc(const SpectralFrame& frame, std::size_t mel_filters = kMelFilters,
                         std::size_t coefficients = kMfccCount);

/// All in bin units except flatness (ratio) and contrast (natural-log difference).
struct SpectralDescriptors {
  double centroid = 0.0;
  double bandwidth = 0.0;
  double rolloff = 0.0;
  double flatness = 0.0;
  double contrast = 0.0;
  bool silent = false;  // no positive magnitude; everything reported as 0
};

SpectralDescriptors spectral_descriptors(const SpectralFrame& frame);

struct TimeDescriptors {
  double zcr = 0.0;  // crossings counted within the window, sign(0) = +1
  double rms = 0.0;
};

TimeDescriptors time_descriptors(std::span<const double> samples);

/// windows x channels grid, window-major.
struct FeatureTensor {
  std::size_t windows = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  double at(std::size_t w, std::size_t ch) const noexcept { return values[w * channels + ch]; }
  const std::vector<double>& flattened() const noexcept { return values; }
};

/// Appends first, second and third backward differences along the window axis
/// (x[-1] := x[0], so the first row of every difference block is 0).
FeatureTensor derivative_stack(std::span<const double> base, std::size_t windows);

/// Channel order: 20 MFCC, centroid, bandwidth, rolloff, flatness, contrast,
/// ZCR, RMS, then the delta, delta-2 and delta-3 blocks in the same order.
const std::vector<std::string>& channel_names();

FeatureTensor extract_features(const AudioSegment& segment);

}  // namespace gesturelab::audio
