#include "gesturelab/audio_features.hpp"

#include "gesturelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <unsupported/Eigen/FFT>

namespace gesturelab::audio {

std::vector<AudioSegment> slice_audio(std::span<const double> samples, double sample_rate,
                                      std::size_t clip_count) {
  if (!(sample_rate > 0.0)) fail(ErrorCategory::config, "sample rate must be positive");
  const auto length = static_cast<std::size_t>(std::llround(0.64 * sample_rate));
  const std::size_t needed = clip_count * length;
  if (samples.size() + length <= needed) {
    fail(ErrorCategory::alignment, std::to_string(clip_count) + " clips need " + std::to_string(needed) +
                                       " samples but audio has " + std::to_string(samples.size()));
  }
  std::vector<AudioSegment> out(clip_count);
  for (std::size_t i = 0; i < clip_count; ++i) {
    auto& seg = out[i];
    seg.sample_rate = sample_rate;
    seg.samples.assign(length, 0.0);
    const std::size_t begin = i * length;
    const std::size_t available = begin < samples.size() ? std::min(length, samples.size() - begin) : 0;
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(begin), available, seg.samples.begin());
    seg.padded_samples = length - available;
  }
  return out;
}

std::vector<double> window_samples(const AudioSegment& segment, std::size_t w, std::size_t window_size,
                                   std::size_t hop) {
  std::vector<double> out(window_size, 0.0);
  const std::size_t begin = w * hop;
  if (begin < segment.samples.size()) {
    const std::size_t n = std::min(window_size, segment.samples.size() - begin);
    std::copy_n(segment.samples.begin() + static_cast<std::ptrdiff_t>(begin), n, out.begin());
  }
  return out;
}

namespace {

const std::vector<double>& hann(std::size_t n) {
  thread_local std::vector<double> cached;
  if (cached.size() != n) {
    cached.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      cached[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
  }
  return cached;
}

}  // namespace

SpectralFrame magnitude_spectrum(std::span<const double> block, double sample_rate) {
  if (block.size() < 2 || block.size() % 2 != 0) fail(ErrorCategory::shape, "FFT block length must be even");
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> in(block.begin(), block.end());
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, in);
  SpectralFrame frame;
  frame.bin_hz = sample_rate / static_cast<double>(block.size());
  frame.magnitudes.resize(block.size() / 2 + 1);
  for (std::size_t k = 0; k < frame.magnitudes.size(); ++k) frame.magnitudes[k] = std::abs(spectrum[k]);
  return frame;
}

std::vector<SpectralFrame> stft_windows(const AudioSegment& segment, std::size_t window_size,
                                        std::size_t window_count, std::size_t hop) {
  const auto& taper = hann(window_size);
  std::vector<SpectralFrame> frames;
  frames.reserve(window_count);
  for (std::size_t w = 0; w < window_count; ++w) {
    auto block = window_samples(segment, w, window_size, hop);
    for (std::size_t i = 0; i < window_size; ++i) block[i] *= taper[i];
    frames.push_back(magnitude_spectrum(block, segment.sample_rate));
  }
  return frames;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterBank::MelFilterBank(std::size_t filter_count, std::size_t bin_count, double sample_rate)
    : bin_count_(bin_count) {
  if (filter_count == 0 || bin_count < 2) fail(ErrorCategory::config, "mel filter bank needs filters and bins");
  const double nyquist = sample_rate / 2.0;
  const double bin_hz = nyquist / static_cast<double>(bin_count - 1);
  const double top = hz_to_mel(nyquist);
  std::vector<double> edges(filter_count + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(filter_count + 1));
  }
  first_bin_.resize(filter_count);
  weights_.resize(filter_count);
  for (std::size_t m = 0; m < filter_count; ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    const double area_norm = 2.0 / (hi - lo);
    std::size_t first = bin_count;
    std::vector<double> w;
    for (std::size_t k = 0; k < bin_count; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double v = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      if (v <= 0.0) {
        if (first != bin_count) break;
        continue;
      }
      if (first == bin_count) first = k;
      w.push_back(v * area_norm);
    }
    first_bin_[m] = first == bin_count ? 0 : first;
    weights_[m] = std::move(w);
  }
}

double MelFilterBank::weight(std::size_t filter, std::size_t bin) const {
  const auto first = first_bin_.at(filter);
  const auto& w = weights_.at(filter);
  if (bin < first || bin >= first + w.size()) return 0.0;
  return w[bin - first];
}

std::vector<double> MelFilterBank::apply(std::span<const double> power) const {
  if (power.size() != bin_count_) fail(ErrorCategory::shape, "power spectrum has wrong bin count");
  std::vector<double> out(first_bin_.size(), 0.0);
  for (std::size_t m = 0; m < out.size(); ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < weights_[m].size(); ++j) acc += weights_[m][j] * power[first_bin_[m] + j];
    out[m] = acc;
  }
  return out;
}

MfccExtractor::MfccExtractor(std::size_t bin_count, double sample_rate, std::size_t mel_filters,
                             std::size_t coefficients)
    : bank_(mel_filters, bin_count, sample_rate), coefficients_(coefficients), dct_(coefficients * mel_filters) {
  if (coefficients > mel_filters) fail(ErrorCategory::config, "more cepstral coefficients than mel filters");
  const double M = static_cast<double>(mel_filters);
  for (std::size_t k = 0; k < coefficients; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M);
    for (std::size_t m = 0; m < mel_filters; ++m) {
      dct_[k * mel_filters + m] =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(m) + 1.0) / (2.0 * M));
    }
  }
}

std::vector<double> MfccExtractor::operator()(const SpectralFrame& frame) const {
  std::vector<double> power(frame.magnitudes.size());
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = frame.magnitudes[k] * frame.magnitudes[k];
  auto energies = bank_.apply(power);
  for (auto& e : energies) e = std::log(std::max(e, kLogFloor));
  const std::size_t M = energies.size();
  std::vector<double> out(coefficients_, 0.0);
  for (std::size_t k = 0; k < coefficients_; ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < M; ++m) acc += dct_[k * M + m] * energies[m];
    out[k] = acc;
  }
  return out;
}

namespace {

const MfccExtractor& default_extractor() {
  static const MfccExtractor extractor(kBinCount, kSampleRate);
  return extractor;
}

}  // namespace

std::vector<double> mfcc(const SpectralFrame& frame, std::size_t mel_filters, std::size_t coefficients) {
  if (frame.magnitudes.size() == kBinCount && frame.sample_rate() == kSampleRate && mel_filters == kMelFilters &&
      coefficients == kMfccCount) {
    return default_extractor()(frame);
  }
  return MfccExtractor(frame.magnitudes.size(), frame.sample_rate(), mel_filters, coefficients)(frame);
}

SpectralDescriptors spectral_descriptors(const SpectralFrame& frame) {
  const auto& A = frame.magnitudes;
  SpectralDescriptors d;
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    total += A[k];
    weighted += static_cast<double>(k) * A[k];
  }
  if (!(total > 0.0)) {
    d.silent = true;
    return d;
  }
  d.centroid = weighted / total;

  double spread = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double dk = static_cast<double>(k) - d.centroid;
    spread += A[k] * dk * dk;
  }
  d.bandwidth = std::sqrt(spread / total);

  const double target = kRolloffFraction * total;
  double cumulative = 0.0;
  d.rolloff = static_cast<double>(A.size() - 1);
  for (std::size_t k = 0; k < A.size(); ++k) {
    cumulative += A[k];
    if (cumulative >= target) {
      d.rolloff = static_cast<double>(k);
      break;
    }
  }

  double log_sum = 0.0;
  double floored_sum = 0.0;
  double log_min = std::numeric_limits<double>::infinity();
  double log_max = -std::numeric_limits<double>::infinity();
  for (double a : A) {
    const double v = std::max(a, kLogFloor);
    const double lv = std::log(v);
    log_sum += lv;
    floored_sum += v;
    log_min = std::min(log_min, lv);
    log_max = std::max(log_max, lv);
  }
  const double n = static_cast<double>(A.size());
  d.flatness = std::clamp(std::exp(log_sum / n) / (floored_sum / n), 0.0, 1.0);
  d.contrast = log_max - log_min;
  return d;
}

TimeDescriptors time_descriptors(std::span<const double> samples) {
  if (samples.size() < 2) fail(ErrorCategory::shape, "time descriptors need at least 2 samples");
  TimeDescriptors d;
  std::size_t changes = 0;
  double energy = 0.0;
  bool prev_positive = samples[0] >= 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    energy += samples[n] * samples[n];
    const bool positive = samples[n] >= 0.0;
    if (n > 0 && positive != prev_positive) ++changes;
    prev_positive = positive;
  }
  // 0.5 * |sign(x[n]) - sign(x[n-1])| is 1 per sign change.
  d.zcr = static_cast<double>(changes);
  d.rms = std::sqrt(energy / static_cast<double>(samples.size()));
  return d;
}

FeatureTensor derivative_stack(std::span<const double> base, std::size_t windows) {
  if (windows < 2 || base.size() % windows != 0) {
    fail(ErrorCategory::shape, "derivative stack needs at least 2 windows and a full grid");
  }
  const std::size_t C = base.size() / windows;
  FeatureTensor out{windows, 4 * C, std::vector<double>(windows * 4 * C, 0.0)};
  std::vector<double> current(base.begin(), base.end());
  for (std::size_t block = 0; block < 4; ++block) {
    for (std::size_t w = 0; w < windows; ++w) {
      for (std::size_t c = 0; c < C; ++c) out.values[w * out.channels + block * C + c] = current[w * C + c];
    }
    if (block == 3) break;
    std::vector<double> next(current.size(), 0.0);
    for (std::size_t w = 1; w < windows; ++w) {
      for (std::size_t c = 0; c < C; ++c) next[w * C + c] = current[w * C + c] - current[(w - 1) * C + c];
    }
    current = std::move(next);
  }
  return out;
}

const std::vector<std::string>& channel_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> base;
    for (std::size_t i = 0; i < kMfccCount; ++i) base.push_back("mfcc" + std::to_string(i));
    for (const char* n : {"centroid", "bandwidth", "rolloff", "flatness", "contrast", "zcr", "rms"}) base.emplace_back(n);
    std::vector<std::string> all;
    for (const char* prefix : {"", "d1_", "d2_", "d3_"}) {
      for (const auto& b : base) all.push_back(prefix + b);
    }
    return all;
  }();
  return names;
}

FeatureTensor extract_features(const AudioSegment& segment) {
  const auto length = static_cast<std::size_t>(std::llround(0.64 * segment.sample_rate));
  if (segment.samples.size() != length) {
    fail(ErrorCategory::shape, "segment has " + std::to_string(segment.samples.size()) + " samples, expected " +
                                   std::to_string(length));
  }
  const auto frames = stft_windows(segment);
  std::optional<MfccExtractor> local;
  if (segment.sample_rate != kSampleRate) local.emplace(kBinCount, segment.sample_rate);
  const MfccExtractor& cepstrum = local ? *local : default_extractor();
  std::vector<double> base(kWindowCount * kBaseChannels, 0.0);
  for (std::size_t w = 0; w < kWindowCount; ++w) {
    double* row = base.data() + w * kBaseChannels;
    const auto coeffs = cepstrum(frames[w]);
    std::copy(coeffs.begin(), coeffs.end(), row);
    const auto s = spectral_descriptors(frames[w]);
    const auto t = time_descriptors(window_samples(segment, w));
    row[kMfccCount + 0] = s.centroid;
    row[kMfccCount + 1] = s.bandwidth;
    row[kMfccCount + 2] = s.rolloff;
    row[kMfccCount + 3] = s.flatness;
    row[kMfccCount + 4] = s.contrast;
    row[kMfccCount + 5] = t.zcr;
    row[kMfccCount + 6] = t.rms;
  }
  return derivative_stack(base, kWindowCount);
}

}  // namespace gesturelab::audio
