// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "respnet/audio.hpp"
#include "respnet/wavelet.hpp"

namespace respnet {

/// F x T log-magnitude map, row-major, row 0 = highest center frequency.
/// Values are single precision, matching the on-disk cache.
struct Spectrogram {
  std::size_t freq_bins = 0;
  std::size_t time_frames = 0;
  std::vector<float> values;

  Spectrogram() = default;
  Spectrogram(std::size_t f, std::size_t t, float fill = 0.0f)
      : freq_bins(f), time_frames(t), values(f * t, fill) {}

  float& at(std::size_t f, std::size_t t) { return values[f * time_frames + t]; }
  float at(std::size_t f, std::size_t t) const { return values[f * time_frames + t]; }

  friend bool operator==(const Spectrogram&, const Spectrogram&) = default;
};

inline constexpr double kLogFloor = 1e-10;

/// values = 20 log10(|c| + 1e-10).
Spectrogram log_magnitude(const CoefficientMatrix& coeffs);

/// Bilinear resampling with corner-aligned grids. Identity at native size.
Spectrogram resize(const Spectrogram& spec, std::size_t f_out, std::size_t t_out);

/// Linear interpolation of `src` onto `dst.size()` corner-aligned points.
void interpolate_linear(std::span<const double> src, std::span<double> dst);

// Spectrogram cache: "LSSG", u32 version (1), u32 F, u32 T, F*T float32, all little endian.
void write_spectrogram(const std::filesystem::path& path, const Spectrogram& spec);
Spectrogram read_spectrogram(const std::filesystem::path& path);

/// Front-end settings for turning one clip into one network input.
struct FeatureConfig {
  WaveletSpec wavelet;
  std::uint32_t sample_rate = 4000;
  double band_lo = 60.0;
  double band_hi = 2000.0;
  double duration_seconds = 10.0;  // 10 s for events, 30 s for recordings
  std::size_t freq_bins = 128;
  std::size_t time_frames = 512;

  void validate() const;
};

/// resample -> tile -> bandpass -> CWT -> log magnitude -> resize, computed
/// one scale at a time to bound memory.
Spectrogram extract_spectrogram(const AudioClip& clip, const FeatureConfig& config);

}  // namespace respnet
