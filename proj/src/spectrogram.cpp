// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/spectrogram.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "respnet/error.hpp"
#include "respnet/io.hpp"

namespace respnet {

Spectrogram log_magnitude(const CoefficientMatrix& coeffs) {
  Spectrogram out(coeffs.rows, coeffs.cols);
  for (std::size_t i = 0; i < coeffs.values.size(); ++i) {
    out.values[i] = static_cast<float>(20.0 * std::log10(std::abs(coeffs.values[i]) + kLogFloor));
  }
  return out;
}

void interpolate_linear(std::span<const double> src, std::span<double> dst) {
  const std::size_t n = src.size();
  const std::size_t m = dst.size();
  if (m == 0) return;
  if (n == 1 || m == 1) {
    for (double& d : dst) d = src[0];
    return;
  }
  if (n == m) {
    std::copy(src.begin(), src.end(), dst.begin());
    return;
  }
  const double step = static_cast<double>(n - 1) / static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    const double pos = static_cast<double>(j) * step;
    std::size_t i0 = static_cast<std::size_t>(pos);
    if (i0 >= n - 1) i0 = n - 2;
    const double w = pos - static_cast<double>(i0);
    dst[j] = src[i0] == src[i0 + 1] ? src[i0] : (1.0 - w) * src[i0] + w * src[i0 + 1];
  }
}

Spectrogram resize(const Spectrogram& spec, std::size_t f_out, std::size_t t_out) {
  if (f_out < 2 || t_out < 2) throw InvalidInput("resize target must be at least 2x2");
  if (spec.freq_bins == 0 || spec.time_frames == 0) throw InvalidInput("cannot resize an empty spectrogram");
  if (spec.freq_bins == f_out && spec.time_frames == t_out) return spec;

  // Time axis first, then frequency; bilinear is separable.
  std::vector<double> rows(spec.freq_bins * t_out);
  std::vector<double> src(spec.time_frames);
  for (std::size_t f = 0; f < spec.freq_bins; ++f) {
    for (std::size_t t = 0; t < spec.time_frames; ++t) src[t] = spec.at(f, t);
    interpolate_linear(src, std::span(rows).subspan(f * t_out, t_out));
  }
  Spectrogram out(f_out, t_out);
  std::vector<double> column(spec.freq_bins);
  std::vector<double> resized(f_out);
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t f = 0; f < spec.freq_bins; ++f) column[f] = rows[f * t_out + t];
    interpolate_linear(column, resized);
    for (std::size_t f = 0; f < f_out; ++f) out.at(f, t) = static_cast<float>(resized[f]);
  }
  return out;
}

namespace {
constexpr std::array<char, 4> kCacheMagic{'L', 'S', 'S', 'G'};
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

void write_spectrogram(const std::filesystem::path& path, const Spectrogram& spec) {
  ByteWriter w;
  w.bytes(kCacheMagic.data(), kCacheMagic.size());
  w.u32(kCacheVersion);
  w.u32(static_cast<std::uint32_t>(spec.freq_bins));
  w.u32(static_cast<std::uint32_t>(spec.time_frames));
  for (float v : spec.values) w.f32(v);
  write_file_atomic(path, w.buffer());
}

Spectrogram read_spectrogram(const std::filesystem::path& path) {
  const std::vector<char> data = read_file(path);
  ByteReader r(data, path.string());
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kCacheMagic) throw FormatError(path.string() + ": not a spectrogram cache (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCacheVersion) {
    throw FormatError(path.string() + ": unsupported spectrogram cache version " + std::to_string(version));
  }
  const std::uint32_t f = r.u32();
  const std::uint32_t t = r.u32();
  if (f == 0 || t == 0) throw FormatError(path.string() + ": empty spectrogram dimensions");
  const std::uint64_t expected = 16ull + 4ull * f * t;
  if (data.size() != expected) {
    throw FormatError(path.string() + ": size " + std::to_string(data.size()) + " bytes, expected " +
                      std::to_string(expected));
  }
  Spectrogram spec(f, t);
  for (float& v : spec.values) v = r.f32();
  return spec;
}

void FeatureConfig::validate() const {
  wavelet.validate();
  if (sample_rate == 0) throw InvalidConfig("feature sample rate must be positive");
  if (!(band_lo > 0.0) || !(band_hi > band_lo) || band_hi > sample_rate / 2.0) {
    throw InvalidConfig("feature band must satisfy 0 < lo < hi <= sample_rate/2");
  }
  if (!(duration_seconds > 0.0)) throw InvalidConfig("feature duration must be positive");
  if (freq_bins < 2 || time_frames < 2) throw InvalidConfig("spectrogram size must be at least 2x2");
}

Spectrogram extract_spectrogram(const AudioClip& clip, const FeatureConfig& config) {
  config.validate();
  validate(clip);
  AudioClip audio = resample(clip, config.sample_rate);
  audio = tile_to_duration(audio, config.duration_seconds);
  audio = bandpass(audio, config.band_lo, config.band_hi);

  const ScaleGrid grid = make_scale_grid(config.wavelet, config.freq_bins, config.sample_rate,
                                         config.band_lo, config.band_hi);
  CwtPlan plan(audio.samples, config.wavelet, grid.scales.back());
  const std::size_t n = audio.samples.size();
  std::vector<std::complex<double>> row(n);
  std::vector<double> magnitude(n);
  std::vector<double> resized(config.time_frames);
  Spectrogram out(config.freq_bins, config.time_frames);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    plan.row(grid.scales[i], row);
    for (std::size_t j = 0; j < n; ++j) {
      // Round through float to match log_magnitude followed by resize.
      magnitude[j] = static_cast<float>(20.0 * std::log10(std::abs(row[j]) + kLogFloor));
    }
    interpolate_linear(magnitude, resized);
    for (std::size_t t = 0; t < config.time_frames; ++t) out.at(i, t) = static_cast<float>(resized[t]);
  }
  return out;
}

}  // namespace respnet
