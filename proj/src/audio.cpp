// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

#include "respnet/error.hpp"

namespace respnet {

void validate(const AudioClip& clip) {
  if (clip.samples.empty()) throw InvalidInput("audio clip is empty");
  if (clip.sample_rate == 0) throw InvalidInput("audio clip has a zero sample rate");
  for (double s : clip.samples) {
    if (!std::isfinite(s)) throw InvalidInput("audio clip contains non-finite samples");
  }
}

namespace {

constexpr double kKaiserBeta = 8.0;
constexpr int kZeroCrossings = 16;
constexpr double kRolloff = 0.95;

double kaiser(double x, double half_width) {
  const double r = x / half_width;
  if (std::abs(r) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

struct Biquad {
  double b0, b1, b2, a1, a2;  // normalized by a0

  std::complex<double> response(double w) const {
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

Biquad design_biquad(bool highpass, double cutoff, double sample_rate, double q) {
  const double w0 = 2.0 * std::numbers::pi * cutoff / sample_rate;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad f{};
  if (highpass) {
    f.b0 = (1.0 + cw) / 2.0 / a0;
    f.b1 = -(1.0 + cw) / a0;
  } else {
    f.b0 = (1.0 - cw) / 2.0 / a0;
    f.b1 = (1.0 - cw) / a0;
  }
  f.b2 = f.b0;
  f.a1 = -2.0 * cw / a0;
  f.a2 = (1.0 - alpha) / a0;
  return f;
}

// Pole-pair quality factors of a 4th-order Butterworth prototype.
constexpr std::array<double, 2> kButterworthQ{0.54119610014619698, 1.3065629648763766};

std::vector<Biquad> design_bandpass(double lo, double hi, std::uint32_t sample_rate) {
  const double nyquist = sample_rate / 2.0;
  if (!(lo > 0.0) || !(hi > lo)) {
    throw InvalidInput("bandpass requires 0 < lo < hi, got lo=" + std::to_string(lo) +
                       " hi=" + std::to_string(hi));
  }
  if (hi > nyquist) {
    throw InvalidInput("bandpass upper edge " + std::to_string(hi) + " Hz exceeds Nyquist " +
                       std::to_string(nyquist) + " Hz");
  }
  std::vector<Biquad> sections;
  for (double q : kButterworthQ) sections.push_back(design_biquad(true, lo, sample_rate, q));
  if (hi < nyquist * (1.0 - 1e-9)) {
    for (double q : kButterworthQ) sections.push_back(design_biquad(false, hi, sample_rate, q));
  }
  return sections;
}

}  // namespace

AudioClip resample(const AudioClip& clip, std::uint32_t target_rate) {
  validate(clip);
  if (target_rate == 0) throw InvalidInput("resample target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const std::uint64_t g = std::gcd(clip.sample_rate, target_rate);
  const std::uint64_t up = target_rate / g;
  const std::uint64_t down = clip.sample_rate / g;

  // Filter designed on the virtual upsampled grid (rate * up).
  const double cutoff = kRolloff * 0.5 / static_cast<double>(std::max(up, down));
  const double half_width = kZeroCrossings / (2.0 * cutoff);
  const auto taps_each_side = static_cast<std::int64_t>(std::ceil(half_width / up));
  const std::size_t width = static_cast<std::size_t>(2 * taps_each_side + 1);

  std::vector<double> table(up * width);
  for (std::uint64_t phase = 0; phase < up; ++phase) {
    double* row = table.data() + phase * width;
    double sum = 0.0;
    for (std::int64_t d = -taps_each_side; d <= taps_each_side; ++d) {
      const double m = static_cast<double>(phase) + static_cast<double>(d) * static_cast<double>(up);
      const double h = 2.0 * cutoff * sinc(2.0 * cutoff * m) * kaiser(m, half_width);
      row[d + taps_each_side] = h;
      sum += h;
    }
    for (std::size_t k = 0; k < width; ++k) row[k] /= sum;
  }

  const std::uint64_t n_in = clip.samples.size();
  const std::uint64_t n_out = (n_in * up + down - 1) / down;
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const auto n_in_signed = static_cast<std::int64_t>(n_in);
  for (std::uint64_t n = 0; n < n_out; ++n) {
    const std::uint64_t pos = n * down;
    const auto base = static_cast<std::int64_t>(pos / up);
    const std::uint64_t phase = pos % up;
    const double* row = table.data() + phase * width;
    double acc = 0.0;
    for (std::int64_t d = -taps_each_side; d <= taps_each_side; ++d) {
      const std::int64_t k = base - d;
      if (k < 0 || k >= n_in_signed) continue;
      acc += clip.samples[static_cast<std::size_t>(k)] * row[d + taps_each_side];
    }
    out.samples[n] = acc;
  }
  return out;
}

AudioClip bandpass(const AudioClip& clip, double lo, double hi) {
  validate(clip);
  const auto sections = design_bandpass(lo, hi, clip.sample_rate);
  AudioClip out = clip;
  for (const Biquad& f : sections) {
    // Transposed direct form II.
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& s : out.samples) {
      const double x = s;
      const double y = f.b0 * x + z1;
      z1 = f.b1 * x - f.a1 * y + z2;
      z2 = f.b2 * x - f.a2 * y;
      s = y;
    }
  }
  return out;
}

double bandpass_response(double lo, double hi, std::uint32_t sample_rate, double freq) {
  const auto sections = design_bandpass(lo, hi, sample_rate);
  const double w = 2.0 * std::numbers::pi * freq / sample_rate;
  std::complex<double> h = 1.0;
  for (const Biquad& f : sections) h *= f.response(w);
  return std::abs(h);
}

AudioClip tile_to_duration(const AudioClip& clip, double target_seconds) {
  validate(clip);
  if (!(target_seconds > 0.0)) throw InvalidInput("tile target duration must be positive");
  const auto target = static_cast<std::size_t>(std::llround(target_seconds * clip.sample_rate));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(target);
  const std::size_t len = clip.samples.size();
  for (std::size_t k = 0; k < target; ++k) out.samples[k] = clip.samples[k % len];
  return out;
}

}  // namespace respnet
