// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstdint>
#include <vector>

namespace respnet {

/// Mono waveform. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  std::uint32_t sample_rate = 0;

  double duration_seconds() const {
    return sample_rate == 0 ? 0.0 : static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws InvalidInput if the clip is empty, has a zero rate or carries
/// non-finite samples.
void validate(const AudioClip& clip);

/// Rational-ratio resampler: Kaiser-windowed sinc (beta = 8) evaluated in
/// polyphase form. The low-pass cutoff sits just below the lower of the two
/// Nyquist rates, so downsampling is anti-aliased. A clip already at
/// `target_rate` is returned unchanged.
AudioClip resample(const AudioClip& clip, std::uint32_t target_rate);

/// 4th-order Butterworth high-pass at `lo` cascaded with a 4th-order
/// Butterworth low-pass at `hi` (two biquads each), run forward only.
/// When `hi` is at the Nyquist rate the low-pass section is omitted.
AudioClip bandpass(const AudioClip& clip, double lo, double hi);

/// Magnitude response of the filter `bandpass` designs, at `freq` Hz.
double bandpass_response(double lo, double hi, std::uint32_t sample_rate, double freq);

/// Repeats the clip cyclically (or truncates it) to exactly
/// round(target_seconds * sample_rate) samples.
AudioClip tile_to_duration(const AudioClip& clip, double target_seconds);

}  // namespace respnet
