// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "respnet/audio.hpp"

namespace respnet {

enum class WaveletFamily { Morse, Amor, Bump };

std::string_view to_string(WaveletFamily family);
/// Accepts "morse", "amor", "bump" (case-insensitive).
WaveletFamily parse_wavelet_family(std::string_view name);

/// Analytic mother wavelet, defined in the frequency domain.
///
///   Morse: 2 (e*gamma/beta)^(beta/gamma) w^beta exp(-w^gamma)
///   Amor:  2 exp(-(w - w0)^2 / 2)
///   Bump:  2 exp(1 - 1 / (1 - ((w - mu)/sigma)^2))   for |w - mu| < sigma
///
/// All three vanish for w <= 0 and peak at 2, so a unit-amplitude sinusoid
/// at a scale's center frequency produces coefficients of magnitude ~1.
struct WaveletSpec {
  WaveletFamily family = WaveletFamily::Morse;
  double morse_gamma = 3.0;
  double morse_beta = 20.0;
  double amor_center_freq = 6.0;
  double bump_mu = 5.0;
  double bump_sigma = 0.6;

  static WaveletSpec defaults(WaveletFamily family);

  void validate() const;
  /// Frequency response at angular frequency `omega` (rad per sample, unit scale).
  double response(double omega) const;
  /// Angular frequency (rad/sample) of the response peak at unit scale.
  double peak_frequency() const;
  /// RMS time spread of |psi(t)|^2 at unit scale, in samples.
  double time_spread() const;
  /// Half-width (samples, unit scale) outside which psi(t) keeps less than
  /// 1e-16 of its energy. Scales linearly with the wavelet scale.
  double support_radius() const;
  /// Angular frequency above which the response is negligible, unit scale.
  double band_limit() const;
};

/// Wavelet scales, smallest first, so row 0 carries the highest center
/// frequency. Center frequencies are log-spaced.
struct ScaleGrid {
  std::vector<double> scales;
  std::vector<double> center_freqs;  // Hz

  std::size_t size() const { return scales.size(); }
};

ScaleGrid make_scale_grid(const WaveletSpec& wavelet, std::size_t bins, std::uint32_t sample_rate,
                          double f_lo = 60.0, double f_hi = 2000.0);

/// Row-major F x N complex matrix.
struct CoefficientMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const std::complex<double>& at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Buffer layout for one transform: the signal is reflected `reflect`
/// samples on each side, then zero-extended to `fft_length`. The zero tail
/// is at least as long as the wavelet support, so the circular convolution
/// never wraps onto output samples.
struct CwtLayout {
  std::size_t reflect = 0;
  std::size_t fft_length = 0;
};

/// `support` is the wavelet support radius in samples at the largest scale.
CwtLayout cwt_layout(std::size_t n, double support);
/// Half-sample symmetric reflection, then zeros, per `layout`.
std::vector<double> pad_signal(std::span<const double> signal, const CwtLayout& layout);

/// Precomputes the FFT of one padded signal; each row of the transform is then
/// a pointwise product and one inverse FFT.
class CwtPlan {
 public:
  /// Rows are available for scales up to `max_scale`.
  CwtPlan(std::span<const double> signal, const WaveletSpec& wavelet, double max_scale);
  ~CwtPlan();
  CwtPlan(const CwtPlan&) = delete;
  CwtPlan& operator=(const CwtPlan&) = delete;

  std::size_t signal_length() const { return length_; }
  std::size_t padded_length() const { return layout_.fft_length; }
  const CwtLayout& layout() const { return layout_; }

  /// Coefficients at `scale` for every input sample; `out` must hold signal_length().
  void row(double scale, std::span<std::complex<double>> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  WaveletSpec wavelet_;
  std::size_t length_ = 0;
  double max_scale_ = 0.0;
  CwtLayout layout_;
};

/// Continuous wavelet transform of the clip on the scale grid. Each row is
/// the correlation of the signal with the L1-normalized wavelet at that scale.
CoefficientMatrix cwt(const AudioClip& clip, const WaveletSpec& wavelet, const ScaleGrid& grid);

}  // namespace respnet
