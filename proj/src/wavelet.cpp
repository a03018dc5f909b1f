// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/wavelet.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "respnet/error.hpp"

namespace respnet {

namespace {

// The FFTW planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::string_view to_string(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::Morse:
      return "morse";
    case WaveletFamily::Amor:
      return "amor";
    case WaveletFamily::Bump:
      return "bump";
  }
  return "unknown";
}

WaveletFamily parse_wavelet_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "morse") return WaveletFamily::Morse;
  if (lower == "amor") return WaveletFamily::Amor;
  if (lower == "bump") return WaveletFamily::Bump;
  throw InvalidConfig("unknown wavelet family '" + std::string(name) + "' (expected amor|bump|morse)");
}

WaveletSpec WaveletSpec::defaults(WaveletFamily family) {
  WaveletSpec spec;
  spec.family = family;
  return spec;
}

void WaveletSpec::validate() const {
  if (!(morse_gamma > 0.0) || !(morse_beta > 0.0)) {
    throw InvalidConfig("Morse wavelet needs gamma > 0 and beta > 0");
  }
  if (!(amor_center_freq > 0.0)) throw InvalidConfig("Amor center frequency must be positive");
  if (!(bump_sigma > 0.0) || !(bump_sigma < bump_mu)) {
    throw InvalidConfig("Bump wavelet needs 0 < sigma < mu");
  }
}

double WaveletSpec::response(double omega) const {
  if (!(omega > 0.0)) return 0.0;
  switch (family) {
    case WaveletFamily::Morse: {
      const double log_norm = (morse_beta / morse_gamma) *
                              (1.0 + std::log(morse_gamma) - std::log(morse_beta));
      return 2.0 * std::exp(log_norm + morse_beta * std::log(omega) - std::pow(omega, morse_gamma));
    }
    case WaveletFamily::Amor: {
      const double d = omega - amor_center_freq;
      return 2.0 * std::exp(-0.5 * d * d);
    }
    case WaveletFamily::Bump: {
      const double u = (omega - bump_mu) / bump_sigma;
      if (std::abs(u) >= 1.0) return 0.0;
      return 2.0 * std::exp(1.0 - 1.0 / (1.0 - u * u));
    }
  }
  return 0.0;
}

double WaveletSpec::peak_frequency() const {
  switch (family) {
    case WaveletFamily::Morse:
      return std::pow(morse_beta / morse_gamma, 1.0 / morse_gamma);
    case WaveletFamily::Amor:
      return amor_center_freq;
    case WaveletFamily::Bump:
      return bump_mu;
  }
  return 1.0;
}

double WaveletSpec::band_limit() const {
  switch (family) {
    case WaveletFamily::Morse:
      return 6.0 * peak_frequency();
    case WaveletFamily::Amor:
      return amor_center_freq + 14.0;
    case WaveletFamily::Bump:
      return bump_mu + bump_sigma;
  }
  return 1.0;
}

double WaveletSpec::time_spread() const {
  // Var_t = int |Psi'(w)|^2 dw / int |Psi(w)|^2 dw.
  const double hi = band_limit();
  constexpr int kSteps = 40000;
  const double dw = hi / kSteps;
  double energy = 0.0;
  double slope_energy = 0.0;
  for (int k = 1; k < kSteps; ++k) {
    const double w = k * dw;
    const double v = response(w);
    const double d = (response(w + 0.5 * dw) - response(w - 0.5 * dw)) / dw;
    energy += v * v;
    slope_energy += d * d;
  }
  return std::sqrt(slope_energy / energy);
}

double WaveletSpec::support_radius() const {
  // psi(t) on a fine grid by one inverse DFT of the sampled response.
  constexpr int kBins = 1 << 16;
  const double hi = band_limit();
  const double dw = hi / (kBins / 4);
  const double dt = 2.0 * std::numbers::pi / (kBins * dw);
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    buf = fftw_alloc_complex(kBins);
    plan = fftw_plan_dft_1d(kBins, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  for (int k = 0; k < kBins; ++k) {
    buf[k][0] = k < kBins / 4 ? response(k * dw) : 0.0;
    buf[k][1] = 0.0;
  }
  fftw_execute(plan);
  // |psi(-t)| = |psi(t)| because the response is real.
  std::vector<double> energy(kBins / 2);
  double total = 0.0;
  for (int j = 0; j < kBins / 2; ++j) {
    energy[j] = buf[j][0] * buf[j][0] + buf[j][1] * buf[j][1];
    total += j == 0 ? energy[j] : 2.0 * energy[j];
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(buf);
  }
  double tail = 0.0;
  int j = kBins / 2 - 1;
  for (; j > 0; --j) {
    tail += 2.0 * energy[j];
    if (tail > 1e-16 * total) break;
  }
  return (j + 1) * dt;
}

ScaleGrid make_scale_grid(const WaveletSpec& wavelet, std::size_t bins, std::uint32_t sample_rate,
                          double f_lo, double f_hi) {
  wavelet.validate();
  if (bins == 0) throw InvalidConfig("scale grid needs at least one bin");
  if (sample_rate == 0) throw InvalidConfig("scale grid needs a positive sample rate");
  if (!(f_lo > 0.0) || !(f_hi > f_lo)) throw InvalidConfig("scale grid needs 0 < f_lo < f_hi");
  if (f_hi > sample_rate / 2.0) {
    throw InvalidConfig("scale grid upper frequency " + std::to_string(f_hi) +
                        " Hz exceeds Nyquist of " + std::to_string(sample_rate) + " Hz audio");
  }
  ScaleGrid grid;
  grid.scales.resize(bins);
  grid.center_freqs.resize(bins);
  const double peak = wavelet.peak_frequency();
  const double ratio = std::log(f_lo / f_hi);
  for (std::size_t i = 0; i < bins; ++i) {
    const double t = bins == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(bins - 1);
    const double f = std::clamp(f_hi * std::exp(ratio * t), f_lo, f_hi);
    grid.center_freqs[i] = f;
    grid.scales[i] = peak / (2.0 * std::numbers::pi * f / sample_rate);
  }
  return grid;
}

CwtLayout cwt_layout(std::size_t n, double support) {
  if (n == 0) throw InvalidInput("cwt needs a non-empty signal");
  if (!(support >= 0.0) || !std::isfinite(support)) throw InvalidConfig("wavelet support must be finite");
  const auto reach = static_cast<std::size_t>(std::ceil(support));
  CwtLayout layout;
  layout.reflect = std::min(n, reach);
  layout.fft_length = std::bit_ceil(n + 2 * layout.reflect + reach);
  return layout;
}

std::vector<double> pad_signal(std::span<const double> signal, const CwtLayout& layout) {
  const std::size_t n = signal.size();
  if (layout.reflect > n || layout.fft_length < n + 2 * layout.reflect) {
    throw InvalidInput("cwt layout does not fit the signal");
  }
  std::vector<double> out(layout.fft_length, 0.0);
  for (std::size_t j = 0; j < layout.reflect; ++j) {
    out[layout.reflect - 1 - j] = signal[j];
    out[layout.reflect + n + j] = signal[n - 1 - j];
  }
  std::copy(signal.begin(), signal.end(), out.begin() + static_cast<std::ptrdiff_t>(layout.reflect));
  return out;
}

struct CwtPlan::Impl {
  std::size_t n = 0;
  fftw_complex* spectrum = nullptr;  // FFT of the padded signal
  fftw_complex* work = nullptr;
  fftw_plan inverse = nullptr;
  std::vector<double> omega;  // bin angular frequencies, 0 for non-positive bins

  explicit Impl(std::size_t size) : n(size) {
    std::lock_guard lock(planner_mutex());
    spectrum = fftw_alloc_complex(n);
    work = fftw_alloc_complex(n);
    inverse = fftw_plan_dft_1d(static_cast<int>(n), work, work, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(inverse);
    fftw_free(work);
    fftw_free(spectrum);
  }
};

CwtPlan::CwtPlan(std::span<const double> signal, const WaveletSpec& wavelet, double max_scale)
    : wavelet_(wavelet), length_(signal.size()), max_scale_(max_scale) {
  wavelet_.validate();
  if (length_ < 2) throw InvalidInput("cwt needs a signal of at least 2 samples");
  if (!(max_scale > 0.0)) throw InvalidConfig("wavelet scale must be positive");
  layout_ = cwt_layout(length_, wavelet_.support_radius() * max_scale);
  const std::vector<double> padded = pad_signal(signal, layout_);
  const std::size_t m = layout_.fft_length;
  impl_ = std::make_unique<Impl>(m);

  fftw_plan forward;
  {
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_1d(static_cast<int>(m), impl_->work, impl_->spectrum,
                               FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t j = 0; j < m; ++j) {
    impl_->work[j][0] = padded[j];
    impl_->work[j][1] = 0.0;
  }
  fftw_execute(forward);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
  }

  impl_->omega.assign(m, 0.0);
  for (std::size_t k = 1; k <= m / 2; ++k) {
    impl_->omega[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
  }
}

CwtPlan::~CwtPlan() = default;

void CwtPlan::row(double scale, std::span<std::complex<double>> out) {
  if (out.size() != length_) throw InvalidInput("cwt row buffer has the wrong length");
  if (!(scale > 0.0)) throw InvalidConfig("wavelet scale must be positive");
  if (scale > max_scale_ * (1.0 + 1e-12)) {
    throw InvalidConfig("wavelet scale " + std::to_string(scale) + " exceeds the plan's maximum " +
                        std::to_string(max_scale_));
  }
  const std::size_t m = layout_.fft_length;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    // Psi is real, so conjugation leaves the filter unchanged.
    const double h = impl_->omega[k] > 0.0 ? wavelet_.response(scale * impl_->omega[k]) * inv_m : 0.0;
    impl_->work[k][0] = impl_->spectrum[k][0] * h;
    impl_->work[k][1] = impl_->spectrum[k][1] * h;
  }
  fftw_execute(impl_->inverse);
  const std::size_t left = layout_.reflect;
  for (std::size_t j = 0; j < length_; ++j) {
    out[j] = {impl_->work[left + j][0], impl_->work[left + j][1]};
  }
}

CoefficientMatrix cwt(const AudioClip& clip, const WaveletSpec& wavelet, const ScaleGrid& grid) {
  validate(clip);
  if (grid.size() == 0) throw InvalidConfig("cwt needs a non-empty scale grid");
  CwtPlan plan(clip.samples, wavelet, *std::max_element(grid.scales.begin(), grid.scales.end()));
  CoefficientMatrix out;
  out.rows = grid.size();
  out.cols = clip.samples.size();
  out.values.resize(out.rows * out.cols);
  for (std::size_t i = 0; i < out.rows; ++i) {
    plan.row(grid.scales[i], std::span(out.values).subspan(i * out.cols, out.cols));
  }
  return out;
}

}  // namespace respnet
