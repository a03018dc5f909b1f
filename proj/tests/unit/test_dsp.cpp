// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "respnet/audio.hpp"
#include "respnet/error.hpp"
#include "respnet/io.hpp"
#include "respnet/spectrogram.hpp"
#include "respnet/wavelet.hpp"

using namespace respnet;
namespace fs = std::filesystem;

namespace {

AudioClip sine(double freq, double amplitude, std::uint32_t rate, std::size_t n) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
  }
  return clip;
}

// Least-squares amplitude of a sinusoid at `freq` over x[begin, end).
double sine_amplitude(const std::vector<double>& x, double freq, std::uint32_t rate, std::size_t begin,
                      std::size_t end) {
  double ss = 0, cc = 0, sc = 0, xs = 0, xc = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const double ph = 2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate;
    const double s = std::sin(ph), c = std::cos(ph);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    xs += x[i] * s;
    xc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (xs * cc - xc * sc) / det;
  const double b = (xc * ss - xs * sc) / det;
  return std::hypot(a, b);
}

fs::path temp_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / ("respnet_unit_" + std::string(name));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("validate rejects empty, rateless and non-finite clips") {
  AudioClip clip;
  CHECK_THROWS_AS(validate(clip), InvalidInput);
  clip.samples = {0.1, 0.2};
  CHECK_THROWS_AS(validate(clip), InvalidInput);
  clip.sample_rate = 4000;
  CHECK_NOTHROW(validate(clip));
  clip.samples[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(clip), InvalidInput);
}

TEST_CASE("resample is the identity at the same rate") {
  const AudioClip clip = sine(123.0, 0.5, 4000, 300);
  CHECK(resample(clip, 4000).samples == clip.samples);
}

TEST_CASE("resample 8 kHz to 4 kHz preserves an in-band sinusoid") {
  const AudioClip in = sine(300.0, 0.8, 8000, 8000);
  const AudioClip out = resample(in, 4000);
  CHECK(out.sample_rate == 4000);
  CHECK(out.samples.size() == 4000);
  const AudioClip expected = sine(300.0, 0.8, 4000, 4000);
  double err = 0.0;
  for (std::size_t i = 200; i < 3800; ++i) err = std::max(err, std::abs(out.samples[i] - expected.samples[i]));
  CHECK(err < 1e-3);
}

TEST_CASE("downsampling attenuates content above the new Nyquist rate") {
  const AudioClip in = sine(3000.0, 1.0, 8000, 8000);
  const AudioClip out = resample(in, 4000);
  // 3 kHz folds onto 1 kHz at the new rate.
  CHECK(sine_amplitude(out.samples, 1000.0, 4000, 200, 3800) < 0.01);
}

TEST_CASE("resample output length rounds up") {
  AudioClip clip = sine(100.0, 0.1, 44100, 1001);
  CHECK(resample(clip, 4000).samples.size() == (1001 * 4000 + 44099) / 44100);
}

TEST_CASE("butterworth high-pass is -3 dB at the cutoff") {
  CHECK(bandpass_response(60.0, 2000.0, 4000, 60.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(bandpass_response(60.0, 2000.0, 4000, 600.0) == doctest::Approx(1.0).epsilon(1e-3));
  // 24 dB per octave: two octaves below the cutoff is about (1/4)^4.
  CHECK(bandpass_response(60.0, 2000.0, 4000, 15.0) < 0.005);
}

TEST_CASE("bandpass steady-state gain matches the designed response") {
  for (double f : {45.0, 60.0, 200.0, 900.0}) {
    const AudioClip out = bandpass(sine(f, 1.0, 4000, 16000), 60.0, 2000.0);
    CAPTURE(f);
    CHECK(sine_amplitude(out.samples, f, 4000, 8000, 16000) ==
          doctest::Approx(bandpass_response(60.0, 2000.0, 4000, f)).epsilon(2e-3));
  }
}

TEST_CASE("bandpass with a low-pass section attenuates above the upper cutoff") {
  const AudioClip out = bandpass(sine(1800.0, 1.0, 8000, 16000), 60.0, 600.0);
  CHECK(sine_amplitude(out.samples, 1800.0, 8000, 8000, 16000) < 0.01);
}

TEST_CASE("tile_to_duration repeats cyclically and truncates") {
  AudioClip clip;
  clip.sample_rate = 4;
  clip.samples = {1.0, 2.0, 3.0};
  CHECK(tile_to_duration(clip, 2.0).samples == std::vector<double>{1, 2, 3, 1, 2, 3, 1, 2});
  CHECK(tile_to_duration(clip, 0.5).samples == std::vector<double>{1, 2});
}

TEST_CASE("wavelet families parse case-insensitively") {
  CHECK(parse_wavelet_family("Bump") == WaveletFamily::Bump);
  CHECK(parse_wavelet_family("AMOR") == WaveletFamily::Amor);
  CHECK(parse_wavelet_family("morse") == WaveletFamily::Morse);
  CHECK_THROWS_AS(parse_wavelet_family("haar"), InvalidConfig);
}

TEST_CASE("mother wavelets peak at 2 at their analytic peak frequency") {
  const double morse_peak = std::pow(20.0 / 3.0, 1.0 / 3.0);
  const std::pair<WaveletFamily, double> cases[] = {
      {WaveletFamily::Morse, morse_peak}, {WaveletFamily::Amor, 6.0}, {WaveletFamily::Bump, 5.0}};
  for (const auto& [family, peak] : cases) {
    const WaveletSpec w = WaveletSpec::defaults(family);
    CAPTURE(to_string(family));
    CHECK(w.peak_frequency() == doctest::Approx(peak).epsilon(1e-6));
    CHECK(w.response(peak) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(w.response(0.0) == 0.0);
    CHECK(w.response(-1.0) == 0.0);
    CHECK(w.response(peak * 0.9) < 2.0);
    CHECK(w.response(peak * 1.1) < 2.0);
  }
  CHECK(WaveletSpec::defaults(WaveletFamily::Bump).response(5.61) == 0.0);
}

TEST_CASE("scale grid is log-spaced from the top frequency down") {
  const WaveletSpec w = WaveletSpec::defaults(WaveletFamily::Morse);
  const ScaleGrid grid = make_scale_grid(w, 5, 4000, 100.0, 1600.0);
  REQUIRE(grid.size() == 5);
  const double expected[] = {1600.0, 800.0, 400.0, 200.0, 100.0};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(grid.center_freqs[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    CHECK(grid.scales[i] * 2.0 * std::numbers::pi * expected[i] / 4000.0 ==
          doctest::Approx(w.peak_frequency()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_scale_grid(w, 5, 4000, 100.0, 2500.0), InvalidConfig);
  CHECK_THROWS_AS(make_scale_grid(w, 0, 4000, 100.0, 1600.0), InvalidConfig);
}

TEST_CASE("cwt layout reflects about the half sample then zero-extends") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const CwtLayout short_support = cwt_layout(5, 2.3);
  CHECK(short_support.reflect == 3);
  CHECK(short_support.fft_length == 16);
  CHECK(pad_signal(x, short_support) == std::vector<double>{3, 2, 1, 1, 2, 3, 4, 5, 5, 4, 3, 0, 0, 0, 0, 0});
  const CwtLayout long_support = cwt_layout(5, 40.0);
  CHECK(long_support.reflect == 5);
  CHECK(long_support.fft_length == 64);
}

TEST_CASE("wavelet energy outside the support radius is negligible") {
  for (WaveletFamily family : {WaveletFamily::Morse, WaveletFamily::Amor, WaveletFamily::Bump}) {
    const WaveletSpec w = WaveletSpec::defaults(family);
    const double scale = 4.0;
    const auto radius = static_cast<std::size_t>(std::ceil(w.support_radius() * scale));
    const auto kernel = oracle::wavelet_kernel(w, scale, 3 * radius);
    double total = 0.0, outside = 0.0;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
      const double e = std::norm(kernel[i]);
      total += e;
      const std::size_t d = i > 3 * radius ? i - 3 * radius : 3 * radius - i;
      if (d > radius) outside += e;
    }
    CAPTURE(to_string(family));
    CHECK(outside < 1e-15 * total);
    CHECK(w.support_radius() > w.time_spread());
  }
}

TEST_CASE("fft cwt matches direct convolution") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> signal(300);
  for (double& v : signal) v = noise(rng);
  AudioClip clip{signal, 4000};
  for (WaveletFamily family : {WaveletFamily::Morse, WaveletFamily::Amor, WaveletFamily::Bump}) {
    const WaveletSpec w = WaveletSpec::defaults(family);
    const ScaleGrid grid = make_scale_grid(w, 4, 4000, 300.0, 1000.0);
    const CoefficientMatrix c = cwt(clip, w, grid);
    const CwtLayout layout = cwt_layout(signal.size(), w.support_radius() * grid.scales.back());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto half = static_cast<std::size_t>(1.5 * w.support_radius() * grid.scales[i]) + 8;
      const auto kernel = oracle::wavelet_kernel(w, grid.scales[i], half);
      const auto ref = oracle::direct_cwt_row(signal, kernel, layout.reflect);
      CAPTURE(to_string(family));
      CAPTURE(i);
      CHECK(oracle::max_relative_error(std::span(c.values).subspan(i * c.cols, c.cols), ref) < 1e-6);
    }
  }
}

TEST_CASE("a unit sinusoid at a scale's center frequency has unit coefficients") {
  const AudioClip clip = sine(500.0, 1.0, 4000, 2048);
  for (WaveletFamily family : {WaveletFamily::Morse, WaveletFamily::Amor, WaveletFamily::Bump}) {
    const WaveletSpec w = WaveletSpec::defaults(family);
    const ScaleGrid grid = make_scale_grid(w, 1, 4000, 500.0, 500.0 + 1e-9);
    const CoefficientMatrix c = cwt(clip, w, grid);
    CAPTURE(to_string(family));
    for (std::size_t j = 512; j < 1536; j += 97) CHECK(std::abs(c.at(0, j)) == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("cwt plan rejects scales above its maximum") {
  const AudioClip clip = sine(500.0, 1.0, 4000, 64);
  CwtPlan plan(clip.samples, WaveletSpec::defaults(WaveletFamily::Morse), 10.0);
  std::vector<std::complex<double>> row(64);
  CHECK_NOTHROW(plan.row(10.0, row));
  CHECK_THROWS_AS(plan.row(20.0, row), InvalidConfig);
  CHECK_THROWS_AS(CwtPlan(clip.samples, WaveletSpec::defaults(WaveletFamily::Morse), 0.0), InvalidConfig);
}

TEST_CASE("log magnitude is 20 log10 of the modulus plus the floor") {
  CoefficientMatrix c;
  c.rows = 1;
  c.cols = 2;
  c.values = {{3.0, 4.0}, {0.0, 0.0}};
  const Spectrogram s = log_magnitude(c);
  CHECK(s.at(0, 0) == doctest::Approx(20.0 * std::log10(5.0)));
  CHECK(s.at(0, 1) == doctest::Approx(-200.0));
}

TEST_CASE("resize is exact at native size and on bilinear ramps") {
  Spectrogram s(4, 6);
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t t = 0; t < 6; ++t) s.at(f, t) = static_cast<float>(2.0 * f + 0.5 * t);
  CHECK(resize(s, 4, 6) == s);
  const Spectrogram r = resize(s, 7, 11);
  for (std::size_t f = 0; f < 7; ++f)
    for (std::size_t t = 0; t < 11; ++t) {
      const double ff = f * 3.0 / 6.0, tt = t * 5.0 / 10.0;
      CHECK(r.at(f, t) == doctest::Approx(2.0 * ff + 0.5 * tt).epsilon(1e-6));
    }
}

TEST_CASE("spectrogram cache has a 16 byte header and round-trips bitwise") {
  const fs::path dir = temp_dir("cache");
  Spectrogram s(3, 5);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = static_cast<float>(std::sin(i * 1.7) * 40.0);
  write_spectrogram(dir / "a.lssg", s);
  CHECK(fs::file_size(dir / "a.lssg") == 16 + 4 * 3 * 5);
  CHECK(read_spectrogram(dir / "a.lssg") == s);

  std::vector<char> bytes = read_file(dir / "a.lssg");
  bytes[0] = 'X';
  write_file_atomic(dir / "bad.lssg", bytes);
  CHECK_THROWS_AS(read_spectrogram(dir / "bad.lssg"), FormatError);
  bytes = read_file(dir / "a.lssg");
  bytes.pop_back();
  write_file_atomic(dir / "short.lssg", bytes);
  CHECK_THROWS_AS(read_spectrogram(dir / "short.lssg"), FormatError);
}

TEST_CASE("extract_spectrogram yields the configured size deterministically") {
  FeatureConfig cfg;
  cfg.duration_seconds = 0.5;
  cfg.freq_bins = 16;
  cfg.time_frames = 32;
  cfg.wavelet = WaveletSpec::defaults(WaveletFamily::Bump);
  const AudioClip clip = sine(440.0, 0.5, 8000, 3000);
  const Spectrogram a = extract_spectrogram(clip, cfg);
  CHECK(a.freq_bins == 16);
  CHECK(a.time_frames == 32);
  CHECK(extract_spectrogram(clip, cfg) == a);
  // The row nearest 440 Hz carries the most energy mid-clip.
  const ScaleGrid grid = make_scale_grid(cfg.wavelet, 16, 4000, 60.0, 2000.0);
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    if (std::abs(std::log(grid.center_freqs[i] / 440.0)) < std::abs(std::log(grid.center_freqs[nearest] / 440.0)))
      nearest = i;
  }
  std::size_t loudest = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    if (a.at(i, 16) > a.at(loudest, 16)) loudest = i;
  }
  CHECK(loudest == nearest);
}

}  // TEST_SUITE
