// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "respnet/augment.hpp"
#include "respnet/error.hpp"

using namespace respnet;

namespace {

Spectrogram numbered(std::size_t f, std::size_t t, float offset = 0.0f) {
  Spectrogram s(f, t);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = offset + static_cast<float>(i);
  return s;
}

Dataset toy_dataset(std::size_t per_class, std::size_t classes) {
  Dataset d;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class + c; ++i)
      d.push_back({"s" + std::to_string(d.size()), numbered(6, 8, 100.0f * d.size()), one_hot(c, classes)});
  return d;
}

}  // namespace

TEST_SUITE("augmentation") {

TEST_CASE("labels: one-hot, hard label, validation") {
  CHECK(one_hot(2, 4) == std::vector<double>{0, 0, 1, 0});
  CHECK_THROWS_AS(one_hot(4, 4), InvalidInput);
  LabeledSpectrogram item{"x", Spectrogram(1, 1), {0.3, 0.3, 0.4}};
  CHECK(hard_label(item) == 2);
  item.label = {0.5, 0.5};
  CHECK(hard_label(item) == 0);
  CHECK_THROWS_AS(validate_label(std::vector<double>{0.7, 0.2}), InvalidInput);
  CHECK_THROWS_AS(validate_label(std::vector<double>{1.2, -0.2}), InvalidInput);
}

TEST_CASE("balanced batches hold exactly batch/C of every class") {
  const std::vector<std::size_t> class_of{0, 0, 0, 0, 0, 0, 0, 1, 2, 2};
  BalancedSampler sampler(class_of, 3, 12, 42);
  for (int b = 0; b < 50; ++b) {
    const auto batch = sampler.next_batch();
    REQUIRE(batch.size() == 12);
    std::map<std::size_t, int> counts;
    for (std::size_t i : batch) ++counts[class_of.at(i)];
    CHECK(counts[0] == 4);
    CHECK(counts[1] == 4);
    CHECK(counts[2] == 4);
  }
  CHECK_THROWS_AS(BalancedSampler(class_of, 3, 10, 1), InvalidConfig);
  CHECK_THROWS_AS(BalancedSampler(std::vector<std::size_t>{0, 0}, 2, 4, 1), InvalidConfig);
}

TEST_CASE("same seed gives the same batch stream") {
  const std::vector<std::size_t> class_of{0, 1, 0, 1, 1};
  BalancedSampler a(class_of, 2, 4, 7), b(class_of, 2, 4, 7);
  for (int i = 0; i < 5; ++i) CHECK(a.next_batch() == b.next_batch());
}

TEST_CASE("random crops are verbatim sub-windows") {
  const Spectrogram s = numbered(20, 30);
  std::mt19937_64 rng(3);
  std::set<std::pair<std::size_t, std::size_t>> offsets;
  for (int trial = 0; trial < 200; ++trial) {
    const Spectrogram c = random_crop(s, 10, rng);
    REQUIRE(c.freq_bins == 10);
    REQUIRE(c.time_frames == 20);
    const std::size_t f0 = static_cast<std::size_t>(c.at(0, 0)) / 30;
    const std::size_t t0 = static_cast<std::size_t>(c.at(0, 0)) % 30;
    offsets.insert({f0, t0});
    CHECK(c == crop_at(s, f0, t0, 10, 20));
    for (std::size_t f = 0; f < 10; ++f)
      for (std::size_t t = 0; t < 20; ++t) CHECK(c.at(f, t) == s.at(f0 + f, t0 + t));
  }
  CHECK(offsets.size() > 50);
  CHECK_THROWS_AS(random_crop(s, 20, rng), InvalidConfig);
}

TEST_CASE("center crop sits at half the crop") {
  const Spectrogram s = numbered(12, 16);
  CHECK(center_crop(s, 4) == crop_at(s, 2, 2, 8, 12));
  CHECK(center_crop_to(s, 8, 12) == crop_at(s, 2, 2, 8, 12));
  CHECK(center_crop(s, 0) == s);
}

TEST_CASE("mixup interpolates spectrograms and labels") {
  LabeledSpectrogram a{"a", Spectrogram(2, 2, 1.0f), {1, 0, 0}};
  LabeledSpectrogram b{"b", Spectrogram(2, 2, 3.0f), {0, 0, 1}};
  const LabeledSpectrogram m = mixup_with(a, b, 0.25);
  for (float v : m.spec.values) CHECK(v == doctest::Approx(2.5));
  CHECK(m.label[0] == doctest::Approx(0.25));
  CHECK(m.label[2] == doctest::Approx(0.75));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto r = mixup(a, b, 0.4, rng);
    CHECK(std::accumulate(r.label.begin(), r.label.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : r.label) CHECK(v >= 0.0);
  }
}

TEST_CASE("beta sampler mean and variance at alpha 0.4") {
  std::mt19937_64 rng(2024);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double l = sample_beta(0.4, rng);
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
    sum += l;
    sq += l * l;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
  // Var Beta(a, a) = 1 / (4 (2a + 1)).
  CHECK(var == doctest::Approx(1.0 / (4.0 * 1.8)).epsilon(0.05));
}

TEST_CASE("make_batch crops, mixes and stacks") {
  const Dataset d = toy_dataset(2, 3);
  AugmentConfig cfg;
  cfg.crop_bins = 2;
  std::mt19937_64 rng(5);
  const std::vector<std::size_t> idx{0, 3, 5, 1};
  const Batch b = make_batch(d, idx, cfg, rng);
  CHECK(b.inputs.dims() == Shape{4, 1, 4, 6});
  CHECK(b.labels.dims() == Shape{4, 3});
  for (std::size_t n = 0; n < 4; ++n) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += b.labels.data()[n * 3 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Batch e = make_eval_batch(d, idx, 4, 6);
  for (std::size_t n = 0; n < 4; ++n) {
    const Spectrogram c = center_crop_to(d[idx[n]].spec, 4, 6);
    for (std::size_t i = 0; i < c.values.size(); ++i) CHECK(e.inputs.data()[n * 24 + i] == c.values[i]);
    CHECK(e.labels.data()[n * 3 + hard_label(d[idx[n]])] == 1.0);
  }
}

TEST_CASE("without mixup, batch labels stay one-hot") {
  const Dataset d = toy_dataset(2, 2);
  AugmentConfig cfg;
  cfg.mixup = false;
  cfg.crop_bins = 0;
  std::mt19937_64 rng(5);
  const std::vector<std::size_t> idx{0, 4};
  const Batch b = make_batch(d, idx, cfg, rng);
  CHECK(b.labels.data()[0] == 1.0);
  CHECK(b.labels.data()[3] == 1.0);
  CHECK(std::equal(d[0].spec.values.begin(), d[0].spec.values.end(), b.inputs.data().begin()));
}

}  // TEST_SUITE
