// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "respnet/error.hpp"

namespace respnet {

std::vector<double> one_hot(std::size_t cls, std::size_t num_classes) {
  if (cls >= num_classes) throw InvalidInput("class index out of range");
  std::vector<double> v(num_classes, 0.0);
  v[cls] = 1.0;
  return v;
}

std::size_t hard_label(const LabeledSpectrogram& item) {
  if (item.label.empty()) throw InvalidInput("item '" + item.id + "' has an empty label");
  return static_cast<std::size_t>(std::max_element(item.label.begin(), item.label.end()) - item.label.begin());
}

void validate_label(std::span<const double> label) {
  double total = 0.0;
  for (double v : label) {
    if (!(v >= 0.0)) throw InvalidInput("label entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) throw InvalidInput("label does not sum to 1");
}

void AugmentConfig::validate() const {
  if (mixup && !(mixup_alpha > 0.0)) throw InvalidConfig("augment.mixup_alpha must be positive");
}

BalancedSampler::BalancedSampler(std::span<const std::size_t> class_of, std::size_t num_classes,
                                 std::size_t batch_size, std::uint64_t seed)
    : members_(num_classes), batch_size_(batch_size), rng_(seed) {
  if (num_classes == 0) throw InvalidConfig("balanced sampling needs at least one class");
  if (batch_size == 0 || batch_size % num_classes != 0) {
    throw InvalidConfig("batch size " + std::to_string(batch_size) + " is not divisible by the " +
                        std::to_string(num_classes) + " classes");
  }
  for (std::size_t i = 0; i < class_of.size(); ++i) {
    if (class_of[i] >= num_classes) throw InvalidConfig("sample class index out of range");
    members_[class_of[i]].push_back(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members_[c].empty()) throw InvalidConfig("class " + std::to_string(c) + " has no samples");
  }
}

std::vector<std::size_t> BalancedSampler::next_batch() {
  const std::size_t per_class = batch_size_ / members_.size();
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  for (const auto& members : members_) {
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t k = 0; k < per_class; ++k) batch.push_back(members[pick(rng_)]);
  }
  std::shuffle(batch.begin(), batch.end(), rng_);
  return batch;
}

Spectrogram crop_at(const Spectrogram& spec, std::size_t f_offset, std::size_t t_offset, std::size_t f,
                    std::size_t t) {
  if (f_offset + f > spec.freq_bins || t_offset + t > spec.time_frames) {
    throw InvalidInput("crop window exceeds the spectrogram");
  }
  Spectrogram out(f, t);
  for (std::size_t i = 0; i < f; ++i) {
    const float* src = spec.values.data() + (f_offset + i) * spec.time_frames + t_offset;
    std::copy(src, src + t, out.values.data() + i * t);
  }
  return out;
}

namespace {
void check_crop(const Spectrogram& spec, std::size_t crop_bins) {
  if (crop_bins >= spec.freq_bins || crop_bins >= spec.time_frames) {
    throw InvalidConfig("crop of " + std::to_string(crop_bins) + " bins does not fit a " +
                        std::to_string(spec.freq_bins) + "x" + std::to_string(spec.time_frames) + " spectrogram");
  }
}
}  // namespace

Spectrogram random_crop(const Spectrogram& spec, std::size_t crop_bins, std::mt19937_64& rng) {
  check_crop(spec, crop_bins);
  std::uniform_int_distribution<std::size_t> offset(0, crop_bins);
  const std::size_t df = offset(rng);
  const std::size_t dt = offset(rng);
  return crop_at(spec, df, dt, spec.freq_bins - crop_bins, spec.time_frames - crop_bins);
}

Spectrogram center_crop(const Spectrogram& spec, std::size_t crop_bins) {
  check_crop(spec, crop_bins);
  return crop_at(spec, crop_bins / 2, crop_bins / 2, spec.freq_bins - crop_bins, spec.time_frames - crop_bins);
}

Spectrogram center_crop_to(const Spectrogram& spec, std::size_t f, std::size_t t) {
  if (f > spec.freq_bins || t > spec.time_frames) {
    throw InvalidInput("spectrogram " + std::to_string(spec.freq_bins) + "x" + std::to_string(spec.time_frames) +
                       " is smaller than the model input " + std::to_string(f) + "x" + std::to_string(t));
  }
  return crop_at(spec, (spec.freq_bins - f) / 2, (spec.time_frames - t) / 2, f, t);
}

double sample_beta(double alpha, std::mt19937_64& rng) {
  if (!(alpha > 0.0)) throw InvalidConfig("Beta parameter must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double x = gamma(rng);
  const double y = gamma(rng);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

LabeledSpectrogram mixup_with(const LabeledSpectrogram& a, const LabeledSpectrogram& b, double lambda) {
  if (a.spec.freq_bins != b.spec.freq_bins || a.spec.time_frames != b.spec.time_frames) {
    throw InvalidInput("mixup needs spectrograms of identical dimensions");
  }
  if (a.label.size() != b.label.size()) throw InvalidInput("mixup needs labels of identical length");
  LabeledSpectrogram out;
  out.id = a.id;
  out.spec = Spectrogram(a.spec.freq_bins, a.spec.time_frames);
  const double mu = 1.0 - lambda;
  for (std::size_t i = 0; i < out.spec.values.size(); ++i) {
    out.spec.values[i] = static_cast<float>(lambda * a.spec.values[i] + mu * b.spec.values[i]);
  }
  out.label.resize(a.label.size());
  for (std::size_t i = 0; i < out.label.size(); ++i) out.label[i] = lambda * a.label[i] + mu * b.label[i];
  return out;
}

LabeledSpectrogram mixup(const LabeledSpectrogram& a, const LabeledSpectrogram& b, double alpha,
                         std::mt19937_64& rng) {
  return mixup_with(a, b, sample_beta(alpha, rng));
}

namespace {

Batch stack(std::span<const LabeledSpectrogram> items) {
  const std::size_t n = items.size();
  const std::size_t f = items[0].spec.freq_bins;
  const std::size_t t = items[0].spec.time_frames;
  const std::size_t c = items[0].label.size();
  Batch batch{Tensor(Shape{n, 1, f, t}), Tensor(Shape{n, c})};
  auto x = batch.inputs.data();
  auto y = batch.labels.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (items[i].spec.freq_bins != f || items[i].spec.time_frames != t || items[i].label.size() != c) {
      throw InvalidInput("batch items have inconsistent dimensions");
    }
    std::copy(items[i].spec.values.begin(), items[i].spec.values.end(), x.begin() + static_cast<std::ptrdiff_t>(i * f * t));
    std::copy(items[i].label.begin(), items[i].label.end(), y.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return batch;
}

}  // namespace

Batch make_batch(std::span<const LabeledSpectrogram> dataset, std::span<const std::size_t> indices,
                 const AugmentConfig& config, std::mt19937_64& rng) {
  config.validate();
  if (indices.empty()) throw InvalidInput("cannot build an empty batch");
  std::vector<LabeledSpectrogram> cropped;
  cropped.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= dataset.size()) throw InvalidInput("batch index " + std::to_string(idx) + " out of range");
    const LabeledSpectrogram& item = dataset[idx];
    LabeledSpectrogram c{item.id, config.crop_bins == 0 ? item.spec : random_crop(item.spec, config.crop_bins, rng),
                         item.label};
    cropped.push_back(std::move(c));
  }
  if (!config.mixup || cropped.size() < 2) return stack(cropped);

  std::vector<LabeledSpectrogram> mixed;
  mixed.reserve(cropped.size());
  std::uniform_int_distribution<std::size_t> other(0, cropped.size() - 2);
  for (std::size_t i = 0; i < cropped.size(); ++i) {
    std::size_t j = other(rng);
    if (j >= i) ++j;
    mixed.push_back(mixup(cropped[i], cropped[j], config.mixup_alpha, rng));
  }
  return stack(mixed);
}

Batch make_eval_batch(std::span<const LabeledSpectrogram> dataset, std::span<const std::size_t> indices,
                      std::size_t f, std::size_t t) {
  if (indices.empty()) throw InvalidInput("cannot build an empty batch");
  std::vector<LabeledSpectrogram> items;
  items.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= dataset.size()) throw InvalidInput("batch index " + std::to_string(idx) + " out of range");
    items.push_back({dataset[idx].id, center_crop_to(dataset[idx].spec, f, t), dataset[idx].label});
  }
  return stack(items);
}

}  // namespace respnet
