// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "respnet/spectrogram.hpp"
#include "respnet/tensor.hpp"

namespace respnet {

/// A spectrogram with a soft label (probability vector over the task classes).
struct LabeledSpectrogram {
  std::string id;
  Spectrogram spec;
  std::vector<double> label;
};

using Dataset = std::vector<LabeledSpectrogram>;

std::vector<double> one_hot(std::size_t cls, std::size_t num_classes);
/// Index of the largest label entry (lowest index on ties).
std::size_t hard_label(const LabeledSpectrogram& item);
/// Throws InvalidInput unless the label is nonnegative and sums to 1 +- 1e-6.
void validate_label(std::span<const double> label);

struct AugmentConfig {
  std::size_t crop_bins = 10;
  double mixup_alpha = 0.4;
  bool mixup = true;
  bool oversample = true;

  void validate() const;
};

/// Infinite stream of class-balanced batches: each batch holds exactly
/// batch_size / C indices of every class, drawn uniformly with replacement
/// within the class, then shuffled.
class BalancedSampler {
 public:
  BalancedSampler(std::span<const std::size_t> class_of, std::size_t num_classes, std::size_t batch_size,
                  std::uint64_t seed);

  std::vector<std::size_t> next_batch();
  std::size_t batch_size() const { return batch_size_; }

 private:
  std::vector<std::vector<std::size_t>> members_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

/// Uniformly placed (F - crop) x (T - crop) window.
Spectrogram random_crop(const Spectrogram& spec, std::size_t crop_bins, std::mt19937_64& rng);
/// Window at offset (crop/2, crop/2); the deterministic evaluation transform.
Spectrogram center_crop(const Spectrogram& spec, std::size_t crop_bins);
/// Center window of exactly f x t.
Spectrogram center_crop_to(const Spectrogram& spec, std::size_t f, std::size_t t);
Spectrogram crop_at(const Spectrogram& spec, std::size_t f_offset, std::size_t t_offset, std::size_t f,
                    std::size_t t);

/// Beta(alpha, alpha) sample via two gamma draws.
double sample_beta(double alpha, std::mt19937_64& rng);
LabeledSpectrogram mixup_with(const LabeledSpectrogram& a, const LabeledSpectrogram& b, double lambda);
LabeledSpectrogram mixup(const LabeledSpectrogram& a, const LabeledSpectrogram& b, double alpha,
                         std::mt19937_64& rng);

struct Batch {
  Tensor inputs;  // N x 1 x F x T
  Tensor labels;  // N x C
};

/// Training transform: crop every indexed item at random, then (if enabled)
/// mix each with a uniformly drawn other member of the same batch.
Batch make_batch(std::span<const LabeledSpectrogram> dataset, std::span<const std::size_t> indices,
                 const AugmentConfig& config, std::mt19937_64& rng);
/// Evaluation transform: center crop to f x t, no mixing.
Batch make_eval_batch(std::span<const LabeledSpectrogram> dataset, std::span<const std::size_t> indices,
                      std::size_t f, std::size_t t);

}  // namespace respnet
