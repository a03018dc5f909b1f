// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "respnet/augment.hpp"
#include "respnet/metrics.hpp"
#include "respnet/model.hpp"
#include "respnet/tensor.hpp"

namespace respnet {

inline constexpr double kProbabilityFloor = 1e-8;

struct TrainConfig {
  std::size_t epochs = 100;
  /// 0 selects 4 samples per class.
  std::size_t batch_size = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2_lambda = 1e-4;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  /// Evaluations without a better validation Score before stopping; 0 disables.
  std::size_t patience = 20;

  void validate() const;
  std::size_t effective_batch_size(std::size_t num_classes) const;
};

/// Sum over rows of sum_c y log(y / max(p, floor)), with 0 log 0 = 0.
/// labels and predictions are N x C; negative labels are rejected.
Tensor kl_divergence(Graph& g, const Tensor& labels, const Tensor& predictions);
/// (lambda / 2) * sum of squared entries over `params`.
Tensor l2_penalty(Graph& g, std::span<const Tensor> params, double lambda);
/// KL divergence plus the L2 penalty.
Tensor kl_loss(Graph& g, const Tensor& labels, const Tensor& predictions, std::span<const Tensor> params,
               double lambda);

struct AdamSlot {
  std::string name;
  std::vector<double> m;
  std::vector<double> v;
};

struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<AdamSlot> slots;
};

class Adam {
 public:
  Adam(const Model& model, const TrainConfig& config);

  /// Applies one update from the current gradients of the model's trainable
  /// tensors, then rounds the model to storage precision.
  void step(Model& model);

  OptimizerState& state() { return state_; }
  const OptimizerState& state() const { return state_; }
  /// Replaces the state after checking names and sizes against the model.
  void load_state(const Model& model, OptimizerState state);

 private:
  double lr_, beta1_, beta2_, eps_;
  OptimizerState state_;
};

/// One forward, backward and update. Returns the pre-update loss.
/// Throws NumericError naming the first non-finite tensor.
double train_step(Model& model, Adam& optimizer, const Batch& batch, const TrainConfig& config,
                  std::mt19937_64& rng);

/// Eval-mode class probabilities, one row per item. Items are center-cropped
/// to the model input size.
std::vector<std::vector<double>> predict(Model& model, std::span<const LabeledSpectrogram> items,
                                         std::size_t batch_size = 16);

struct SplitMetrics {
  double loss = 0.0;  // mean per-sample KL divergence
  double accuracy = 0.0;
  double se = 0.0, sp = 0.0, as = 0.0, hs = 0.0, score = 0.0;
};

SplitMetrics evaluate_split(Model& model, std::span<const LabeledSpectrogram> items, const TaskSpec& task,
                            std::size_t batch_size = 16);

struct EvalPoint {
  std::size_t epoch = 0;
  SplitMetrics train;
  SplitMetrics validation;
};

struct FitOptions {
  /// Completed epochs already applied to the model (resume).
  std::size_t start_epoch = 0;
  /// Restore the best-Score parameters when training ends.
  bool restore_best = false;
  /// Called after each completed epoch with the number of completed epochs.
  std::function<void(std::size_t)> on_epoch_end;
  /// Called when an evaluation improves on the best validation Score.
  std::function<void(const EvalPoint&)> on_improvement;
  std::function<void(const std::string&)> log;
};

struct FitResult {
  std::vector<EvalPoint> history;
  /// Mean training objective per completed epoch.
  std::vector<double> epoch_losses;
  double best_score = -1.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_completed = 0;
  bool stopped_early = false;
};

FitResult fit(Model& model, Adam& optimizer, std::span<const LabeledSpectrogram> train_set,
              std::span<const LabeledSpectrogram> validation_set, const TaskSpec& task, const TrainConfig& config,
              const AugmentConfig& augment, const FitOptions& options = {});

void write_history_csv(const std::filesystem::path& path, const std::vector<EvalPoint>& history);

}  // namespace respnet
