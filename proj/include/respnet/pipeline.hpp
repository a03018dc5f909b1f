// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "respnet/augment.hpp"
#include "respnet/config.hpp"
#include "respnet/metrics.hpp"
#include "respnet/model.hpp"
#include "respnet/spectrogram.hpp"
#include "respnet/train.hpp"

namespace respnet {

using Logger = std::function<void(const std::string&)>;

/// Parses "FxT" (also accepts "F×T").
std::pair<std::size_t, std::size_t> parse_size(const std::string& text);
/// True for 128x{128,256,512} events and 140x{256,512,1024} recordings.
bool is_standard_size(Level level, std::size_t freq_bins, std::size_t time_frames);

/// Every tunable of a run. Config file keys:
///   seed, task
///   dsp.wavelet, dsp.size, dsp.event_seconds, dsp.record_seconds, dsp.sample_rate,
///   dsp.band_lo, dsp.band_hi, dsp.allow_custom_size
///   augment.crop_bins, augment.mixup_alpha, augment.mixup, augment.oversample
///   train.batch_size, train.epochs, train.learning_rate, train.l2_lambda,
///   train.eval_every, train.patience
///   model.* (see ModelConfig), eval.split
struct RunConfig {
  std::uint64_t seed = 0;
  TaskId task = TaskId::T1_2;
  WaveletFamily wavelet = WaveletFamily::Morse;
  /// Unset selects 128x512 for events and 140x1024 for recordings.
  std::optional<std::pair<std::size_t, std::size_t>> size;
  double event_seconds = 10.0;
  double record_seconds = 30.0;
  std::uint32_t sample_rate = 4000;
  double band_lo = 60.0;
  double band_hi = 2000.0;
  bool allow_custom_size = false;
  AugmentConfig augment;
  TrainConfig train;
  /// input dims and n_classes are derived from the size, crop and task.
  ModelConfig model;
  std::string eval_split = "validation";

  static RunConfig from_config(const KeyValueConfig& kv);
  static RunConfig load(const std::filesystem::path& path);
  std::string serialize() const;
  void validate() const;

  Level level() const { return task_spec(task).level; }
  std::pair<std::size_t, std::size_t> spectrogram_size() const;
  FeatureConfig feature_config() const;
  ModelConfig model_config() const;
};

/// Row of the extraction index `features.csv`.
struct FeatureEntry {
  std::string id;
  Level level = Level::Event;
  std::string label;
  std::string split;
  std::string file;  // relative to the index directory
};

void write_feature_index(const std::filesystem::path& path, const std::vector<FeatureEntry>& entries);
std::vector<FeatureEntry> read_feature_index(const std::filesystem::path& path);

/// Linear min-max mapping to 8-bit gray, row 0 at the top.
void write_pgm(const std::filesystem::path& path, const Spectrogram& spec);

struct ExtractSummary {
  std::filesystem::path index;
  std::size_t files = 0;
};

/// Writes out/spectrograms/<id>.lssg for every event or recording (by task
/// level) and out/features.csv.
ExtractSummary run_extract(const RunConfig& config, const std::filesystem::path& manifest,
                           const std::filesystem::path& out, const Logger& log = {});

struct LoadedFeatures {
  Dataset train;
  Dataset validation;
  std::vector<std::string> train_labels;
  std::vector<std::string> validation_labels;
};

/// Reads cached spectrograms at the task's level with one-hot task labels.
LoadedFeatures load_features(const std::filesystem::path& index, const TaskSpec& task);

struct TrainSummary {
  FitResult fit;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path history;
};

/// Trains on the cached features and writes out/checkpoint.lsck (best
/// validation Score), out/last.lsck and out/history.csv. `resume` continues
/// from a last.lsck written by an earlier run with the same configuration.
TrainSummary run_train(const RunConfig& config, const std::filesystem::path& index, const std::filesystem::path& out,
                       const std::optional<std::filesystem::path>& resume = std::nullopt, const Logger& log = {});

/// Scores a checkpoint on the cached features for `task`, which must share
/// the checkpoint's level and be the same task or its coarser counterpart.
/// Writes out/report_<task>.json and out/predictions_<task>.csv.
ScoreReport run_evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& index, TaskId task,
                         const std::string& split, const std::filesystem::path& out, const Logger& log = {});

/// Scores a prediction CSV (id,truth,prediction,...) for `task`.
ScoreReport run_evaluate_predictions(const std::filesystem::path& predictions, TaskId task,
                                     const std::filesystem::path& out);

/// Writes out/summary.txt from out/report_*.json and, when `index` is given,
/// PGM images of up to `max_images` cached spectrograms into out/images/.
std::filesystem::path run_report(const std::filesystem::path& out, const std::optional<std::filesystem::path>& index,
                                 std::size_t max_images = 16);

}  // namespace respnet
