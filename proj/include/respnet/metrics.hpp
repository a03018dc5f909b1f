// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace respnet {

enum class TaskId { T1_1, T1_2, T2_1, T2_2 };
enum class Level { Event, Record };

/// "1-1", "1-2", "2-1" or "2-2".
std::string to_string(TaskId task);
TaskId parse_task(std::string_view text);
std::string to_string(Level level);

inline constexpr const char* kEventLabels[] = {"N", "Rho", "W", "Str", "CC", "FC", "B"};
inline constexpr const char* kRecordLabels[] = {"N", "CAS", "DAS", "CD", "PQ"};

struct TaskSpec {
  TaskId id = TaskId::T1_1;
  Level level = Level::Event;
  std::vector<std::string> class_names;
  std::size_t normal_class = 0;

  /// Maps a raw label of the task's level, or one of the task's own class
  /// names, or a class name of the finer task at the same level.
  std::size_t map(std::string_view raw) const;
  std::size_t num_classes() const { return class_names.size(); }
};

TaskSpec task_spec(TaskId id);
std::vector<std::size_t> map_labels(std::span<const std::string> raw, const TaskSpec& task);

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;  // row = truth, column = prediction

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t c) : classes(c), counts(c * c, 0) {}
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts.at(truth * classes + pred); }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts.at(truth * classes + pred); }
  std::uint64_t total() const;
  std::uint64_t row_total(std::size_t truth) const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> pred, std::size_t classes);

struct SeSp {
  double se = 0.0;
  double sp = 0.0;
  bool se_degenerate = false;  // no non-Normal samples
  bool sp_degenerate = false;  // no Normal samples
};

/// SP is Normal recall; SE credits exact-class hits among all non-Normal rows.
SeSp se_sp(const ConfusionMatrix& cm, std::size_t normal_class);

struct Scores {
  double as = 0.0;
  double hs = 0.0;
  double score = 0.0;
};

Scores scores(double se, double sp);

struct ScoreReport {
  std::string task;
  std::vector<std::string> class_names;
  ConfusionMatrix confusion;
  double se = 0.0, sp = 0.0, as = 0.0, hs = 0.0, score = 0.0;
  std::vector<double> per_class_recall;
  std::vector<std::string> flags;
};

ScoreReport make_report(const TaskSpec& task, const ConfusionMatrix& cm);
/// Convenience: mapped truth and predicted class indices for `task`.
ScoreReport evaluate_predictions(const TaskSpec& task, std::span<const std::size_t> truth,
                                 std::span<const std::size_t> pred);

std::string report_to_json(const ScoreReport& report);
ScoreReport report_from_json(std::string_view text);
void write_report(const std::filesystem::path& path, const ScoreReport& report);
ScoreReport read_report(const std::filesystem::path& path);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct PredictionRow {
  std::string id;
  std::string truth;
  std::string prediction;
  std::vector<double> probabilities;
};

void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& class_names,
                           const std::vector<PredictionRow>& rows);
/// Reads id, truth and prediction columns; probability columns are optional.
std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path);

}  // namespace respnet
