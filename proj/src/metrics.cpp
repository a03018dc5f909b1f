// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/metrics.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "respnet/error.hpp"
#include "respnet/io.hpp"

namespace respnet {

using nlohmann::json;

std::string to_string(TaskId task) {
  switch (task) {
    case TaskId::T1_1: return "1-1";
    case TaskId::T1_2: return "1-2";
    case TaskId::T2_1: return "2-1";
    case TaskId::T2_2: return "2-2";
  }
  return "?";
}

TaskId parse_task(std::string_view text) {
  if (text == "1-1") return TaskId::T1_1;
  if (text == "1-2") return TaskId::T1_2;
  if (text == "2-1") return TaskId::T2_1;
  if (text == "2-2") return TaskId::T2_2;
  throw InvalidConfig("unknown task '" + std::string(text) + "' (expected 1-1, 1-2, 2-1 or 2-2)");
}

std::string to_string(Level level) { return level == Level::Event ? "event" : "record"; }

TaskSpec task_spec(TaskId id) {
  TaskSpec t;
  t.id = id;
  switch (id) {
    case TaskId::T1_1:
      t.class_names = {"Normal", "Adventitious"};
      break;
    case TaskId::T1_2:
      t.class_names.assign(std::begin(kEventLabels), std::end(kEventLabels));
      break;
    case TaskId::T2_1:
      t.level = Level::Record;
      t.class_names = {"Normal", "Adventitious", "Poor Quality"};
      break;
    case TaskId::T2_2:
      t.level = Level::Record;
      t.class_names.assign(std::begin(kRecordLabels), std::end(kRecordLabels));
      break;
  }
  return t;
}

std::size_t TaskSpec::map(std::string_view raw) const {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == raw) return i;
  }
  if (id == TaskId::T1_1) {
    if (raw == "N") return 0;
    if (std::find(std::begin(kEventLabels), std::end(kEventLabels), raw) != std::end(kEventLabels)) return 1;
  } else if (id == TaskId::T2_1) {
    if (raw == "N") return 0;
    if (raw == "PQ") return 2;
    if (raw == "CAS" || raw == "DAS" || raw == "CD") return 1;
  }
  throw DataError("label '" + std::string(raw) + "' is not defined for task " + to_string(id));
}

std::vector<std::size_t> map_labels(std::span<const std::string> raw, const TaskSpec& task) {
  std::vector<std::size_t> out;
  out.reserve(raw.size());
  for (const std::string& r : raw) out.push_back(task.map(r));
  return out;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (std::uint64_t c : counts) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < classes; ++p) n += at(truth, p);
  return n;
}

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> pred, std::size_t classes) {
  if (truth.size() != pred.size()) {
    throw InvalidInput("confusion: " + std::to_string(truth.size()) + " labels but " + std::to_string(pred.size()) +
                       " predictions");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || pred[i] >= classes) throw InvalidInput("confusion: class index out of range");
    ++cm.at(truth[i], pred[i]);
  }
  return cm;
}

SeSp se_sp(const ConfusionMatrix& cm, std::size_t normal_class) {
  if (normal_class >= cm.classes) throw InvalidInput("normal class index out of range");
  SeSp r;
  const std::uint64_t normal_total = cm.row_total(normal_class);
  if (normal_total == 0) {
    r.sp_degenerate = true;
  } else {
    r.sp = static_cast<double>(cm.at(normal_class, normal_class)) / static_cast<double>(normal_total);
  }
  std::uint64_t hits = 0, total = 0;
  for (std::size_t c = 0; c < cm.classes; ++c) {
    if (c == normal_class) continue;
    hits += cm.at(c, c);
    total += cm.row_total(c);
  }
  if (total == 0) {
    r.se_degenerate = true;
  } else {
    r.se = static_cast<double>(hits) / static_cast<double>(total);
  }
  return r;
}

Scores scores(double se, double sp) {
  Scores s;
  s.as = (se + sp) / 2.0;
  s.hs = se + sp == 0.0 ? 0.0 : 2.0 * se * sp / (se + sp);
  s.score = (s.as + s.hs) / 2.0;
  return s;
}

ScoreReport make_report(const TaskSpec& task, const ConfusionMatrix& cm) {
  if (cm.classes != task.num_classes()) throw InvalidInput("confusion matrix size does not match the task");
  ScoreReport r;
  r.task = to_string(task.id);
  r.class_names = task.class_names;
  r.confusion = cm;
  const SeSp ss = se_sp(cm, task.normal_class);
  const Scores s = scores(ss.se, ss.sp);
  r.se = ss.se;
  r.sp = ss.sp;
  r.as = s.as;
  r.hs = s.hs;
  r.score = s.score;
  if (ss.se_degenerate) r.flags.push_back("SE: no non-Normal samples");
  if (ss.sp_degenerate) r.flags.push_back("SP: no Normal samples");
  for (std::size_t c = 0; c < cm.classes; ++c) {
    const std::uint64_t n = cm.row_total(c);
    r.per_class_recall.push_back(n == 0 ? 0.0 : static_cast<double>(cm.at(c, c)) / static_cast<double>(n));
  }
  return r;
}

ScoreReport evaluate_predictions(const TaskSpec& task, std::span<const std::size_t> truth,
                                 std::span<const std::size_t> pred) {
  return make_report(task, confusion(truth, pred, task.num_classes()));
}

std::string report_to_json(const ScoreReport& r) {
  json j;
  j["task"] = r.task;
  j["class_names"] = r.class_names;
  json rows = json::array();
  for (std::size_t t = 0; t < r.confusion.classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.classes; ++p) row.push_back(r.confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  j["SE"] = r.se;
  j["SP"] = r.sp;
  j["AS"] = r.as;
  j["HS"] = r.hs;
  j["Score"] = r.score;
  j["per_class_recall"] = r.per_class_recall;
  j["flags"] = r.flags;
  return j.dump(2) + "\n";
}

ScoreReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ScoreReport r;
    r.task = j.at("task").get<std::string>();
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto& rows = j.at("confusion");
    r.confusion = ConfusionMatrix(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != rows.size()) throw FormatError("score report confusion matrix is not square");
      for (std::size_t p = 0; p < rows.size(); ++p) r.confusion.at(t, p) = rows[t][p].get<std::uint64_t>();
    }
    r.se = j.at("SE").get<double>();
    r.sp = j.at("SP").get<double>();
    r.as = j.at("AS").get<double>();
    r.hs = j.at("HS").get<double>();
    r.score = j.at("Score").get<double>();
    r.per_class_recall = j.at("per_class_recall").get<std::vector<double>>();
    r.flags = j.at("flags").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed score report: ") + e.what());
  }
}

void write_report(const std::filesystem::path& path, const ScoreReport& report) {
  write_file_atomic(path, report_to_json(report));
}

ScoreReport read_report(const std::filesystem::path& path) { return report_from_json(read_text_file(path)); }

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& class_names,
                           const std::vector<PredictionRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "id,truth,prediction";
  for (const std::string& c : class_names) out << ",p_" << c;
  out << "\n";
  for (const PredictionRow& r : rows) {
    out << r.id << "," << r.truth << "," << r.prediction;
    for (double p : r.probabilities) out << "," << p;
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty predictions file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "truth" || header[2] != "prediction") {
    throw FormatError(path.string() + ": header must start with id,truth,prediction");
  }
  std::vector<PredictionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns");
    }
    PredictionRow r{cells[0], cells[1], cells[2], {}};
    for (std::size_t i = 3; i < cells.size(); ++i) {
      try {
        r.probabilities.push_back(std::stod(cells[i]));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad probability '" + cells[i] + "'");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace respnet
