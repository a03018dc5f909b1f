// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "respnet/checkpoint.hpp"
#include "respnet/dataset.hpp"
#include "respnet/error.hpp"
#include "respnet/io.hpp"

namespace respnet {

namespace fs = std::filesystem;

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  std::string s = text;
  const std::string times = "\xC3\x97";
  for (auto pos = s.find(times); pos != std::string::npos; pos = s.find(times)) s.replace(pos, times.size(), "x");
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw InvalidConfig("size '" + text + "' is not of the form FxT");
  try {
    std::size_t used_f = 0, used_t = 0;
    const std::string fs_ = s.substr(0, x), ts = s.substr(x + 1);
    const unsigned long f = std::stoul(fs_, &used_f);
    const unsigned long t = std::stoul(ts, &used_t);
    if (used_f != fs_.size() || used_t != ts.size() || f == 0 || t == 0) throw std::invalid_argument("size");
    return {f, t};
  } catch (const std::exception&) {
    throw InvalidConfig("size '" + text + "' is not of the form FxT");
  }
}

bool is_standard_size(Level level, std::size_t freq_bins, std::size_t time_frames) {
  if (level == Level::Event) return freq_bins == 128 && (time_frames == 128 || time_frames == 256 || time_frames == 512);
  return freq_bins == 140 && (time_frames == 256 || time_frames == 512 || time_frames == 1024);
}

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "seed", "task",
      "dsp.wavelet", "dsp.size", "dsp.event_seconds", "dsp.record_seconds", "dsp.sample_rate", "dsp.band_lo",
      "dsp.band_hi", "dsp.allow_custom_size",
      "augment.crop_bins", "augment.mixup_alpha", "augment.mixup", "augment.oversample",
      "train.batch_size", "train.epochs", "train.learning_rate", "train.l2_lambda", "train.eval_every",
      "train.patience",
      "model.input_freq", "model.input_time", "model.n_classes", "model.doub_inc_channels", "model.inc_res_channels",
      "model.incft_kernels", "model.inct_kernels", "model.rn_lambda", "model.attn_heads", "model.attn_key_dim",
      "model.fc_hidden", "model.dropout", "model.bn_momentum",
      "eval.split"};
  return keys;
}

}  // namespace

RunConfig RunConfig::from_config(const KeyValueConfig& kv) {
  kv.require_known(known_keys());
  RunConfig c;
  c.seed = kv.get_u64("seed", c.seed);
  if (kv.has("task")) c.task = parse_task(kv.get_string("task", ""));
  if (kv.has("dsp.wavelet")) c.wavelet = parse_wavelet_family(kv.get_string("dsp.wavelet", ""));
  if (kv.has("dsp.size")) c.size = parse_size(kv.get_string("dsp.size", ""));
  c.event_seconds = kv.get_double("dsp.event_seconds", c.event_seconds);
  c.record_seconds = kv.get_double("dsp.record_seconds", c.record_seconds);
  c.sample_rate = static_cast<std::uint32_t>(kv.get_u64("dsp.sample_rate", c.sample_rate));
  c.band_lo = kv.get_double("dsp.band_lo", c.band_lo);
  c.band_hi = kv.get_double("dsp.band_hi", c.band_hi);
  c.allow_custom_size = kv.get_bool("dsp.allow_custom_size", c.allow_custom_size);
  c.augment.crop_bins = kv.get_u64("augment.crop_bins", c.augment.crop_bins);
  c.augment.mixup_alpha = kv.get_double("augment.mixup_alpha", c.augment.mixup_alpha);
  c.augment.mixup = kv.get_bool("augment.mixup", c.augment.mixup);
  c.augment.oversample = kv.get_bool("augment.oversample", c.augment.oversample);
  c.train.batch_size = kv.get_u64("train.batch_size", c.train.batch_size);
  c.train.epochs = kv.get_u64("train.epochs", c.train.epochs);
  c.train.learning_rate = kv.get_double("train.learning_rate", c.train.learning_rate);
  c.train.l2_lambda = kv.get_double("train.l2_lambda", c.train.l2_lambda);
  c.train.eval_every = kv.get_u64("train.eval_every", c.train.eval_every);
  c.train.patience = kv.get_u64("train.patience", c.train.patience);
  c.model = ModelConfig::parse(kv.serialize());
  c.eval_split = kv.get_string("eval.split", c.eval_split);
  return c;
}

RunConfig RunConfig::load(const fs::path& path) { return from_config(KeyValueConfig::load(path)); }

std::string RunConfig::serialize() const {
  KeyValueConfig kv = KeyValueConfig::parse(model_config().serialize());
  kv.set("seed", std::to_string(seed));
  kv.set("task", to_string(task));
  kv.set("dsp.wavelet", std::string(to_string(wavelet)));
  const auto [f, t] = spectrogram_size();
  kv.set("dsp.size", std::to_string(f) + "x" + std::to_string(t));
  kv.set("dsp.event_seconds", format_double(event_seconds));
  kv.set("dsp.record_seconds", format_double(record_seconds));
  kv.set("dsp.sample_rate", std::to_string(sample_rate));
  kv.set("dsp.band_lo", format_double(band_lo));
  kv.set("dsp.band_hi", format_double(band_hi));
  kv.set("dsp.allow_custom_size", allow_custom_size ? "true" : "false");
  kv.set("augment.crop_bins", std::to_string(augment.crop_bins));
  kv.set("augment.mixup_alpha", format_double(augment.mixup_alpha));
  kv.set("augment.mixup", augment.mixup ? "true" : "false");
  kv.set("augment.oversample", augment.oversample ? "true" : "false");
  kv.set("train.batch_size", std::to_string(train.batch_size));
  kv.set("train.epochs", std::to_string(train.epochs));
  kv.set("train.learning_rate", format_double(train.learning_rate));
  kv.set("train.l2_lambda", format_double(train.l2_lambda));
  kv.set("train.eval_every", std::to_string(train.eval_every));
  kv.set("train.patience", std::to_string(train.patience));
  kv.set("eval.split", eval_split);
  return kv.serialize();
}

std::pair<std::size_t, std::size_t> RunConfig::spectrogram_size() const {
  if (size) return *size;
  return level() == Level::Event ? std::pair<std::size_t, std::size_t>{128, 512}
                                 : std::pair<std::size_t, std::size_t>{140, 1024};
}

FeatureConfig RunConfig::feature_config() const {
  FeatureConfig f;
  f.wavelet = WaveletSpec::defaults(wavelet);
  f.sample_rate = sample_rate;
  f.band_lo = band_lo;
  f.band_hi = band_hi;
  f.duration_seconds = level() == Level::Event ? event_seconds : record_seconds;
  std::tie(f.freq_bins, f.time_frames) = spectrogram_size();
  return f;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m = model;
  const auto [f, t] = spectrogram_size();
  if (augment.crop_bins >= f || augment.crop_bins >= t) {
    throw InvalidConfig("augment.crop_bins " + std::to_string(augment.crop_bins) + " does not fit the " +
                        std::to_string(f) + "x" + std::to_string(t) + " spectrogram");
  }
  m.input_freq = f - augment.crop_bins;
  m.input_time = t - augment.crop_bins;
  m.n_classes = task_spec(task).num_classes();
  return m;
}

void RunConfig::validate() const {
  const auto [f, t] = spectrogram_size();
  if (!allow_custom_size && !is_standard_size(level(), f, t)) {
    throw InvalidConfig("spectrogram size " + std::to_string(f) + "x" + std::to_string(t) + " is not a standard " +
                        to_string(level()) + " geometry; set dsp.allow_custom_size = true to override");
  }
  feature_config().validate();
  augment.validate();
  train.validate();
  model_config().validate();
  if (eval_split != "validation" && eval_split != "train" && eval_split != "all") {
    throw InvalidConfig("eval.split must be validation, train or all");
  }
}

void write_feature_index(const fs::path& path, const std::vector<FeatureEntry>& entries) {
  std::ostringstream out;
  out << "id,level,label,split,file\n";
  for (const FeatureEntry& e : entries) {
    out << e.id << "," << to_string(e.level) << "," << e.label << "," << e.split << "," << e.file << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<FeatureEntry> read_feature_index(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("feature index '" + path.string() + "' does not exist");
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "id,level,label,split,file") {
    throw FormatError(path.string() + ": expected header id,level,label,split,file");
  }
  std::vector<FeatureEntry> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 5 columns");
    FeatureEntry e;
    e.id = cells[0];
    if (cells[1] == "event") {
      e.level = Level::Event;
    } else if (cells[1] == "record") {
      e.level = Level::Record;
    } else {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown level '" + cells[1] + "'");
    }
    e.label = cells[2];
    e.split = cells[3];
    e.file = cells[4];
    out.push_back(std::move(e));
  }
  return out;
}

void write_pgm(const fs::path& path, const Spectrogram& spec) {
  if (spec.values.empty()) throw InvalidInput("cannot render an empty spectrogram");
  const auto [lo_it, hi_it] = std::minmax_element(spec.values.begin(), spec.values.end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  std::string out = "P5\n" + std::to_string(spec.time_frames) + " " + std::to_string(spec.freq_bins) + "\n255\n";
  for (float v : spec.values) {
    const double u = range > 0.0 ? (static_cast<double>(v) - lo) / range : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
  }
  write_file_atomic(path, out);
}

ExtractSummary run_extract(const RunConfig& config, const fs::path& manifest, const fs::path& out,
                           const Logger& log) {
  config.validate();
  const FeatureConfig features = config.feature_config();
  const Level level = config.level();
  const auto clips = load_clips(manifest, level);
  std::error_code ec;
  fs::create_directories(out / "spectrograms", ec);
  if (ec) throw DataError("cannot create '" + (out / "spectrograms").string() + "': " + ec.message());

  std::vector<FeatureEntry> index;
  for (const LabeledClip& c : clips) {
    const Spectrogram spec = extract_spectrogram(c.clip, features);
    const std::string rel = "spectrograms/" + c.id + ".lssg";
    write_spectrogram(out / rel, spec);
    index.push_back({c.id, level, c.label, to_string(c.split), rel});
  }
  ExtractSummary s;
  s.index = out / "features.csv";
  s.files = index.size();
  write_feature_index(s.index, index);
  if (log) {
    log("extracted " + std::to_string(s.files) + " " + to_string(level) + " spectrograms (" +
        std::to_string(features.freq_bins) + "x" + std::to_string(features.time_frames) + ")");
  }
  return s;
}

LoadedFeatures load_features(const fs::path& index, const TaskSpec& task) {
  const auto entries = read_feature_index(index);
  const fs::path dir = index.parent_path();
  LoadedFeatures out;
  for (const FeatureEntry& e : entries) {
    if (e.level != task.level) continue;
    LabeledSpectrogram item{e.id, read_spectrogram(dir / e.file), one_hot(task.map(e.label), task.num_classes())};
    if (e.split == "train") {
      out.train.push_back(std::move(item));
      out.train_labels.push_back(e.label);
    } else if (e.split == "validation") {
      out.validation.push_back(std::move(item));
      out.validation_labels.push_back(e.label);
    } else {
      throw FormatError(index.string() + ": unknown split '" + e.split + "' for '" + e.id + "'");
    }
  }
  if (out.train.empty() && out.validation.empty()) {
    throw DataError(index.string() + " has no " + to_string(task.level) + " features for task " + to_string(task.id));
  }
  return out;
}

TrainSummary run_train(const RunConfig& config, const fs::path& index, const fs::path& out,
                       const std::optional<fs::path>& resume, const Logger& log) {
  config.validate();
  const TaskSpec task = task_spec(config.task);
  const LoadedFeatures data = load_features(index, task);
  const auto [f, t] = config.spectrogram_size();
  for (const Dataset* set : {&data.train, &data.validation}) {
    for (const auto& item : *set) {
      if (item.spec.freq_bins != f || item.spec.time_frames != t) {
        throw DataError("cached spectrogram '" + item.id + "' is " + std::to_string(item.spec.freq_bins) + "x" +
                        std::to_string(item.spec.time_frames) + " but the configuration expects " +
                        std::to_string(f) + "x" + std::to_string(t));
      }
    }
  }

  TrainConfig train = config.train;
  train.seed = config.seed;
  Model model(config.model_config(), config.seed);
  Adam optimizer(model, train);
  const std::string text = config.serialize();
  FitOptions options;
  if (resume) {
    const Checkpoint ckpt = load_checkpoint(*resume);
    if (!(ModelConfig::parse(ckpt.config_text) == model.config())) {
      throw InvalidConfig("checkpoint '" + resume->string() + "' was trained with a different model configuration");
    }
    apply_checkpoint(ckpt, model);
    optimizer.load_state(model, ckpt.optimizer);
    options.start_epoch = ckpt.epoch;
    if (log) log("resuming from epoch " + std::to_string(ckpt.epoch));
  }

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create '" + out.string() + "': " + ec.message());
  TrainSummary s;
  s.best_checkpoint = out / "checkpoint.lsck";
  s.last_checkpoint = out / "last.lsck";
  s.history = out / "history.csv";
  options.on_epoch_end = [&](std::size_t epoch) {
    save_checkpoint(s.last_checkpoint,
                    make_checkpoint(model, optimizer.state(), text, config.seed, static_cast<std::uint32_t>(epoch)));
  };
  options.on_improvement = [&](const EvalPoint& p) {
    save_checkpoint(s.best_checkpoint,
                    make_checkpoint(model, optimizer.state(), text, config.seed, static_cast<std::uint32_t>(p.epoch)));
  };
  options.log = log;
  if (log) {
    log("training task " + to_string(task.id) + " on " + std::to_string(data.train.size()) + " samples, " +
        std::to_string(model.parameter_count()) + " parameters");
  }
  s.fit = fit(model, optimizer, data.train, data.validation, task, train, config.augment, options);
  if (!fs::exists(s.best_checkpoint)) {
    save_checkpoint(s.best_checkpoint, make_checkpoint(model, optimizer.state(), text, config.seed,
                                                       static_cast<std::uint32_t>(s.fit.epochs_completed)));
  }
  write_history_csv(s.history, s.fit.history);
  return s;
}

namespace {

bool evaluable(TaskId model_task, TaskId eval_task) {
  if (model_task == eval_task) return true;
  return (model_task == TaskId::T1_2 && eval_task == TaskId::T1_1) ||
         (model_task == TaskId::T2_2 && eval_task == TaskId::T2_1);
}

std::string task_file(TaskId task) {
  std::string s = to_string(task);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

}  // namespace

ScoreReport run_evaluate(const fs::path& checkpoint, const fs::path& index, TaskId task, const std::string& split,
                         const fs::path& out, const Logger& log) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const RunConfig config = RunConfig::from_config(KeyValueConfig::parse(ckpt.config_text, checkpoint.string()));
  if (!evaluable(config.task, task)) {
    throw InvalidConfig("checkpoint was trained for task " + to_string(config.task) + " and cannot be scored on task " +
                        to_string(task));
  }
  Model model(ModelConfig::parse(ckpt.config_text), ckpt.seed);
  apply_checkpoint(ckpt, model);

  const TaskSpec model_task = task_spec(config.task);
  const TaskSpec eval_task = task_spec(task);
  LoadedFeatures data = load_features(index, model_task);
  Dataset items;
  std::vector<std::string> raw;
  auto take = [&](Dataset& d, std::vector<std::string>& l) {
    items.insert(items.end(), d.begin(), d.end());
    raw.insert(raw.end(), l.begin(), l.end());
  };
  if (split == "train" || split == "all") take(data.train, data.train_labels);
  if (split == "validation" || split == "all") take(data.validation, data.validation_labels);
  if (split != "train" && split != "validation" && split != "all") {
    throw InvalidConfig("split must be train, validation or all");
  }
  if (items.empty()) throw DataError("no samples in split '" + split + "'");

  const auto probs = predict(model, items);
  std::vector<std::size_t> truth, pred;
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string& predicted = model_task.class_names[argmax(probs[i])];
    truth.push_back(eval_task.map(raw[i]));
    pred.push_back(eval_task.map(predicted));
    std::vector<double> p(eval_task.num_classes(), 0.0);
    for (std::size_t c = 0; c < probs[i].size(); ++c) p[eval_task.map(model_task.class_names[c])] += probs[i][c];
    rows.push_back({items[i].id, eval_task.class_names[truth.back()], eval_task.class_names[pred.back()], p});
  }
  const ScoreReport report = evaluate_predictions(eval_task, truth, pred);
  std::error_code ec;
  fs::create_directories(out, ec);
  write_report(out / ("report_" + task_file(task) + ".json"), report);
  write_predictions_csv(out / ("predictions_" + task_file(task) + ".csv"), eval_task.class_names, rows);
  if (log) {
    std::ostringstream msg;
    msg << "task " << to_string(task) << ": SE " << report.se << " SP " << report.sp << " Score " << report.score;
    log(msg.str());
  }
  return report;
}

ScoreReport run_evaluate_predictions(const fs::path& predictions, TaskId task, const fs::path& out) {
  const TaskSpec spec = task_spec(task);
  const auto rows = read_predictions_csv(predictions);
  std::vector<std::size_t> truth, pred;
  for (const PredictionRow& r : rows) {
    truth.push_back(spec.map(r.truth));
    pred.push_back(spec.map(r.prediction));
  }
  const ScoreReport report = evaluate_predictions(spec, truth, pred);
  std::error_code ec;
  fs::create_directories(out, ec);
  write_report(out / ("report_" + task_file(task) + ".json"), report);
  return report;
}

fs::path run_report(const fs::path& out, const std::optional<fs::path>& index, std::size_t max_images) {
  if (!fs::is_directory(out)) throw DataError("report directory '" + out.string() + "' does not exist");
  std::vector<fs::path> reports;
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("report_", 0) == 0 && entry.path().extension() == ".json") reports.push_back(entry.path());
  }
  std::sort(reports.begin(), reports.end());
  std::ostringstream text;
  text.setf(std::ios::fixed);
  text.precision(4);
  if (reports.empty()) text << "no score reports found\n";
  for (const fs::path& p : reports) {
    const ScoreReport r = read_report(p);
    text << "Task " << r.task << "  SE " << r.se << "  SP " << r.sp << "  AS " << r.as << "  HS " << r.hs
         << "  Score " << r.score << "\n";
    text << "  confusion (rows = truth):";
    for (const std::string& c : r.class_names) text << " " << c;
    text << "\n";
    for (std::size_t i = 0; i < r.confusion.classes; ++i) {
      text << "    " << r.class_names[i] << ":";
      for (std::size_t j = 0; j < r.confusion.classes; ++j) text << " " << r.confusion.at(i, j);
      text << "\n";
    }
    for (const std::string& flag : r.flags) text << "  note: " << flag << "\n";
  }
  const fs::path summary = out / "summary.txt";
  write_file_atomic(summary, text.str());

  if (index) {
    const auto entries = read_feature_index(*index);
    std::error_code ec;
    fs::create_directories(out / "images", ec);
    for (std::size_t i = 0; i < entries.size() && i < max_images; ++i) {
      write_pgm(out / "images" / (entries[i].id + ".pgm"), read_spectrogram(index->parent_path() / entries[i].file));
    }
  }
  return summary;
}

}  // namespace respnet
