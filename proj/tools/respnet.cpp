// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors
//
// respnet command-line driver: generate, extract, train, evaluate, report.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "respnet/dataset.hpp"
#include "respnet/error.hpp"
#include "respnet/io.hpp"
#include "respnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace respnet;

namespace {

void log_line(const std::string& msg) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%H:%M:%S", std::localtime(&now));
  std::cerr << "[" << stamp << "] " << msg << "\n";
}

struct CommonFlags {
  std::string config;
  std::string manifest;
  std::string wavelet;
  std::string size;
  std::string task;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Run configuration file (key = value)");
  cmd->add_option("--wavelet", f.wavelet, "Wavelet family")->check(CLI::IsMember({"amor", "bump", "morse"}));
  cmd->add_option("--size", f.size, "Spectrogram size FxT");
  cmd->add_option("--task", f.task, "Task")->check(CLI::IsMember({"1-1", "1-2", "2-1", "2-2"}));
  cmd->add_option("--seed", f.seed, "Random seed");
}

RunConfig resolve(const CommonFlags& f) {
  KeyValueConfig kv = f.config.empty() ? KeyValueConfig() : KeyValueConfig::load(f.config);
  if (!f.wavelet.empty()) kv.set("dsp.wavelet", f.wavelet);
  if (!f.size.empty()) kv.set("dsp.size", f.size);
  if (!f.task.empty()) kv.set("task", f.task);
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  RunConfig c = RunConfig::from_config(kv);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Respiratory sound classification with wavelet spectrograms"};
  app.require_subcommand(1);
  CommonFlags f;

  auto* gen = app.add_subcommand("generate", "Write the synthetic stand-in dataset");
  std::size_t per_class = 5;
  double record_seconds = 2.5;
  gen->add_option("--out", f.out, "Output directory")->required();
  gen->add_option("--seed", f.seed, "Random seed");
  gen->add_option("--per-class", per_class, "Recordings per event class");
  gen->add_option("--seconds", record_seconds, "Recording duration in seconds");

  auto* extract = app.add_subcommand("extract", "Compute and cache CWT spectrograms");
  add_common(extract, f);
  extract->add_option("--manifest", f.manifest, "Dataset manifest (JSON)")->required();
  extract->add_option("--out", f.out, "Feature cache directory")->required();

  auto* train = app.add_subcommand("train", "Train on cached spectrograms");
  add_common(train, f);
  train->add_option("--manifest", f.manifest, "Feature index (features.csv from extract)")->required();
  train->add_option("--out", f.out, "Run directory")->required();
  train->add_option("--checkpoint", f.checkpoint, "Resume from this checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint or a prediction file");
  std::string predictions, split;
  evaluate->add_option("--config", f.config, "Run configuration file (eval.split)");
  evaluate->add_option("--task", f.task, "Task")->check(CLI::IsMember({"1-1", "1-2", "2-1", "2-2"}))->required();
  evaluate->add_option("--manifest", f.manifest, "Feature index (features.csv from extract)");
  evaluate->add_option("--checkpoint", f.checkpoint, "Trained checkpoint");
  evaluate->add_option("--predictions", predictions, "Score this prediction CSV instead of a checkpoint");
  evaluate->add_option("--split", split, "train, validation or all");
  evaluate->add_option("--out", f.out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Summarize score reports and render spectrogram images");
  std::size_t max_images = 16;
  report->add_option("--out", f.out, "Directory holding report_*.json")->required();
  report->add_option("--manifest", f.manifest, "Feature index whose spectrograms to render");
  report->add_option("--max-images", max_images, "Maximum number of images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      SyntheticOptions opt;
      opt.seed = f.seed.value_or(1);
      opt.n_per_class = per_class;
      opt.record_seconds = record_seconds;
      const SyntheticResult r = generate_synthetic_dataset(f.out, opt);
      log_line("wrote " + std::to_string(r.recordings) + " recordings to " + r.manifest_path.string());
      if (r.separability >= 0.0) {
        log_line("nearest-centroid separability " + std::to_string(r.separability));
        if (r.separability < 0.9) throw DataError("synthetic classes are not separable (accuracy below 0.9)");
      }
    } else if (extract->parsed()) {
      run_extract(resolve(f), f.manifest, f.out, log_line);
    } else if (train->parsed()) {
      std::optional<fs::path> resume;
      if (!f.checkpoint.empty()) resume = fs::path(f.checkpoint);
      const TrainSummary s = run_train(resolve(f), f.manifest, f.out, resume, log_line);
      log_line("best validation Score " + std::to_string(s.fit.best_score) + " at epoch " +
               std::to_string(s.fit.best_epoch));
    } else if (evaluate->parsed()) {
      const TaskId task = parse_task(f.task);
      if (!predictions.empty()) {
        run_evaluate_predictions(predictions, task, f.out);
      } else {
        if (f.checkpoint.empty() || f.manifest.empty()) {
          throw UsageError("evaluate needs --checkpoint and --manifest, or --predictions");
        }
        std::string use_split = split;
        if (use_split.empty()) {
          use_split = f.config.empty() ? "validation" : RunConfig::load(f.config).eval_split;
        }
        run_evaluate(f.checkpoint, f.manifest, task, use_split, f.out, log_line);
      }
    } else if (report->parsed()) {
      std::optional<fs::path> index;
      if (!f.manifest.empty()) index = fs::path(f.manifest);
      const fs::path summary = run_report(f.out, index, max_images);
      std::cout << read_text_file(summary);
    }
  } catch (const std::exception& e) {
    std::cerr << "respnet: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
