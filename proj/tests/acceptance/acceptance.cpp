// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors
//
// Acceptance runner: one PASS/FAIL line per criterion. Exit status is
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grad_cases.hpp"
#include "oracles.hpp"
#include "respnet/augment.hpp"
#include "respnet/dataset.hpp"
#include "respnet/gradcheck.hpp"
#include "respnet/io.hpp"
#include "respnet/metrics.hpp"
#include "respnet/model.hpp"
#include "respnet/pipeline.hpp"
#include "respnet/train.hpp"
#include "respnet/wavelet.hpp"

using namespace respnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Env {
  fs::path cli;
  fs::path work;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome metric_arithmetic(const Env&) {
  const Scores a = scores(0.81, 0.91);
  const Scores b = scores(0.66, 0.59);
  // Reported values carry two decimals, so agreement is within half a unit.
  auto near = [](double v, double reported) { return std::abs(v - reported) <= 0.005 + 1e-12; };
  const bool ok = near(a.as, 0.86) && near(a.hs, 0.86) && near(a.score, 0.86) && near(b.as, 0.63) &&
                  near(b.hs, 0.62);
  return {ok, "AS/HS/Score " + fmt(a.as) + "/" + fmt(a.hs) + "/" + fmt(a.score) + ", AS/HS " + fmt(b.as) + "/" +
                  fmt(b.hs)};
}

Outcome cwt_oracle(const Env&) {
  constexpr std::uint32_t kRate = 4000;
  constexpr std::size_t kScales = 16;
  const WaveletFamily families[] = {WaveletFamily::Morse, WaveletFamily::Amor, WaveletFamily::Bump};
  std::map<std::pair<int, std::size_t>, std::vector<std::complex<double>>> kernels;
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> length(256, 1024);
  std::normal_distribution<double> noise(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    std::vector<double> x(length(rng));
    for (double& v : x) v = noise(rng);
    for (WaveletFamily family : families) {
      const WaveletSpec w = WaveletSpec::defaults(family);
      const ScaleGrid grid = make_scale_grid(w, kScales, kRate, 150.0, 1000.0);
      const CoefficientMatrix c = cwt(AudioClip{x, kRate}, w, grid);
      const CwtLayout layout = cwt_layout(x.size(), w.support_radius() * grid.scales.back());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        auto& kernel = kernels[{static_cast<int>(family), i}];
        if (kernel.empty()) {
          const auto half = static_cast<std::size_t>(1.5 * w.support_radius() * grid.scales[i]) + 8;
          kernel = oracle::wavelet_kernel(w, grid.scales[i], half);
        }
        const auto ref = oracle::direct_cwt_row(x, kernel, layout.reflect);
        worst = std::max(worst, oracle::max_relative_error(std::span(c.values).subspan(i * c.cols, c.cols), ref));
      }
    }
  }
  return {worst < 1e-6, "max relative error " + fmt(worst)};
}

Outcome gradient_suite(const Env&) {
  double worst = 0.0;
  std::string worst_name;
  auto run = [&](const testing::GradCase& c, std::uint64_t seed) {
    const double e = grad_check(c.fn, c.inputs, seed, c.options);
    if (e >= worst) {
      worst = e;
      worst_name = c.name;
    }
  };
  const auto prims = testing::primitive_grad_cases(101);
  for (const auto& c : prims) run(c, 7);
  run(testing::kl_softmax_case(102), 8);
  run(testing::tiny_model_case(103), 9);
  return {worst < 1e-4, std::to_string(prims.size() + 2) + " cases, worst " + fmt(worst) + " (" + worst_name + ")"};
}

Outcome shape_schedule(const Env&) {
  const std::pair<TaskId, std::pair<std::size_t, std::size_t>> cases[] = {
      {TaskId::T1_2, {128, 512}}, {TaskId::T2_2, {140, 1024}}};
  std::string detail;
  bool ok = true;
  for (const auto& [task, size] : cases) {
    KeyValueConfig kv;
    kv.set("task", to_string(task));
    kv.set("dsp.size", std::to_string(size.first) + "x" + std::to_string(size.second));
    const RunConfig run = RunConfig::from_config(kv);
    const ModelConfig mc = run.model_config();
    Model model(mc, 1);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> d(-40.0, 10.0);
    const std::size_t batch = 2;
    Tensor x({batch, 1, mc.input_freq, mc.input_time});
    for (std::size_t n = 0; n < batch; ++n) {
      Spectrogram s(size.first, size.second);
      for (float& v : s.values) v = static_cast<float>(d(rng));
      const Spectrogram c = center_crop(s, run.augment.crop_bins);
      std::copy(c.values.begin(), c.values.end(), x.data().begin() + n * c.values.size());
    }
    std::vector<std::pair<std::string, Shape>> trace;
    Graph g(false);
    ForwardContext ctx;
    ctx.trace = &trace;
    const Tensor y = model.forward(g, x, ctx);
    const bool dims_ok = trace == oracle::shape_schedule(mc, batch);
    double simplex = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      double sum = 0.0;
      for (std::size_t k = 0; k < mc.n_classes; ++k) {
        const double p = y.data()[n * mc.n_classes + k];
        if (p < 0.0) simplex = std::max(simplex, -p);
        sum += p;
      }
      simplex = std::max(simplex, std::abs(sum - 1.0));
    }
    ok = ok && dims_ok && simplex <= 1e-6;
    if (!detail.empty()) detail += "; ";
    detail += std::to_string(mc.input_freq) + "x" + std::to_string(mc.input_time) + " -> " +
              shape_string(trace.at(trace.size() - 5).second) + (dims_ok ? "" : " (schedule mismatch)") +
              ", simplex error " + fmt(simplex);
  }
  return {ok, detail};
}

Outcome augmentation_suite(const Env&) {
  std::vector<std::string> failures;
  // Oversampling: every batch holds exactly batch/C samples per class.
  const std::vector<std::size_t> class_of{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 2, 3, 3, 3, 4, 5, 5, 6};
  BalancedSampler sampler(class_of, 7, 28, 11);
  for (int b = 0; b < 200; ++b) {
    std::vector<int> counts(7, 0);
    for (std::size_t i : sampler.next_batch()) ++counts.at(class_of.at(i));
    if (std::any_of(counts.begin(), counts.end(), [](int c) { return c != 4; })) {
      failures.push_back("unbalanced batch");
      break;
    }
  }
  // Crops: locate each crop in the source by exhaustive search.
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Spectrogram src(40, 60);
  for (float& v : src.values) v = u(rng);
  for (int trial = 0; trial < 100; ++trial) {
    const Spectrogram c = random_crop(src, 10, rng);
    bool found = false;
    for (std::size_t f0 = 0; f0 + c.freq_bins <= src.freq_bins && !found; ++f0)
      for (std::size_t t0 = 0; t0 + c.time_frames <= src.time_frames && !found; ++t0) {
        bool same = true;
        for (std::size_t f = 0; f < c.freq_bins && same; ++f)
          for (std::size_t t = 0; t < c.time_frames && same; ++t) same = c.at(f, t) == src.at(f0 + f, t0 + t);
        found = same;
      }
    if (c.freq_bins != 30 || c.time_frames != 50 || !found) {
      failures.push_back("crop is not a sub-window");
      break;
    }
  }
  // Mixup labels stay on the simplex.
  Dataset data;
  for (std::size_t i = 0; i < 14; ++i) {
    Spectrogram s(12, 12);
    for (float& v : s.values) v = u(rng);
    data.push_back({"x" + std::to_string(i), s, one_hot(i % 7, 7)});
  }
  AugmentConfig cfg;
  cfg.crop_bins = 2;
  std::vector<std::size_t> idx(14);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double simplex = 0.0;
  for (int b = 0; b < 50; ++b) {
    const Batch batch = make_batch(data, idx, cfg, rng);
    for (std::size_t n = 0; n < 14; ++n) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 7; ++k) {
        const double v = batch.labels.data()[n * 7 + k];
        if (v < 0.0) simplex = std::max(simplex, -v);
        sum += v;
      }
      simplex = std::max(simplex, std::abs(sum - 1.0));
    }
  }
  if (simplex > 1e-12) failures.push_back("mixup label off the simplex");
  // Beta(0.4, 0.4) mean.
  std::mt19937_64 beta_rng(13);
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) mean += sample_beta(0.4, beta_rng) / 10000.0;
  if (std::abs(mean - 0.5) > 0.02) failures.push_back("lambda mean " + fmt(mean));
  std::string detail = failures.empty() ? "" : failures.front() + "; ";
  detail += "lambda mean " + fmt(mean) + ", label simplex error " + fmt(simplex);
  return {failures.empty(), detail};
}

// Reduced event-level run configuration shared by the learning and smoke checks.
std::string reduced_event_config(std::size_t epochs) {
  return "seed = 7\n"
         "task = 1-2\n"
         "dsp.size = 128x128\n"
         "dsp.event_seconds = 1.5\n"
         "dsp.record_seconds = 2.5\n"
         "train.epochs = " + std::to_string(epochs) + "\n"
         "train.learning_rate = 0.001\n"
         "model.doub_inc_channels = 8\n"
         "model.inc_res_channels = 8,16\n"
         "model.attn_heads = 2\n"
         "model.attn_key_dim = 8\n"
         "model.fc_hidden = 32\n";
}

Outcome learning_capability(const Env& env) {
  const fs::path dir = env.work / "learning";
  fs::remove_all(dir);
  SyntheticOptions opt;
  opt.seed = 1;
  opt.n_per_class = 11;
  const SyntheticResult data = generate_synthetic_dataset(dir / "data", opt);

  KeyValueConfig kv = KeyValueConfig::parse(reduced_event_config(200));
  kv.set("train.batch_size", "14");
  kv.set("augment.mixup", "false");
  kv.set("train.patience", "0");
  RunConfig run = RunConfig::from_config(kv);
  run.validate();
  const ExtractSummary ex = run_extract(run, data.manifest_path, dir / "features");
  const TaskSpec task = task_spec(run.task);
  LoadedFeatures features = load_features(ex.index, task);
  if (features.train.size() < 60) return {false, "only " + std::to_string(features.train.size()) + " training samples"};
  features.train.resize(60);

  Model model(run.model_config(), run.seed);
  TrainConfig tc = run.train;
  tc.seed = run.seed;
  Adam adam(model, tc);
  const FitResult r = fit(model, adam, features.train, features.validation, task, tc, run.augment);
  double best_acc = 0.0;
  std::size_t reached = 0;
  for (const EvalPoint& p : r.history) {
    if (p.train.accuracy >= 0.95 && reached == 0) reached = p.epoch;
    best_acc = std::max(best_acc, p.train.accuracy);
  }
  const double base = r.history.front().validation.score;
  const bool ok = reached > 0 && reached <= 200 && r.best_score > base;
  std::string detail = "train accuracy " + fmt(best_acc);
  detail += reached > 0 ? " (>= 0.95 at epoch " + std::to_string(reached) + ")" : " (never >= 0.95)";
  detail += ", validation Score " + fmt(base) + " -> " + fmt(r.best_score);
  return {ok, detail};
}

int run_cli(const Env& env, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + env.cli.string() + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status;
}

struct SmokeRun {
  bool ok = false;
  std::string error;
  fs::path dir;
};

SmokeRun smoke_run(const Env& env, const std::string& name) {
  SmokeRun r;
  r.dir = env.work / name;
  fs::remove_all(r.dir);
  fs::create_directories(r.dir);
  const fs::path log = r.dir / "log.txt";
  const std::string record_cfg = [] {
    std::string s = reduced_event_config(2);
    s.replace(s.find("task = 1-2"), 10, "task = 2-2");
    s.replace(s.find("dsp.size = 128x128"), 18, "dsp.size = 140x256");
    return s;
  }();
  write_file_atomic(r.dir / "event.cfg", std::string_view(reduced_event_config(2)));
  write_file_atomic(r.dir / "record.cfg", std::string_view(record_cfg));
  const std::string d = "\"" + r.dir.string() + "\"";
  const std::vector<std::string> steps = {
      "generate --out " + d + "/data --seed 1",
      "extract --config " + d + "/event.cfg --manifest " + d + "/data/manifest.json --out " + d + "/ev",
      "extract --config " + d + "/record.cfg --manifest " + d + "/data/manifest.json --out " + d + "/rec",
      "train --config " + d + "/event.cfg --manifest " + d + "/ev/features.csv --out " + d + "/ev_run",
      "train --config " + d + "/record.cfg --manifest " + d + "/rec/features.csv --out " + d + "/rec_run",
      "evaluate --task 1-1 --checkpoint " + d + "/ev_run/checkpoint.lsck --manifest " + d +
          "/ev/features.csv --out " + d + "/reports",
      "evaluate --task 1-2 --checkpoint " + d + "/ev_run/checkpoint.lsck --manifest " + d +
          "/ev/features.csv --out " + d + "/reports",
      "evaluate --task 2-1 --checkpoint " + d + "/rec_run/checkpoint.lsck --manifest " + d +
          "/rec/features.csv --out " + d + "/reports",
      "evaluate --task 2-2 --checkpoint " + d + "/rec_run/checkpoint.lsck --manifest " + d +
          "/rec/features.csv --out " + d + "/reports",
  };
  for (const std::string& step : steps) {
    if (run_cli(env, step, log) != 0) {
      r.error = "'" + step.substr(0, step.find(' ')) + "' failed (see " + log.string() + ")";
      return r;
    }
  }
  r.ok = true;
  return r;
}

const char* kTasks[] = {"1_1", "1_2", "2_1", "2_2"};

std::string check_report(const ScoreReport& rep) {
  const double values[] = {rep.se, rep.sp, rep.as, rep.hs, rep.score};
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) return "metric outside [0,1]";
  }
  // Recompute SE and SP from the confusion matrix.
  const std::size_t c = rep.confusion.classes;
  double normal_total = 0.0, adv_total = 0.0, adv_hits = 0.0;
  for (std::size_t t = 0; t < c; ++t) {
    double row = 0.0;
    for (std::size_t p = 0; p < c; ++p) row += static_cast<double>(rep.confusion.at(t, p));
    if (t == 0) {
      normal_total = row;
    } else {
      adv_total += row;
      adv_hits += static_cast<double>(rep.confusion.at(t, t));
    }
  }
  const double se = adv_total > 0 ? adv_hits / adv_total : 0.0;
  const double sp = normal_total > 0 ? static_cast<double>(rep.confusion.at(0, 0)) / normal_total : 0.0;
  const double as = (se + sp) / 2.0;
  const double hs = se + sp > 0.0 ? 2.0 * se * sp / (se + sp) : 0.0;
  const double score = (as + hs) / 2.0;
  if (std::abs(rep.se - se) > 1e-9 || std::abs(rep.sp - sp) > 1e-9) return "SE/SP disagree with confusion";
  if (std::abs(rep.as - as) > 1e-9 || std::abs(rep.hs - hs) > 1e-9 || std::abs(rep.score - score) > 1e-9) {
    return "AS/HS/Score inconsistent";
  }
  return "";
}

Outcome end_to_end_smoke(const Env& env) {
  const SmokeRun run = smoke_run(env, "smoke_a");
  if (!run.ok) return {false, run.error};
  std::string scores_text;
  for (const char* t : kTasks) {
    const fs::path p = run.dir / "reports" / ("report_" + std::string(t) + ".json");
    if (!fs::exists(p)) return {false, "missing " + p.filename().string()};
    const ScoreReport rep = read_report(p);
    const std::string problem = check_report(rep);
    if (!problem.empty()) return {false, p.filename().string() + ": " + problem};
    scores_text += (scores_text.empty() ? "" : " ") + rep.task + "=" + fmt(rep.score);
  }
  return {true, "4 reports, Score " + scores_text};
}

Outcome determinism(const Env& env) {
  fs::path first = env.work / "smoke_a";
  if (!fs::exists(first / "reports" / "report_2_2.json")) {
    const SmokeRun a = smoke_run(env, "smoke_a");
    if (!a.ok) return {false, a.error};
  }
  const SmokeRun b = smoke_run(env, "smoke_b");
  if (!b.ok) return {false, b.error};
  std::vector<fs::path> files;
  for (const char* run : {"ev_run", "rec_run"})
    for (const char* f : {"checkpoint.lsck", "last.lsck", "history.csv"}) files.push_back(fs::path(run) / f);
  for (const char* t : kTasks) {
    files.push_back(fs::path("reports") / ("report_" + std::string(t) + ".json"));
    files.push_back(fs::path("reports") / ("predictions_" + std::string(t) + ".csv"));
  }
  for (const fs::path& f : files) {
    if (!fs::exists(first / f) || !fs::exists(b.dir / f)) return {false, "missing " + f.string()};
    if (read_file(first / f) != read_file(b.dir / f)) return {false, f.string() + " differs"};
  }
  return {true, std::to_string(files.size()) + " artifacts byte-identical"};
}

Outcome kl_loss_checks(const Env&) {
  Graph g;
  const Tensor y({2, 3}, std::vector<double>{0.2, 0.3, 0.5, 1.0, 0.0, 0.0});
  const double same = kl_loss(g, y, y.clone(), {}, 0.0).item();
  const Tensor a({1, 2}, std::vector<double>{1.0, 0.0});
  const Tensor b({1, 2}, std::vector<double>{0.5, 0.5});
  const double ln2 = kl_loss(g, a, b, {}, 0.0).item();

  Tensor theta1({2, 3}, std::vector<double>{0.5, -1.5, 2.25, 0.125, -0.75, 3.0}, true);
  Tensor theta2({4}, std::vector<double>{-0.3, 0.7, 1.1, -2.0}, true);
  const std::vector<Tensor> params{theta1, theta2};
  const double lambda = 1e-4;
  Graph g2;
  const Tensor probs({1, 2}, std::vector<double>{0.25, 0.75});
  const Tensor loss = kl_loss(g2, a, probs, params, lambda);
  g2.backward(loss);
  bool exact = true;
  for (const Tensor& p : params)
    for (std::size_t i = 0; i < p.size(); ++i) exact = exact && p.grad()[i] == lambda * p.data()[i];
  const bool ok = std::abs(same) <= 1e-12 && std::abs(ln2 - std::numbers::ln2) <= 1e-9 && exact;
  return {ok, "identical " + fmt(same) + ", ln2 case " + fmt(ln2) + ", L2 gradient " +
                  (exact ? "exact" : "inexact")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"respnet acceptance checks"};
  Env env;
  std::vector<int> only;
  app.add_option("--cli", env.cli, "Path to the respnet executable")->required();
  app.add_option("--work", env.work, "Scratch directory")->required();
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(env.work);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome(const Env&)> fn;
    double budget_seconds;
  };
  const std::vector<Criterion> criteria = {
      {1, "metric arithmetic", metric_arithmetic, 1.0},
      {2, "CWT vs direct convolution", cwt_oracle, 30.0},
      {3, "gradient suite", gradient_suite, 120.0},
      {4, "shape schedule", shape_schedule, 30.0},
      {5, "augmentation suite", augmentation_suite, 30.0},
      {6, "learning capability", learning_capability, 600.0},
      {7, "end-to-end smoke", end_to_end_smoke, 300.0},
      {8, "determinism", determinism, 600.0},
      {9, "KL loss", kl_loss_checks, 1.0},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn(env);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %d: %s  %s: %s [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
