// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "respnet/checkpoint.hpp"
#include "respnet/config.hpp"
#include "respnet/dataset.hpp"
#include "respnet/error.hpp"
#include "respnet/metrics.hpp"
#include "respnet/model.hpp"
#include "respnet/pipeline.hpp"
#include "respnet/spectrogram.hpp"
#include "respnet/train.hpp"
#include "respnet/wav.hpp"
#include "respnet/wavelet.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace respnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

AudioClip to_clip(const DoubleArray& samples, std::uint32_t rate) {
  if (samples.ndim() != 1) throw InvalidInput("samples must be a 1-D array");
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.assign(samples.data(), samples.data() + samples.size());
  return clip;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(py::array::ShapeContainer{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

RunConfig make_config(const std::optional<fs::path>& path, const std::map<std::string, std::string>& overrides) {
  KeyValueConfig kv = path ? KeyValueConfig::load(*path) : KeyValueConfig();
  for (const auto& [k, v] : overrides) kv.set(k, v);
  RunConfig c = RunConfig::from_config(kv);
  c.validate();
  return c;
}

py::dict report_dict(const ScoreReport& r) {
  py::dict d;
  d["task"] = r.task;
  d["class_names"] = r.class_names;
  const std::size_t c = r.confusion.classes;
  py::array_t<std::uint64_t> cm({c, c});
  std::copy(r.confusion.counts.begin(), r.confusion.counts.end(), cm.mutable_data());
  d["confusion"] = cm;
  d["se"] = r.se;
  d["sp"] = r.sp;
  d["as"] = r.as;
  d["hs"] = r.hs;
  d["score"] = r.score;
  d["per_class_recall"] = r.per_class_recall;
  d["flags"] = r.flags;
  return d;
}

// Trained network plus the task it predicts.
class Classifier {
 public:
  Classifier(const ModelConfig& config, std::uint64_t seed, TaskId task)
      : model_(std::make_unique<Model>(config, seed)), task_(task_spec(task)) {}

  static Classifier from_checkpoint(const fs::path& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    const RunConfig run = RunConfig::from_config(KeyValueConfig::parse(ckpt.config_text, path.string()));
    Classifier c(ModelConfig::parse(ckpt.config_text), ckpt.seed, run.task);
    apply_checkpoint(ckpt, *c.model_);
    return c;
  }

  py::array_t<double> predict(const FloatArray& batch) const {
    if (batch.ndim() != 3) throw InvalidInput("batch must have shape (N, F, T)");
    const auto n = static_cast<std::size_t>(batch.shape(0));
    const auto f = static_cast<std::size_t>(batch.shape(1));
    const auto t = static_cast<std::size_t>(batch.shape(2));
    Dataset items(n);
    for (std::size_t i = 0; i < n; ++i) {
      items[i].spec = Spectrogram(f, t);
      std::copy_n(batch.data() + i * f * t, f * t, items[i].spec.values.begin());
    }
    std::vector<std::vector<double>> probs;
    {
      py::gil_scoped_release release;
      probs = respnet::predict(*model_, items);
    }
    const std::size_t c = task_.num_classes();
    py::array_t<double> out({n, c});
    for (std::size_t i = 0; i < n; ++i) std::copy(probs[i].begin(), probs[i].end(), out.mutable_data() + i * c);
    return out;
  }

  const std::vector<std::string>& class_names() const { return task_.class_names; }
  std::string task() const { return to_string(task_.id); }
  std::size_t parameter_count() const { return model_->parameter_count(); }
  std::pair<std::size_t, std::size_t> input_size() const {
    return {model_->config().input_freq, model_->config().input_time};
  }

 private:
  std::shared_ptr<Model> model_;
  TaskSpec task_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wavelet spectrograms and the respiratory sound classifier";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<InvalidConfig>(m, "InvalidConfig", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.def(
      "scale_grid",
      [](const std::string& wavelet, std::size_t bins, std::uint32_t sample_rate, double f_lo, double f_hi) {
        const ScaleGrid g = make_scale_grid(WaveletSpec::defaults(parse_wavelet_family(wavelet)), bins,
                                            sample_rate, f_lo, f_hi);
        return py::make_tuple(to_array(g.scales), to_array(g.center_freqs));
      },
      py::arg("wavelet"), py::arg("bins"), py::arg("sample_rate"), py::arg("f_lo") = 60.0,
      py::arg("f_hi") = 2000.0, "Scales and center frequencies (Hz), highest frequency first.");

  m.def(
      "cwt",
      [](const DoubleArray& samples, std::uint32_t sample_rate, const std::string& wavelet, std::size_t bins,
         double f_lo, double f_hi) {
        const WaveletSpec w = WaveletSpec::defaults(parse_wavelet_family(wavelet));
        const AudioClip clip = to_clip(samples, sample_rate);
        CoefficientMatrix c;
        {
          py::gil_scoped_release release;
          c = respnet::cwt(clip, w, make_scale_grid(w, bins, sample_rate, f_lo, f_hi));
        }
        py::array_t<std::complex<double>> out({c.rows, c.cols});
        std::copy(c.values.begin(), c.values.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("wavelet") = "morse", py::arg("bins") = 128,
      py::arg("f_lo") = 60.0, py::arg("f_hi") = 2000.0, "Complex CWT coefficients, shape (bins, len(samples)).");

  m.def(
      "spectrogram",
      [](const DoubleArray& samples, std::uint32_t sample_rate, const std::string& wavelet, std::size_t freq_bins,
         std::size_t time_frames, double duration_seconds, std::uint32_t target_rate, double band_lo,
         double band_hi) {
        FeatureConfig fc;
        fc.wavelet = WaveletSpec::defaults(parse_wavelet_family(wavelet));
        fc.freq_bins = freq_bins;
        fc.time_frames = time_frames;
        fc.duration_seconds = duration_seconds;
        fc.sample_rate = target_rate;
        fc.band_lo = band_lo;
        fc.band_hi = band_hi;
        const AudioClip clip = to_clip(samples, sample_rate);
        Spectrogram s;
        {
          py::gil_scoped_release release;
          s = extract_spectrogram(clip, fc);
        }
        py::array_t<float> out({s.freq_bins, s.time_frames});
        std::copy(s.values.begin(), s.values.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("wavelet") = "morse", py::arg("freq_bins") = 128,
      py::arg("time_frames") = 512, py::arg("duration_seconds") = 10.0, py::arg("target_rate") = 4000,
      py::arg("band_lo") = 60.0, py::arg("band_hi") = 2000.0,
      "Log-magnitude wavelet spectrogram in dB, shape (freq_bins, time_frames).");

  m.def(
      "read_wav",
      [](const fs::path& path) {
        const AudioClip clip = load_wav(path);
        return py::make_tuple(to_array(clip.samples), clip.sample_rate);
      },
      py::arg("path"), "Returns (samples, sample_rate).");

  m.def(
      "scores",
      [](double se, double sp) {
        const Scores s = respnet::scores(se, sp);
        py::dict d;
        d["as"] = s.as;
        d["hs"] = s.hs;
        d["score"] = s.score;
        return d;
      },
      py::arg("se"), py::arg("sp"));

  m.def(
      "evaluate_labels",
      [](const std::string& task, const std::vector<std::string>& truth, const std::vector<std::string>& predicted) {
        if (truth.size() != predicted.size()) throw InvalidInput("truth and predictions differ in length");
        const TaskSpec spec = task_spec(parse_task(task));
        return report_dict(evaluate_predictions(spec, map_labels(truth, spec), map_labels(predicted, spec)));
      },
      py::arg("task"), py::arg("truth"), py::arg("predicted"),
      "Score raw or class-name labels for a task; returns the report as a dict.");

  m.def(
      "generate_synthetic",
      [](const fs::path& out, std::uint64_t seed, std::size_t per_class, double record_seconds) {
        SyntheticOptions opt;
        opt.seed = seed;
        opt.n_per_class = per_class;
        opt.record_seconds = record_seconds;
        py::gil_scoped_release release;
        return generate_synthetic_dataset(out, opt).manifest_path;
      },
      py::arg("out"), py::arg("seed") = 1, py::arg("per_class") = 5, py::arg("record_seconds") = 2.5,
      "Writes the synthetic corpus and returns the manifest path.");

  m.def(
      "extract",
      [](const fs::path& manifest, const fs::path& out, const std::optional<fs::path>& config,
         const std::map<std::string, std::string>& overrides) {
        const RunConfig c = make_config(config, overrides);
        py::gil_scoped_release release;
        return run_extract(c, manifest, out).index;
      },
      py::arg("manifest"), py::arg("out"), py::arg("config") = std::nullopt,
      py::arg("overrides") = std::map<std::string, std::string>{}, "Returns the feature index path.");

  m.def(
      "train",
      [](const fs::path& index, const fs::path& out, const std::optional<fs::path>& config,
         const std::map<std::string, std::string>& overrides) {
        const RunConfig c = make_config(config, overrides);
        TrainSummary s;
        {
          py::gil_scoped_release release;
          s = run_train(c, index, out);
        }
        py::dict d;
        d["best_score"] = s.fit.best_score;
        d["best_epoch"] = s.fit.best_epoch;
        d["epochs_completed"] = s.fit.epochs_completed;
        d["checkpoint"] = s.best_checkpoint;
        d["last_checkpoint"] = s.last_checkpoint;
        d["history"] = s.history;
        return d;
      },
      py::arg("index"), py::arg("out"), py::arg("config") = std::nullopt,
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "evaluate",
      [](const fs::path& checkpoint, const fs::path& index, const std::string& task, const std::string& split,
         const fs::path& out) {
        ScoreReport r;
        {
          py::gil_scoped_release release;
          r = run_evaluate(checkpoint, index, parse_task(task), split, out);
        }
        return report_dict(r);
      },
      py::arg("checkpoint"), py::arg("index"), py::arg("task"), py::arg("split") = "validation", py::arg("out"));

  py::class_<Classifier>(m, "Classifier")
      .def_static("load", &Classifier::from_checkpoint, py::arg("path"))
      .def("predict", &Classifier::predict, py::arg("batch"),
           "Class probabilities for a (N, F, T) batch of spectrograms.")
      .def_property_readonly("class_names", &Classifier::class_names)
      .def_property_readonly("task", &Classifier::task)
      .def_property_readonly("parameter_count", &Classifier::parameter_count)
      .def_property_readonly("input_size", &Classifier::input_size);
}
