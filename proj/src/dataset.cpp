// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "respnet/error.hpp"
#include "respnet/io.hpp"
#include "respnet/spectrogram.hpp"
#include "respnet/wav.hpp"

namespace respnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_event_label(std::string_view s) {
  return std::find(std::begin(kEventLabels), std::end(kEventLabels), s) != std::end(kEventLabels);
}

bool is_record_label(std::string_view s) {
  return std::find(std::begin(kRecordLabels), std::end(kRecordLabels), s) != std::end(kRecordLabels);
}

}  // namespace

void AnnotationRecord::validate(double duration_seconds) const {
  if (!is_record_label(record_label)) {
    throw DataError("recording '" + recording_id + "': unknown record label '" + record_label + "'");
  }
  const double limit_ms = duration_seconds * 1000.0;
  for (const AnnotatedEvent& e : events) {
    if (!is_event_label(e.label)) throw DataError("recording '" + recording_id + "': unknown event label '" + e.label + "'");
    if (!(e.onset_ms >= 0.0) || !(e.offset_ms > e.onset_ms) || e.offset_ms > limit_ms + 1e-6) {
      throw DataError("recording '" + recording_id + "': event [" + std::to_string(e.onset_ms) + ", " +
                      std::to_string(e.offset_ms) + ") ms lies outside the " + std::to_string(limit_ms) +
                      " ms recording");
    }
  }
}

std::string annotation_to_json(const AnnotationRecord& record) {
  json j;
  j["record_annotation"] = record.record_label;
  json events = json::array();
  for (const AnnotatedEvent& e : record.events) {
    events.push_back({{"start_ms", e.onset_ms}, {"end_ms", e.offset_ms}, {"type", e.label}});
  }
  j["event_annotation"] = events;
  return j.dump(2) + "\n";
}

AnnotationRecord annotation_from_json(std::string_view text, const std::string& recording_id) {
  try {
    const json j = json::parse(text);
    AnnotationRecord r;
    r.recording_id = recording_id;
    r.record_label = j.at("record_annotation").get<std::string>();
    for (const json& e : j.at("event_annotation")) {
      r.events.push_back({e.at("start_ms").get<double>(), e.at("end_ms").get<double>(), e.at("type").get<std::string>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError("annotation for '" + recording_id + "': " + e.what());
  }
}

AnnotationRecord load_annotation(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("annotation file '" + path.string() + "' does not exist");
  return annotation_from_json(read_text_file(path), path.stem().string());
}

void write_annotation(const fs::path& path, const AnnotationRecord& record) {
  write_file_atomic(path, annotation_to_json(record));
}

std::string to_string(Split split) { return split == Split::Train ? "train" : "validation"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation") return Split::Validation;
  throw FormatError("unknown split '" + std::string(text) + "' (expected train or validation)");
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json j;
  j["root"] = manifest.root;
  json entries = json::array();
  for (const ManifestEntry& e : manifest.entries) {
    json je = {{"audio", e.audio}, {"annotation", e.annotation}, {"split", to_string(e.split)}};
    if (!e.audio_checksum.empty() || !e.annotation_checksum.empty()) {
      je["checksum"] = {{"audio", e.audio_checksum}, {"annotation", e.annotation_checksum}};
    }
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text, const std::string& source) {
  try {
    const json j = json::parse(text);
    DatasetManifest m;
    m.root = j.value("root", std::string("."));
    for (const json& je : j.at("entries")) {
      ManifestEntry e;
      e.audio = je.at("audio").get<std::string>();
      e.annotation = je.at("annotation").get<std::string>();
      e.split = parse_split(je.at("split").get<std::string>());
      if (je.contains("checksum")) {
        e.audio_checksum = je["checksum"].value("audio", std::string());
        e.annotation_checksum = je["checksum"].value("annotation", std::string());
      }
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_file_atomic(path, manifest_to_json(manifest));
}

fs::path manifest_root(const fs::path& manifest_path, const DatasetManifest& manifest) {
  const fs::path root(manifest.root);
  return root.is_absolute() ? root : manifest_path.parent_path() / root;
}

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("manifest '" + path.string() + "' does not exist");
  DatasetManifest m = manifest_from_json(read_text_file(path), path.string());
  const fs::path root = manifest_root(path, m);
  auto check = [&](const std::string& rel, const std::string& expected) {
    const fs::path p = root / rel;
    if (!fs::exists(p)) throw DataError("manifest '" + path.string() + "' lists missing file '" + p.string() + "'");
    if (!expected.empty() && checksum_hex(fnv1a64(read_file(p))) != expected) {
      throw DataError("checksum mismatch for '" + p.string() + "'");
    }
  };
  for (const ManifestEntry& e : m.entries) {
    check(e.audio, e.audio_checksum);
    check(e.annotation, e.annotation_checksum);
  }
  return m;
}

std::uint64_t fnv1a64(const std::vector<char>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string checksum_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::vector<EventClip> segment_events(const AudioClip& clip, const AnnotationRecord& annotation) {
  annotation.validate(clip.duration_seconds());
  std::vector<EventClip> out;
  const double rate = static_cast<double>(clip.sample_rate);
  for (const AnnotatedEvent& e : annotation.events) {
    const auto begin = static_cast<std::size_t>(std::llround(e.onset_ms * rate / 1000.0));
    const auto end = std::min(clip.samples.size(), static_cast<std::size_t>(std::llround(e.offset_ms * rate / 1000.0)));
    if (begin >= end) {
      throw DataError("recording '" + annotation.recording_id + "': event at " + std::to_string(e.onset_ms) +
                      " ms is shorter than one sample");
    }
    EventClip ev;
    ev.clip.sample_rate = clip.sample_rate;
    ev.clip.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                           clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
    ev.label = e.label;
    ev.start_sample = begin;
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<LabeledClip> load_clips(const fs::path& manifest_path, Level level) {
  const DatasetManifest m = load_manifest(manifest_path);
  const fs::path root = manifest_root(manifest_path, m);
  std::vector<LabeledClip> out;
  for (const ManifestEntry& e : m.entries) {
    const AudioClip audio = load_wav(root / e.audio);
    AnnotationRecord ann = load_annotation(root / e.annotation);
    ann.recording_id = fs::path(e.audio).stem().string();
    ann.validate(audio.duration_seconds());
    if (level == Level::Record) {
      out.push_back({ann.recording_id, audio, ann.record_label, e.split});
      continue;
    }
    const auto events = segment_events(audio, ann);
    for (std::size_t k = 0; k < events.size(); ++k) {
      out.push_back({ann.recording_id + "_e" + std::to_string(k), events[k].clip, events[k].label, e.split});
    }
  }
  return out;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

void add_tone(std::vector<double>& x, double sr, double f0, double amp, std::size_t harmonics, double phase) {
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double t = static_cast<double>(n) / sr;
    for (std::size_t k = 1; k <= harmonics; ++k) {
      x[n] += amp / static_cast<double>(k) * std::sin(kTwoPi * f0 * static_cast<double>(k) * t + phase * k);
    }
  }
}

void add_clicks(std::vector<double>& x, double sr, double rate_hz, double freq, double decay_s, double amp,
                std::mt19937_64& rng) {
  const double length = static_cast<double>(x.size()) / sr;
  double t = uniform(rng, 0.0, 1.0 / rate_hz);
  while (t < length) {
    const auto start = static_cast<std::size_t>(t * sr);
    const double a = amp * uniform(rng, 0.7, 1.0);
    const auto span = static_cast<std::size_t>(6.0 * decay_s * sr);
    for (std::size_t k = 0; k < span && start + k < x.size(); ++k) {
      const double dt = static_cast<double>(k) / sr;
      x[start + k] += a * std::exp(-dt / decay_s) * std::sin(kTwoPi * freq * dt);
    }
    t += uniform(rng, 0.6, 1.4) / rate_hz;
  }
}

void add_band_noise(std::vector<double>& x, double sr, double lo, double hi, double amp, std::size_t partials,
                    std::mt19937_64& rng) {
  const double scale = amp / std::sqrt(static_cast<double>(partials) / 2.0);
  for (std::size_t p = 0; p < partials; ++p) {
    const double f = uniform(rng, lo, hi);
    const double phase = uniform(rng, 0.0, kTwoPi);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] += scale * std::sin(kTwoPi * f * static_cast<double>(n) / sr + phase);
  }
}

void apply_envelope(std::vector<double>& x, double sr) {
  const auto fade = std::min(x.size() / 2, static_cast<std::size_t>(0.02 * sr));
  for (std::size_t k = 0; k < fade; ++k) {
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(fade));
    x[k] *= w;
    x[x.size() - 1 - k] *= w;
  }
}

}  // namespace

AudioClip synthesize_event(std::size_t event_class, double seconds, std::uint32_t sample_rate, std::mt19937_64& rng) {
  if (event_class >= std::size(kEventLabels)) throw InvalidInput("event class index out of range");
  const double sr = static_cast<double>(sample_rate);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(static_cast<std::size_t>(std::llround(seconds * sr)), 0.0);
  auto& x = clip.samples;
  const double gain = uniform(rng, 0.8, 1.2);
  switch (event_class) {
    case 0:  // N: soft mid-band breath noise
      add_band_noise(x, sr, 400.0, 600.0, 0.15 * gain, 48, rng);
      break;
    case 1:  // Rho: low-pitched snore, fundamental plus octave
      add_tone(x, sr, uniform(rng, 90.0, 110.0), 0.3 * gain, 2, uniform(rng, 0.0, kTwoPi));
      break;
    case 2:  // W: sustained tone
      add_tone(x, sr, uniform(rng, 800.0, 900.0), 0.25 * gain, 1, uniform(rng, 0.0, kTwoPi));
      break;
    case 3:  // Str: high tone
      add_tone(x, sr, uniform(rng, 1600.0, 1800.0), 0.25 * gain, 1, uniform(rng, 0.0, kTwoPi));
      break;
    case 4:  // CC: sparse low clicks
      add_clicks(x, sr, uniform(rng, 8.0, 12.0), uniform(rng, 280.0, 340.0), 0.010, 0.5 * gain, rng);
      break;
    case 5:  // FC: dense clicks
      add_clicks(x, sr, uniform(rng, 22.0, 30.0), uniform(rng, 1050.0, 1250.0), 0.003, 0.45 * gain, rng);
      break;
    case 6:  // B: tone plus dense clicks
      add_tone(x, sr, uniform(rng, 800.0, 900.0), 0.18 * gain, 1, uniform(rng, 0.0, kTwoPi));
      add_clicks(x, sr, uniform(rng, 22.0, 30.0), uniform(rng, 1050.0, 1250.0), 0.003, 0.45 * gain, rng);
      break;
  }
  apply_envelope(x, sr);
  return clip;
}

double nearest_centroid_accuracy(const std::vector<std::vector<double>>& features,
                                 const std::vector<std::size_t>& labels) {
  if (features.size() != labels.size() || features.empty()) throw InvalidInput("nearest_centroid: bad input sizes");
  const std::size_t dim = features[0].size();
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<double>> sums(classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) sums[labels[i]][d] += features[i][d];
    ++counts[labels[i]];
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_class = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t n = counts[c] - (c == labels[i] ? 1 : 0);
      if (n == 0) continue;
      double dist = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double s = sums[c][d] - (c == labels[i] ? features[i][d] : 0.0);
        const double diff = s / static_cast<double>(n) - features[i][d];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        best_class = c;
      }
    }
    if (best_class == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

SyntheticResult generate_synthetic_dataset(const fs::path& out_dir, const SyntheticOptions& options) {
  if (options.n_per_class == 0) throw InvalidConfig("n_per_class must be at least 1");
  if (options.sample_rate < 4000) throw InvalidConfig("synthetic sample rate must be at least 4000 Hz");
  if (!(options.record_seconds >= 1.5)) throw InvalidConfig("synthetic recordings must last at least 1.5 s");
  std::error_code ec;
  fs::create_directories(out_dir / "audio", ec);
  fs::create_directories(out_dir / "annotations", ec);
  if (ec || !fs::is_directory(out_dir / "audio")) {
    throw DataError("cannot create output directory '" + out_dir.string() + "'");
  }

  constexpr std::size_t kClasses = std::size(kEventLabels);
  const double sr = static_cast<double>(options.sample_rate);
  SyntheticResult result;
  FeatureConfig probe;
  probe.wavelet = WaveletSpec::defaults(WaveletFamily::Morse);
  probe.duration_seconds = 2.0;
  probe.freq_bins = 48;
  probe.time_frames = 64;
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;

  const std::size_t total = kClasses * options.n_per_class;
  for (std::size_t i = 0; i < total; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    const std::size_t cls = i % kClasses;
    const std::size_t repeat = i / kClasses;
    const double event_seconds = uniform(rng, 0.6, 1.2);
    const double onset = uniform(rng, 0.2, options.record_seconds - event_seconds - 0.2);

    AudioClip rec;
    rec.sample_rate = options.sample_rate;
    rec.samples.assign(static_cast<std::size_t>(std::llround(options.record_seconds * sr)), 0.0);
    std::normal_distribution<double> hiss(0.0, 0.004);
    for (double& s : rec.samples) s = hiss(rng);
    const AudioClip event = synthesize_event(cls, event_seconds, options.sample_rate, rng);
    const auto start = static_cast<std::size_t>(std::llround(onset * sr));
    for (std::size_t k = 0; k < event.samples.size() && start + k < rec.samples.size(); ++k) {
      rec.samples[start + k] += event.samples[k];
    }

    std::string record_label;
    switch (cls) {
      case 0: record_label = repeat % 2 == 1 ? "PQ" : "N"; break;
      case 1: case 2: case 3: record_label = "CAS"; break;
      case 4: case 5: record_label = "DAS"; break;
      default: record_label = "CD"; break;
    }
    if (record_label == "PQ") {
      // friction bursts outside the annotated event
      const double gaps[2][2] = {{0.0, onset - 0.05}, {onset + event_seconds + 0.05, options.record_seconds}};
      for (const auto& gap : gaps) {
        const double room = gap[1] - gap[0];
        if (room < 0.15) continue;
        const double len = std::min(room, uniform(rng, 0.15, 0.3));
        const double at = gap[0] + uniform(rng, 0.0, room - len);
        std::vector<double> burst(static_cast<std::size_t>(len * sr), 0.0);
        add_band_noise(burst, sr, 80.0, 1500.0, 0.3, 64, rng);
        apply_envelope(burst, sr);
        const auto first = static_cast<std::size_t>(at * sr);
        for (std::size_t k = 0; k < burst.size() && first + k < rec.samples.size(); ++k) rec.samples[first + k] += burst[k];
      }
    }
    double peak = 0.0;
    for (double s : rec.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.95) {
      for (double& s : rec.samples) s *= 0.95 / peak;
    }

    char name[32];
    std::snprintf(name, sizeof name, "rec_%04zu", i);
    AnnotationRecord ann;
    ann.recording_id = name;
    ann.record_label = record_label;
    const double onset_ms = std::round(onset * 1000.0);
    const double offset_ms = std::min(std::round((onset + event_seconds) * 1000.0), options.record_seconds * 1000.0);
    ann.events.push_back({onset_ms, offset_ms, kEventLabels[cls]});

    const std::string audio_rel = std::string("audio/") + name + ".wav";
    const std::string ann_rel = std::string("annotations/") + name + ".json";
    const std::vector<char> wav = encode_wav(rec);
    write_file_atomic(out_dir / audio_rel, wav);
    const std::string ann_text = annotation_to_json(ann);
    write_file_atomic(out_dir / ann_rel, ann_text);

    ManifestEntry entry;
    entry.audio = audio_rel;
    entry.annotation = ann_rel;
    entry.split = i % 5 == 4 ? Split::Validation : Split::Train;
    entry.audio_checksum = checksum_hex(fnv1a64(wav));
    entry.annotation_checksum = checksum_hex(fnv1a64(std::vector<char>(ann_text.begin(), ann_text.end())));
    result.manifest.entries.push_back(std::move(entry));

    if (options.check_separability) {
      const AudioClip decoded = decode_wav(wav, audio_rel);
      const auto segments = segment_events(decoded, ann);
      const Spectrogram spec = extract_spectrogram(segments.at(0).clip, probe);
      std::vector<double> row_means(spec.freq_bins, 0.0);
      for (std::size_t f = 0; f < spec.freq_bins; ++f) {
        for (std::size_t t = 0; t < spec.time_frames; ++t) row_means[f] += spec.at(f, t);
        row_means[f] /= static_cast<double>(spec.time_frames);
      }
      features.push_back(std::move(row_means));
      labels.push_back(cls);
    }
  }
  result.recordings = total;
  result.manifest_path = out_dir / "manifest.json";
  write_manifest(result.manifest_path, result.manifest);
  if (options.check_separability && options.n_per_class >= 2) {
    result.separability = nearest_centroid_accuracy(features, labels);
  }
  return result;
}

}  // namespace respnet
