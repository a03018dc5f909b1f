// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "respnet/audio.hpp"
#include "respnet/metrics.hpp"

namespace respnet {

struct AnnotatedEvent {
  double onset_ms = 0.0;
  double offset_ms = 0.0;
  std::string label;
  friend bool operator==(const AnnotatedEvent&, const AnnotatedEvent&) = default;
};

/// On disk: {"record_annotation": "CAS", "event_annotation": [{"start_ms", "end_ms", "type"}]}.
struct AnnotationRecord {
  std::string recording_id;
  std::string record_label;
  std::vector<AnnotatedEvent> events;

  /// Checks label sets and 0 <= onset < offset <= duration.
  void validate(double duration_seconds) const;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

std::string annotation_to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(std::string_view text, const std::string& recording_id);
AnnotationRecord load_annotation(const std::filesystem::path& path);
void write_annotation(const std::filesystem::path& path, const AnnotationRecord& record);

enum class Split { Train, Validation };
std::string to_string(Split split);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string audio;       // relative to the manifest root
  std::string annotation;  // relative to the manifest root
  Split split = Split::Train;
  std::string audio_checksum;       // optional FNV-1a 64 hex
  std::string annotation_checksum;  // optional FNV-1a 64 hex
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  /// Dataset root; relative roots resolve against the manifest's directory.
  std::string root = ".";
  std::vector<ManifestEntry> entries;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text, const std::string& source = "<manifest>");
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Parses the manifest, checks that every file exists and verifies checksums.
DatasetManifest load_manifest(const std::filesystem::path& path);
std::filesystem::path manifest_root(const std::filesystem::path& manifest_path, const DatasetManifest& manifest);

std::uint64_t fnv1a64(const std::vector<char>& bytes);
std::string checksum_hex(std::uint64_t value);

struct EventClip {
  AudioClip clip;
  std::string label;
  std::size_t start_sample = 0;
};

/// One sub-clip per event, covering samples [round(onset), round(offset)).
std::vector<EventClip> segment_events(const AudioClip& clip, const AnnotationRecord& annotation);

struct LabeledClip {
  std::string id;
  AudioClip clip;
  std::string label;  // raw event or record label
  Split split = Split::Train;
};

/// Events (segmented) or whole recordings, in manifest order.
std::vector<LabeledClip> load_clips(const std::filesystem::path& manifest_path, Level level);

/// Stand-in corpus: one recording per sample with a single event whose class
/// cycles through N, Rho, W, Str, CC, FC, B. Each event class is a distinct
/// parametric signal family. Normal recordings at odd repetition index carry
/// broadband friction bursts outside the event and are labelled PQ.
struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t n_per_class = 5;
  std::uint32_t sample_rate = 8000;
  double record_seconds = 2.5;
  bool check_separability = true;
};

struct SyntheticResult {
  std::filesystem::path manifest_path;
  DatasetManifest manifest;
  std::size_t recordings = 0;
  /// Leave-one-out nearest-centroid accuracy on time-averaged CWT rows; -1 when not run.
  double separability = -1.0;
};

/// Writes audio/, annotations/ and manifest.json under `out_dir`.
/// Sample i has event class i % 7 and is in the validation split when i % 5 == 4.
SyntheticResult generate_synthetic_dataset(const std::filesystem::path& out_dir, const SyntheticOptions& options);

/// One synthetic event of class `event_class` (index into kEventLabels).
AudioClip synthesize_event(std::size_t event_class, double seconds, std::uint32_t sample_rate, std::mt19937_64& rng);

/// Leave-one-out nearest-centroid accuracy (Euclidean) over feature rows.
double nearest_centroid_accuracy(const std::vector<std::vector<double>>& features,
                                 const std::vector<std::size_t>& labels);

}  // namespace respnet
