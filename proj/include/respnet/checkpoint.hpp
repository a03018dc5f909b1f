// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "respnet/model.hpp"
#include "respnet/train.hpp"

namespace respnet {

inline constexpr char kCheckpointMagic[4] = {'L', 'S', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  Shape dims;
  std::vector<float> values;
};

/// Layout (little-endian):
///   "LSCK" u32 version
///   str config_text
///   u32 count, then per tensor: str name, u32 rank, u64 dims[rank], f32 values[]
///   u64 optimizer step, u32 count, then per slot: str name, u64 n, f64 m[n], f64 v[n]
///   u64 seed, u32 epoch
struct Checkpoint {
  std::string config_text;
  std::vector<CheckpointTensor> tensors;
  OptimizerState optimizer;
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
};

std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<char>& bytes, const std::string& source = "<checkpoint>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Snapshot of every named tensor (parameters and buffers) plus optimizer state.
Checkpoint make_checkpoint(const Model& model, const OptimizerState& optimizer, std::string config_text,
                           std::uint64_t seed, std::uint32_t epoch);

/// Copies tensor values into `model`. Throws DataError on unknown or missing
/// names and on shape mismatches.
void apply_checkpoint(const Checkpoint& ckpt, Model& model);

}  // namespace respnet
