// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "respnet/error.hpp"
#include "respnet/io.hpp"

namespace respnet {

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(ckpt.config_text);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const CheckpointTensor& t : ckpt.tensors) {
    if (shape_size(t.dims) != t.values.size()) {
      throw InvalidInput("checkpoint tensor '" + t.name + "' has inconsistent dims");
    }
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (std::size_t d : t.dims) w.u64(d);
    for (float v : t.values) w.f32(v);
  }
  w.u64(ckpt.optimizer.step);
  w.u32(static_cast<std::uint32_t>(ckpt.optimizer.slots.size()));
  for (const AdamSlot& s : ckpt.optimizer.slots) {
    w.str(s.name);
    w.u64(s.m.size());
    for (double v : s.m) w.f64(v);
    for (double v : s.v) w.f64(v);
  }
  w.u64(ckpt.seed);
  w.u32(ckpt.epoch);
  return w.buffer();
}

Checkpoint decode_checkpoint(const std::vector<char>& bytes, const std::string& source) {
  ByteReader r(bytes, source);
  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw FormatError(source + ": not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.config_text = r.str();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointTensor t;
    t.name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError(source + ": tensor '" + t.name + "' has implausible rank");
    for (std::uint32_t k = 0; k < rank; ++k) t.dims.push_back(r.u64());
    const std::size_t count = shape_size(t.dims);
    if (count * 4 > r.remaining()) throw FormatError(source + ": truncated payload for tensor '" + t.name + "'");
    t.values.resize(count);
    for (float& v : t.values) v = r.f32();
    c.tensors.push_back(std::move(t));
  }
  c.optimizer.step = r.u64();
  const std::uint32_t slots = r.u32();
  for (std::uint32_t i = 0; i < slots; ++i) {
    AdamSlot s;
    s.name = r.str();
    const std::uint64_t count = r.u64();
    if (count * 16 > r.remaining()) throw FormatError(source + ": truncated optimizer state for '" + s.name + "'");
    s.m.resize(count);
    s.v.resize(count);
    for (double& v : s.m) v = r.f64();
    for (double& v : s.v) v = r.f64();
    c.optimizer.slots.push_back(std::move(s));
  }
  c.seed = r.u64();
  c.epoch = r.u32();
  if (r.remaining() != 0) throw FormatError(source + ": trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint '" + path.string() + "' does not exist");
  return decode_checkpoint(read_file(path), path.string());
}

Checkpoint make_checkpoint(const Model& model, const OptimizerState& optimizer, std::string config_text,
                           std::uint64_t seed, std::uint32_t epoch) {
  Checkpoint c;
  c.config_text = std::move(config_text);
  for (const NamedTensor& t : model.tensors()) {
    CheckpointTensor ct{t.name, t.tensor.dims(), {}};
    ct.values.reserve(t.tensor.size());
    for (double v : t.tensor.data()) ct.values.push_back(static_cast<float>(v));
    c.tensors.push_back(std::move(ct));
  }
  c.optimizer = optimizer;
  c.seed = seed;
  c.epoch = epoch;
  return c;
}

void apply_checkpoint(const Checkpoint& ckpt, Model& model) {
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const CheckpointTensor& t : ckpt.tensors) {
    if (!by_name.emplace(t.name, &t).second) throw DataError("checkpoint repeats tensor '" + t.name + "'");
  }
  for (const NamedTensor& t : model.tensors()) {
    if (by_name.find(t.name) == by_name.end()) throw DataError("checkpoint is missing tensor '" + t.name + "'");
  }
  for (const CheckpointTensor& ct : ckpt.tensors) {
    auto it = std::find_if(model.tensors().begin(), model.tensors().end(),
                           [&](const NamedTensor& t) { return t.name == ct.name; });
    if (it == model.tensors().end()) throw DataError("checkpoint has unknown parameter '" + ct.name + "'");
    if (it->tensor.dims() != ct.dims) {
      throw DataError("checkpoint tensor '" + ct.name + "' is " + shape_string(ct.dims) + " but the model expects " +
                      shape_string(it->tensor.dims()));
    }
    auto dst = it->tensor.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<double>(ct.values[i]);
  }
}

}  // namespace respnet
