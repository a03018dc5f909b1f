// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "respnet/error.hpp"
#include "respnet/io.hpp"

namespace respnet {

namespace {

std::string fourcc(ByteReader& r) {
  char id[4];
  r.bytes(id, 4);
  return std::string(id, 4);
}

}  // namespace

AudioClip decode_wav(const std::vector<char>& bytes, const std::string& source) {
  ByteReader r(bytes, source);
  if (fourcc(r) != "RIFF") throw FormatError(source + ": not a RIFF file");
  r.u32();
  if (fourcc(r) != "WAVE") throw FormatError(source + ": not a WAVE file");

  bool have_fmt = false;
  std::uint32_t rate = 0;
  while (r.remaining() >= 8) {
    const std::string id = fourcc(r);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size < 16) throw FormatError(source + ": fmt chunk too short");
      std::vector<char> chunk(size);
      r.bytes(chunk.data(), size);
      ByteReader f(chunk, source);
      const std::uint32_t tags = f.u32();
      const std::uint16_t format = static_cast<std::uint16_t>(tags & 0xffff);
      const std::uint16_t channels = static_cast<std::uint16_t>(tags >> 16);
      rate = f.u32();
      f.u32();
      const std::uint32_t align_bits = f.u32();
      const std::uint16_t bits = static_cast<std::uint16_t>(align_bits >> 16);
      if (format != 1) throw FormatError(source + ": only PCM WAV is supported (format tag " + std::to_string(format) + ")");
      if (channels != 1) throw FormatError(source + ": expected mono audio, found " + std::to_string(channels) + " channels");
      if (bits != 16) throw FormatError(source + ": expected 16-bit samples, found " + std::to_string(bits));
      if (rate == 0) throw FormatError(source + ": zero sample rate");
      have_fmt = true;
      if (size % 2) r.bytes(chunk.data(), 1);
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(source + ": data chunk before fmt chunk");
      if (size > r.remaining()) throw FormatError(source + ": truncated data chunk");
      if (size % 2) throw FormatError(source + ": data chunk holds a partial sample");
      AudioClip clip;
      clip.sample_rate = rate;
      clip.samples.resize(size / 2);
      for (double& s : clip.samples) {
        unsigned char b[2];
        r.bytes(b, 2);
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(b[0] | (b[1] << 8)));
        s = static_cast<double>(v) / 32768.0;
      }
      return clip;
    } else {
      if (size > r.remaining()) throw FormatError(source + ": truncated '" + id + "' chunk");
      std::vector<char> skip(size + (size % 2 && r.remaining() > size ? 1 : 0));
      r.bytes(skip.data(), skip.size());
    }
  }
  throw FormatError(source + (have_fmt ? ": missing data chunk" : ": missing fmt chunk"));
}

AudioClip load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("audio file '" + path.string() + "' does not exist");
  return decode_wav(read_file(path), path.string());
}

std::vector<char> encode_wav(const AudioClip& clip) {
  if (clip.sample_rate == 0) throw InvalidInput("cannot encode a clip with zero sample rate");
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  ByteWriter w;
  w.bytes("RIFF", 4);
  w.u32(36 + data_bytes);
  w.bytes("WAVEfmt ", 8);
  w.u32(16);
  w.u32(1u | (1u << 16));
  w.u32(clip.sample_rate);
  w.u32(clip.sample_rate * 2);
  w.u32(2u | (16u << 16));
  w.bytes("data", 4);
  w.u32(data_bytes);
  for (double s : clip.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    const auto u = static_cast<std::uint16_t>(v);
    const char b[2] = {static_cast<char>(u & 0xff), static_cast<char>(u >> 8)};
    w.bytes(b, 2);
  }
  return w.buffer();
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) { write_file_atomic(path, encode_wav(clip)); }

}  // namespace respnet
