// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace respnet {

/// Little-endian binary encoder.
class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void str(std::string_view s);  // u32 length + bytes

  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

/// Little-endian decoder; throws FormatError naming `source` on truncation.
class ByteReader {
 public:
  ByteReader(const std::vector<char>& data, std::string source);

  void bytes(void* out, std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::vector<char>& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace respnet
