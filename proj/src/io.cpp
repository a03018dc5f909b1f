// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include "respnet/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "respnet/error.hpp"

namespace respnet {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void ByteWriter::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const char*>(data);
  buf_.insert(buf_.end(), p, p + n);
}

void ByteWriter::u32(std::uint32_t v) { bytes(&v, sizeof v); }
void ByteWriter::u64(std::uint64_t v) { bytes(&v, sizeof v); }
void ByteWriter::f32(float v) { bytes(&v, sizeof v); }
void ByteWriter::f64(double v) { bytes(&v, sizeof v); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

ByteReader::ByteReader(const std::vector<char>& data, std::string source)
    : data_(data), source_(std::move(source)) {}

void ByteReader::bytes(void* out, std::size_t n) {
  if (n > remaining()) {
    throw FormatError(source_ + ": truncated file (needed " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ")");
  }
  std::memcpy(out, data_.data() + pos_, n);
  pos_ += n;
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v;
  bytes(&v, sizeof v);
  return v;
}

std::uint64_t ByteReader::u64() {
  std::uint64_t v;
  bytes(&v, sizeof v);
  return v;
}

float ByteReader::f32() {
  float v;
  bytes(&v, sizeof v);
  return v;
}

double ByteReader::f64() {
  double v;
  bytes(&v, sizeof v);
  return v;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  if (n > remaining()) throw FormatError(source_ + ": truncated string");
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto data = read_file(path);
  return {data.begin(), data.end()};
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

}  // namespace respnet
