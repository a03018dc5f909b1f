// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <filesystem>
#include <vector>

#include "respnet/audio.hpp"

namespace respnet {

/// Decodes 16-bit PCM mono RIFF/WAVE. Samples are scaled by 1/32768.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip decode_wav(const std::vector<char>& bytes, const std::string& source = "<wav>");

/// Encodes 16-bit PCM mono. Samples are clamped to [-1, 1) and rounded.
std::vector<char> encode_wav(const AudioClip& clip);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace respnet
