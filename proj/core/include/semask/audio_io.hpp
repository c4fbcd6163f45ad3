/* Copyright 2026 The semask Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEMASK_AUDIO_IO_HPP_
#define SEMASK_AUDIO_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "semask/features.hpp"

namespace semask {

// 16-bit little-endian mono PCM in a RIFF/WAVE container.
Waveform read_wav(const std::filesystem::path& path);
Waveform parse_wav(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");
std::vector<std::uint8_t> encode_wav(const Waveform& w);
void write_wav(const std::filesystem::path& path, const Waveform& w);

// SMF1 layout: "SMF1", u32 rows, u32 cols, rows*cols f32 (row-major),
// u16 frame shift in 0.1 ms units. All little-endian.
std::vector<std::uint8_t> encode_smf1(const FeatureMatrix& f);
FeatureMatrix decode_smf1(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");
void write_smf1(const std::filesystem::path& path, const FeatureMatrix& f);
FeatureMatrix read_smf1(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace semask

#endif  // SEMASK_AUDIO_IO_HPP_
