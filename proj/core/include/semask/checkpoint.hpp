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

#ifndef SEMASK_CHECKPOINT_HPP_
#define SEMASK_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semask/autograd.hpp"
#include "semask/tensor.hpp"

namespace semask {

// Named parameter snapshot. Records keep insertion order so that encoding is
// deterministic.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> params;
  std::uint64_t step = 0;
  std::uint64_t fingerprint = 0;

  const Tensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

// SMCK layout (little-endian): "SMCK", u32 version, u64 step, u64 fingerprint,
// u32 record count, then per record u32 name length, name bytes, u32 rank,
// u32 dims[rank], f64 values.
inline constexpr std::uint32_t kSmckVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes,
                             const std::string& name = "<memory>");
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint snapshot(const ParameterSet& params, std::uint64_t step, std::uint64_t fingerprint);

// Copies values into params. Throws ValidationError on fingerprint mismatch
// or on any missing, extra or reshaped parameter.
void load_into(const Checkpoint& ck, ParameterSet& params, std::uint64_t expected_fingerprint);

// Element-wise mean. The result carries the step of the last input.
Checkpoint average_checkpoints(std::span<const Checkpoint> cks);

}  // namespace semask

#endif  // SEMASK_CHECKPOINT_HPP_
