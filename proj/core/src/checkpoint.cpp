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

#include "semask/checkpoint.hpp"

#include <sstream>

#include "byte_io.hpp"
#include "semask/audio_io.hpp"
#include "semask/errors.hpp"

namespace semask {

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : params) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.bytes("SMCK");
  w.u32(kSmckVersion);
  w.u64(ck.step);
  w.u64(ck.fingerprint);
  w.u32(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, t] : ck.params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f64(v);
  }
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& name) {
  detail::ByteReader r(bytes, name);
  if (r.str(4) != "SMCK") throw InputError(name + ": not an SMCK checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kSmckVersion) {
    throw InputError(name + ": unsupported SMCK version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.step = r.u64();
  ck.fingerprint = r.u64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string pname = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_size(shape);
    if (n * 8 > r.remaining()) throw InputError(name + ": truncated record '" + pname + "'");
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    ck.params.emplace_back(std::move(pname), Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw InputError(name + ": trailing bytes after last record");
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_bytes(path, encode_checkpoint(ck));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path), path.string());
}

Checkpoint snapshot(const ParameterSet& params, std::uint64_t step, std::uint64_t fingerprint) {
  Checkpoint ck;
  ck.step = step;
  ck.fingerprint = fingerprint;
  ck.params.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.params.emplace_back(params[i].name, params[i].value);
  }
  return ck;
}

void load_into(const Checkpoint& ck, ParameterSet& params, std::uint64_t expected_fingerprint) {
  if (ck.fingerprint != expected_fingerprint) {
    throw ValidationError("checkpoint fingerprint " + hex(ck.fingerprint) +
                          " does not match model configuration " + hex(expected_fingerprint));
  }
  if (ck.params.size() != params.size()) {
    throw ValidationError("checkpoint has " + std::to_string(ck.params.size()) +
                          " parameters, model has " + std::to_string(params.size()));
  }
  for (const auto& [name, t] : ck.params) {
    if (!params.contains(name)) throw ValidationError("unknown parameter '" + name + "'");
    Parameter& p = params.get(name);
    if (p.value.shape() != t.shape()) {
      throw ValidationError("parameter '" + name + "' has shape " + shape_str(t.shape()) +
                            ", model expects " + shape_str(p.value.shape()));
    }
    p.value = t;
  }
}

Checkpoint average_checkpoints(std::span<const Checkpoint> cks) {
  if (cks.empty()) throw ContractError("average_checkpoints: no checkpoints");
  const Checkpoint& first = cks.front();
  for (std::size_t k = 1; k < cks.size(); ++k) {
    const Checkpoint& other = cks[k];
    if (other.fingerprint != first.fingerprint) {
      throw ValidationError("checkpoint " + std::to_string(k) + " has a different fingerprint");
    }
    const std::size_t n = std::max(first.params.size(), other.params.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= first.params.size() || i >= other.params.size()) {
        const auto& extra = i < first.params.size() ? first.params[i] : other.params[i];
        throw ValidationError("parameter '" + extra.first + "' missing from checkpoint " +
                              std::to_string(i < first.params.size() ? k : 0));
      }
      const auto& a = first.params[i];
      const auto& b = other.params[i];
      if (a.first != b.first || a.second.shape() != b.second.shape()) {
        throw ValidationError("parameter '" + a.first + "' differs in checkpoint " +
                              std::to_string(k));
      }
    }
  }
  Checkpoint out = first;
  out.step = cks.back().step;
  const double inv = 1.0 / static_cast<double>(cks.size());
  for (std::size_t i = 0; i < out.params.size(); ++i) {
    auto acc = out.params[i].second.data();
    for (std::size_t k = 1; k < cks.size(); ++k) {
      const auto src = cks[k].params[i].second.data();
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += src[j];
    }
    for (double& v : acc) v *= inv;
  }
  return out;
}

}  // namespace semask
