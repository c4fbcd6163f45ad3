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

#include "semask/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "semask/errors.hpp"

namespace semask {

using detail::ByteReader;
using detail::ByteWriter;

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

Waveform parse_wav(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  if (bytes.size() < 12 || r.str(4) != "RIFF") throw InputError(name + ": missing RIFF header");
  r.u32();
  if (r.str(4) != "WAVE") throw InputError(name + ": not a WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (r.remaining() >= 8) {
    const std::string id = r.str(4);
    const std::uint32_t size = r.u32();
    if (size > r.remaining()) throw InputError(name + ": chunk '" + id + "' overruns file");
    if (id == "fmt ") {
      if (size < 16) throw InputError(name + ": short fmt chunk");
      const std::uint16_t format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      r.skip(size - 16);
      if (format != 1) throw InputError(name + ": only PCM format is supported");
      if (channels != 1) throw InputError(name + ": only mono audio is supported");
      if (bits != 16) throw InputError(name + ": only 16-bit samples are supported");
      if (rate != 8000 && rate != 16000) {
        throw InputError(name + ": unsupported sample rate " + std::to_string(rate));
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw InputError(name + ": data chunk before fmt chunk");
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(size / 2);
      for (auto& s : w.samples) {
        s = static_cast<double>(static_cast<std::int16_t>(r.u16())) / 32768.0;
      }
      if (w.samples.empty()) throw InputError(name + ": empty data chunk");
      return w;
    } else {
      r.skip(size);
    }
    if (size % 2 == 1 && r.remaining() > 0) r.skip(1);
  }
  throw InputError(name + ": no data chunk");
}

Waveform read_wav(const std::filesystem::path& path) {
  return parse_wav(read_file_bytes(path), path.string());
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  ByteWriter out;
  out.bytes("RIFF");
  out.u32(36 + 2 * n);
  out.bytes("WAVE");
  out.bytes("fmt ");
  out.u32(16);
  out.u16(1);
  out.u16(1);
  out.u32(static_cast<std::uint32_t>(w.sample_rate));
  out.u32(static_cast<std::uint32_t>(w.sample_rate) * 2);
  out.u16(2);
  out.u16(16);
  out.bytes("data");
  out.u32(2 * n);
  for (double s : w.samples) {
    const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
    out.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32768.0))));
  }
  return std::move(out.buffer());
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  write_file_bytes(path, encode_wav(w));
}

std::vector<std::uint8_t> encode_smf1(const FeatureMatrix& f) {
  ByteWriter out;
  out.bytes("SMF1");
  out.u32(static_cast<std::uint32_t>(f.frames()));
  out.u32(static_cast<std::uint32_t>(f.dims()));
  for (double v : f.values()) out.f32(static_cast<float>(v));
  out.u16(static_cast<std::uint16_t>(std::lround(f.frame_shift_ms * 10.0)));
  return std::move(out.buffer());
}

FeatureMatrix decode_smf1(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  if (r.str(4) != "SMF1") throw InputError(name + ": bad SMF1 magic");
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (rows == 0 || cols == 0) throw InputError(name + ": empty feature matrix");
  if (static_cast<std::uint64_t>(rows) * cols * 4 + 2 != r.remaining()) {
    throw InputError(name + ": payload size does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  std::vector<double> values(static_cast<std::size_t>(rows) * cols);
  for (auto& v : values) v = static_cast<double>(r.f32());
  FeatureMatrix f(rows, cols, std::move(values));
  f.frame_shift_ms = r.u16() / 10.0;
  return f;
}

void write_smf1(const std::filesystem::path& path, const FeatureMatrix& f) {
  write_file_bytes(path, encode_smf1(f));
}

FeatureMatrix read_smf1(const std::filesystem::path& path) {
  FeatureMatrix f = decode_smf1(read_file_bytes(path), path.string());
  f.source_id = path.stem().string();
  return f;
}

}  // namespace semask
