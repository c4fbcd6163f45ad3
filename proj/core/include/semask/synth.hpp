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

#ifndef SEMASK_SYNTH_HPP_
#define SEMASK_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semask/alignment.hpp"
#include "semask/features.hpp"

namespace semask {

// Toy corpus in which every word is a pure tone of its own pitch, so the
// word boundaries are known exactly.
struct SynthConfig {
  std::size_t num_utterances = 20;
  std::size_t num_words = 6;
  std::size_t min_words = 2;
  std::size_t max_words = 4;
  int sample_rate = 16000;
  double lead_s = 0.08;
  double word_s = 0.20;
  double gap_s = 0.04;
  double amplitude = 0.4;
  double noise = 0.005;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthUtterance {
  std::string id;
  Waveform wave;
  std::vector<std::string> words;
  std::vector<TokenSpan> spans;

  std::string text() const;
};

const std::vector<std::string>& synth_lexicon();
double synth_tone_hz(std::size_t word_index);

std::vector<SynthUtterance> synth_corpus(const SynthConfig& cfg);

// Writes <dir>/wav/<id>.wav, <dir>/text and <dir>/align.ctm.
void write_synth_corpus(const std::filesystem::path& dir,
                        const std::vector<SynthUtterance>& corpus);

}  // namespace semask

#endif  // SEMASK_SYNTH_HPP_
