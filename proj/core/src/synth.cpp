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

#include "semask/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "semask/audio_io.hpp"
#include "semask/errors.hpp"
#include "semask/rng.hpp"

namespace semask {

void SynthConfig::validate() const {
  if (num_words == 0 || num_words > synth_lexicon().size()) {
    throw ConfigError("num_words must be in [1, " + std::to_string(synth_lexicon().size()) + "]");
  }
  if (min_words == 0 || min_words > max_words) throw ConfigError("need 1 <= min_words <= max_words");
  if (sample_rate != 8000 && sample_rate != 16000) throw ConfigError("sample_rate must be 8000 or 16000");
  if (!(word_s > 0.0) || gap_s < 0.0 || lead_s < 0.0) throw ConfigError("invalid synth durations");
}

std::string SynthUtterance::text() const {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

const std::vector<std::string>& synth_lexicon() {
  static const std::vector<std::string> kWords = {"red",  "green", "blue", "gold", "gray",
                                                  "pink", "teal",  "plum", "navy", "lime"};
  return kWords;
}

double synth_tone_hz(std::size_t word_index) {
  return 220.0 * std::pow(1.4, static_cast<double>(word_index));
}

std::vector<SynthUtterance> synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto& lexicon = synth_lexicon();
  const double sr = cfg.sample_rate;
  std::vector<SynthUtterance> out;
  for (std::size_t u = 0; u < cfg.num_utterances; ++u) {
    SynthUtterance utt;
    char id[32];
    std::snprintf(id, sizeof(id), "synth%03zu", u);
    utt.id = id;
    const auto n = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.min_words),
                        static_cast<std::int64_t>(cfg.max_words)));
    std::vector<std::size_t> word_ids(n);
    for (auto& w : word_ids) w = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cfg.num_words) - 1));

    const double total_s = cfg.lead_s + static_cast<double>(n) * (cfg.word_s + cfg.gap_s);
    const auto total = static_cast<std::size_t>(std::llround(total_s * sr));
    utt.wave.sample_rate = cfg.sample_rate;
    utt.wave.samples.assign(total, 0.0);
    for (auto& s : utt.wave.samples) s = cfg.noise * rng.normal();

    double t0 = cfg.lead_s;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t w = word_ids[k];
      utt.words.push_back(lexicon[w]);
      utt.spans.push_back(TokenSpan{lexicon[w], t0, cfg.word_s, "1"});
      const auto begin = static_cast<std::size_t>(std::llround(t0 * sr));
      const auto len = static_cast<std::size_t>(std::llround(cfg.word_s * sr));
      const double hz = synth_tone_hz(w);
      for (std::size_t i = 0; i < len && begin + i < total; ++i) {
        const double env = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
        utt.wave.samples[begin + i] +=
            cfg.amplitude * env * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr);
      }
      t0 += cfg.word_s + cfg.gap_s;
    }
    for (auto& s : utt.wave.samples) s = std::clamp(s, -1.0, 1.0);
    out.push_back(std::move(utt));
  }
  return out;
}

void write_synth_corpus(const std::filesystem::path& dir,
                        const std::vector<SynthUtterance>& corpus) {
  std::filesystem::create_directories(dir / "wav");
  Alignments ali;
  std::ofstream text(dir / "text");
  if (!text) throw InputError("cannot write " + (dir / "text").string());
  for (const auto& u : corpus) {
    write_wav(dir / "wav" / (u.id + ".wav"), u.wave);
    text << u.id << ' ' << u.text() << '\n';
    ali[u.id] = u.spans;
  }
  std::ofstream ctm(dir / "align.ctm");
  if (!ctm) throw InputError("cannot write " + (dir / "align.ctm").string());
  ctm << serialize_ctm(ali);
}

}  // namespace semask
