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

#ifndef SEMASK_TESTS_SUPPORT_SYNTH_DATA_HPP_
#define SEMASK_TESTS_SUPPORT_SYNTH_DATA_HPP_

#include <string>
#include <vector>

#include "semask/alignment.hpp"
#include "semask/features.hpp"
#include "semask/synth.hpp"
#include "semask/train.hpp"

namespace semask::testing {

inline FeatureConfig small_features() {
  FeatureConfig fc;
  fc.n_mels = 16;
  fc.out_dim = 16;
  return fc;
}

inline Vocab synth_vocab(const SynthConfig& sc) {
  const auto& lex = synth_lexicon();
  return Vocab(std::vector<std::string>(lex.begin(), lex.begin() + static_cast<long>(sc.num_words)));
}

// Normalized log-mel training examples with word alignments for a synthetic corpus.
inline std::vector<TrainExample> synth_examples(const SynthConfig& sc,
                                                const FeatureConfig& fc = small_features()) {
  const Vocab vocab = synth_vocab(sc);
  std::vector<TrainExample> out;
  for (const SynthUtterance& u : synth_corpus(sc)) {
    TrainExample ex;
    ex.id = u.id;
    ex.features = normalize(log_mel(u.wave, fc));
    for (const auto& w : u.words) ex.labels.push_back(vocab.id_of(w));
    ex.spans = u.spans;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace semask::testing

#endif  // SEMASK_TESTS_SUPPORT_SYNTH_DATA_HPP_
