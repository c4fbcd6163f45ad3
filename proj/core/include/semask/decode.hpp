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

#ifndef SEMASK_DECODE_HPP_
#define SEMASK_DECODE_HPP_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semask/alignment.hpp"
#include "semask/features.hpp"
#include "semask/lm.hpp"
#include "semask/tensor.hpp"

namespace semask {

class AsrModel;

struct DecodeConfig {
  std::size_t beam = 20;
  double beta1 = 0.5;        // attention decoder weight
  double beta2 = 0.7;        // LM weight
  double ctc_weight = 1.0;   // the fused objective leaves CTC unweighted
  double max_len_ratio = 1.0;
  double gamma1 = 0.5;       // word-count weight when rescoring
  double gamma2 = 0.7;       // right-to-left LM weight when rescoring
  std::size_t n_best = 20;

  void validate() const;
};

// Incremental CTC prefix probabilities: for a prefix g, psi(g) is the log
// probability that the label sequence starts with g.
class CtcPrefixScorer {
 public:
  struct State {
    std::vector<double> r_nonblank;  // prefix ends at frame t in a label symbol
    std::vector<double> r_blank;     // prefix ends at frame t in blank
    double log_psi = 0.0;
    int last = -1;                   // last label of the prefix, -1 when empty
  };

  // logp: T x V per-frame log-probabilities.
  explicit CtcPrefixScorer(Tensor logp, int blank = 0);

  State initial() const;
  // psi(g + token) and the state of g + token.
  State extend(const State& state, int token) const;
  // log P(label sequence == g).
  double finish(const State& state) const;

  std::size_t frames() const { return logp_.dim(0); }
  std::size_t classes() const { return logp_.dim(1); }

 private:
  Tensor logp_;
  int blank_;
};

// (incremental log-prob, next state) for appending next_token to the prefix
// described by `state`. Vocab::kEos closes the prefix.
std::pair<double, CtcPrefixScorer::State> ctc_prefix_score(const CtcPrefixScorer& scorer,
                                                           const CtcPrefixScorer::State& state,
                                                           int next_token);

struct Hypothesis {
  std::vector<int> tokens{Vocab::kSos};  // sos-led; finished ones end with eos
  double s2s_lp = 0.0;
  double ctc_lp = 0.0;
  double lm_lp = 0.0;
  double combined = 0.0;
  std::optional<LmState> lm_state;
  CtcPrefixScorer::State ctc_state;
  std::vector<double> lm_next;  // LM log-probs for the next token

  bool finished() const { return tokens.size() > 1 && tokens.back() == Vocab::kEos; }
  // Tokens without sos/eos.
  std::vector<int> transcript() const;
  std::size_t length() const { return transcript().size(); }
};

// Next-token log-probabilities from the attention decoder for an sos-led prefix.
using S2sScorer = std::function<std::vector<double>(std::span<const int> prefix)>;

// Score descending, then token sequence ascending.
bool hypothesis_before(const Hypothesis& a, const Hypothesis& b);

class BeamSearch {
 public:
  // tokens: candidate expansions besides eos. lm may be null.
  BeamSearch(const Tensor& ctc_logp, S2sScorer s2s, const RecurrentLM* lm, DecodeConfig cfg,
             std::vector<int> tokens, std::size_t max_len);

  std::vector<Hypothesis> initial() const;

  struct Step {
    std::vector<Hypothesis> live;
    std::vector<Hypothesis> finished;
  };
  // Expands every live hypothesis by every candidate and eos; keeps the top
  // `beam` unfinished expansions; all eos expansions move to `finished`.
  Step beam_step(const std::vector<Hypothesis>& beams) const;

  struct Result {
    std::vector<Hypothesis> nbest;
    bool complete = true;  // false when no hypothesis reached eos with finite score
  };
  Result run() const;

  double fused(double ctc_lp, double s2s_lp, double lm_lp) const {
    return cfg_.ctc_weight * ctc_lp + cfg_.beta1 * s2s_lp + cfg_.beta2 * lm_lp;
  }

 private:
  Hypothesis extend(const Hypothesis& h, int token, const std::vector<double>& s2s) const;

  CtcPrefixScorer ctc_;
  S2sScorer s2s_;
  const RecurrentLM* lm_;
  DecodeConfig cfg_;
  std::vector<int> tokens_;
  std::size_t max_len_;
};

// Ids the decoder may emit besides eos: unk and all content tokens.
std::vector<int> default_expansion_tokens(std::size_t vocab_size);

BeamSearch::Result decode(const FeatureMatrix& features, AsrModel& model, const RecurrentLM* lm,
                          const DecodeConfig& cfg);

struct RescoredHypothesis {
  Hypothesis hyp;
  double r2l_lp = 0.0;
  std::size_t wordcount = 0;
  double score = 0.0;
};

// score = s2s_lp + gamma1 * wordcount + gamma2 * log P_r2l; stable, descending.
std::vector<RescoredHypothesis> rescore(const std::vector<Hypothesis>& nbest,
                                        const RecurrentLM* r2l_lm, double gamma1, double gamma2);

struct NbestEntry {
  std::string utt_id;
  std::size_t rank = 0;
  double combined = 0.0;
  double s2s = 0.0;
  double ctc = 0.0;
  double lm = 0.0;
  std::string transcript;
  // Rescoring columns.
  std::optional<double> r2l;
  std::optional<std::size_t> wordcount;
  std::optional<double> final_score;
};

std::string format_nbest_line(const NbestEntry& e);
std::vector<NbestEntry> parse_nbest(std::string_view text, bool has_rescore_columns = false);

}  // namespace semask

#endif  // SEMASK_DECODE_HPP_
