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

#ifndef SEMASK_LM_HPP_
#define SEMASK_LM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semask/autograd.hpp"

namespace semask {

enum class LmDirection { kLeftToRight, kRightToLeft };

const char* to_string(LmDirection d);
LmDirection parse_lm_direction(const std::string& s);

struct LmConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 128;
  LmDirection direction = LmDirection::kLeftToRight;

  void validate() const;
  std::string canonical() const;
  std::uint64_t fingerprint() const;
};

// Recurrent state after the tokens consumed so far. Starts at zeros.
struct LmState {
  std::vector<double> h;
  std::vector<double> c;
  LmDirection direction = LmDirection::kLeftToRight;

  bool operator==(const LmState&) const = default;
};

// Single-layer LSTM language model: embedding -> LSTM cell -> projection.
class RecurrentLM {
 public:
  RecurrentLM(LmConfig cfg, std::uint64_t seed);

  const LmConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  LmState initial_state() const;

  // Consumes `token`; returns log-probabilities of the next token and the new state.
  std::pair<std::vector<double>, LmState> score_step(const LmState& state, int token) const;

  // Log-probabilities of the first token (after consuming sos).
  std::pair<std::vector<double>, LmState> start() const;

  // sum_i log P(y_i | sos, y_<i) in this model's reading order, plus
  // log P(eos | sos, y) when include_eos. Incremental path.
  double sequence_log_prob(std::span<const int> tokens, bool include_eos = false) const;

  // Same quantity on the tape (training and the consistency check).
  Var sequence_log_prob(Tape& tape, std::span<const int> tokens, bool include_eos = false);

 private:
  LmConfig cfg_;
  ParameterSet params_;
};

// log P_r2l(y) = sum_{i=n..1} log P(y_i | y_n .. y_{i+1}): the model reads reversed(y).
double r2l_sequence_score(const RecurrentLM& r2l_lm, std::span<const int> tokens);

}  // namespace semask

#endif  // SEMASK_LM_HPP_
