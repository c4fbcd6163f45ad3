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

#include "semask/lm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semask/alignment.hpp"
#include "semask/errors.hpp"
#include "semask/model.hpp"
#include "semask/ops.hpp"
#include "semask/rng.hpp"

namespace semask {

const char* to_string(LmDirection d) {
  return d == LmDirection::kLeftToRight ? "l2r" : "r2l";
}

LmDirection parse_lm_direction(const std::string& s) {
  if (s == "l2r") return LmDirection::kLeftToRight;
  if (s == "r2l") return LmDirection::kRightToLeft;
  throw ConfigError("LM direction must be l2r or r2l, got '" + s + "'");
}

void LmConfig::validate() const {
  if (vocab_size <= static_cast<std::size_t>(Vocab::kNumReserved) || hidden == 0) {
    throw ConfigError("LM needs hidden > 0 and a vocabulary beyond the reserved ids");
  }
}

std::string LmConfig::canonical() const {
  std::ostringstream os;
  os << "lm;vocab_size=" << vocab_size << ";hidden=" << hidden
     << ";direction=" << to_string(direction);
  return os.str();
}

std::uint64_t LmConfig::fingerprint() const { return fnv1a64(canonical()); }

RecurrentLM::RecurrentLM(LmConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t v = cfg_.vocab_size, d = cfg_.hidden;
  Tensor emb({v, d});
  for (double& x : emb.data()) x = rng.normal() / std::sqrt(static_cast<double>(d));
  params_.add("lm.embed", std::move(emb));
  params_.add("lm.wx", xavier_uniform({d, 4 * d}, d, 4 * d, rng));
  params_.add("lm.wh", xavier_uniform({d, 4 * d}, d, 4 * d, rng));
  Tensor bias({4 * d}, 0.0);
  for (std::size_t j = d; j < 2 * d; ++j) bias[j] = 1.0;  // forget gate opens at init
  params_.add("lm.bias", std::move(bias));
  params_.add("lm.out.weight", xavier_uniform({d, v}, d, v, rng));
  params_.add("lm.out.bias", Tensor({v}, 0.0));
}

LmState RecurrentLM::initial_state() const {
  return LmState{std::vector<double>(cfg_.hidden, 0.0), std::vector<double>(cfg_.hidden, 0.0),
                 cfg_.direction};
}

std::pair<std::vector<double>, LmState> RecurrentLM::score_step(const LmState& state,
                                                                int token) const {
  const std::size_t v = cfg_.vocab_size, d = cfg_.hidden;
  if (token < 0 || static_cast<std::size_t>(token) >= v) {
    throw DimensionError("LM token id " + std::to_string(token) + " outside vocabulary of " +
                         std::to_string(v));
  }
  if (state.h.size() != d || state.c.size() != d) throw DimensionError("LM state size mismatch");
  const Tensor& emb = params_.get("lm.embed").value;
  const Tensor& wx = params_.get("lm.wx").value;
  const Tensor& wh = params_.get("lm.wh").value;
  const Tensor& b = params_.get("lm.bias").value;
  const Tensor& wo = params_.get("lm.out.weight").value;
  const Tensor& bo = params_.get("lm.out.bias").value;

  std::vector<double> gates(4 * d, 0.0);
  const double* x = &emb[static_cast<std::size_t>(token) * d];
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t j = 0; j < 4 * d; ++j) gates[j] += x[p] * wx[p * 4 * d + j];
  }
  std::vector<double> hpart(4 * d, 0.0);
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t j = 0; j < 4 * d; ++j) hpart[j] += state.h[p] * wh[p * 4 * d + j];
  }
  for (std::size_t j = 0; j < 4 * d; ++j) gates[j] = gates[j] + b[j] + hpart[j];

  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  LmState next{std::vector<double>(d), std::vector<double>(d), cfg_.direction};
  for (std::size_t j = 0; j < d; ++j) {
    const double i_gate = sigmoid(gates[j]);
    const double f_gate = sigmoid(gates[d + j]);
    const double cand = std::tanh(gates[2 * d + j]);
    const double o_gate = sigmoid(gates[3 * d + j]);
    next.c[j] = f_gate * state.c[j] + i_gate * cand;
    next.h[j] = o_gate * std::tanh(next.c[j]);
  }

  std::vector<double> logp(v, 0.0);
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t j = 0; j < v; ++j) logp[j] += next.h[p] * wo[p * v + j];
  }
  for (std::size_t j = 0; j < v; ++j) logp[j] += bo[j];
  const double mx = *std::max_element(logp.begin(), logp.end());
  double s = 0.0;
  for (double z : logp) s += std::exp(z - mx);
  const double lse = mx + std::log(s);
  for (double& z : logp) z -= lse;
  return {std::move(logp), std::move(next)};
}

std::pair<std::vector<double>, LmState> RecurrentLM::start() const {
  return score_step(initial_state(), Vocab::kSos);
}

double RecurrentLM::sequence_log_prob(std::span<const int> tokens, bool include_eos) const {
  auto [logp, state] = start();
  double total = 0.0;
  for (int tok : tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg_.vocab_size) {
      throw DimensionError("LM token id " + std::to_string(tok) + " outside vocabulary");
    }
    total += logp[static_cast<std::size_t>(tok)];
    std::tie(logp, state) = score_step(state, tok);
  }
  if (include_eos) total += logp[Vocab::kEos];
  return total;
}

Var RecurrentLM::sequence_log_prob(Tape& tape, std::span<const int> tokens, bool include_eos) {
  using namespace ops;
  const std::size_t d = cfg_.hidden;
  std::vector<int> inputs{Vocab::kSos};
  inputs.insert(inputs.end(), tokens.begin(), tokens.end());
  std::vector<int> targets(tokens.begin(), tokens.end());
  if (include_eos) {
    targets.push_back(Vocab::kEos);
  } else {
    inputs.pop_back();
  }
  if (targets.empty()) return tape.constant(Tensor::scalar(0.0));

  Var emb = tape.param(params_.get("lm.embed"));
  Var wx = tape.param(params_.get("lm.wx"));
  Var wh = tape.param(params_.get("lm.wh"));
  Var b = tape.param(params_.get("lm.bias"));
  Var x_all = linear(embedding(emb, inputs), wx, b);  // L x 4d

  Var h = tape.constant(Tensor({1, d}, 0.0));
  Var c = tape.constant(Tensor({1, d}, 0.0));
  std::vector<Var> hs;
  hs.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Var gates = add(slice_rows(x_all, t, 1), matmul(h, wh));
    Var i_gate = sigmoid(slice_cols(gates, 0, d));
    Var f_gate = sigmoid(slice_cols(gates, d, d));
    Var cand = tanh(slice_cols(gates, 2 * d, d));
    Var o_gate = sigmoid(slice_cols(gates, 3 * d, d));
    c = add(mul(f_gate, c), mul(i_gate, cand));
    h = mul(o_gate, tanh(c));
    hs.push_back(h);
  }
  Var hidden = hs.size() == 1 ? hs.front() : concat(hs, 0);
  Var logits = linear(hidden, tape.param(params_.get("lm.out.weight")),
                      tape.param(params_.get("lm.out.bias")));
  return sum(pick(log_softmax(logits), targets));
}

double r2l_sequence_score(const RecurrentLM& r2l_lm, std::span<const int> tokens) {
  std::vector<int> reversed(tokens.rbegin(), tokens.rend());
  return r2l_lm.sequence_log_prob(reversed, false);
}

}  // namespace semask
