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

#include "semask/loss.hpp"

#include <cmath>
#include <limits>

#include "semask/errors.hpp"
#include "semask/ops.hpp"

namespace semask {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

std::size_t ctc_min_frames(std::span<const int> labels) {
  std::size_t n = labels.size();
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

CtcResult ctc_log_prob(const Var& logp, std::span<const int> labels, int blank) {
  Tape& tape = logp.tape();
  const Shape& shape = logp.shape();
  if (shape.size() != 2) throw DimensionError("ctc_log_prob: logp must be T x V");
  const std::size_t frames = shape[0], classes = shape[1];
  if (labels.empty()) throw ContractError("ctc_log_prob: empty label sequence");
  for (int l : labels) {
    if (l == blank) throw ContractError("ctc_log_prob: labels contain the blank id");
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw DimensionError("ctc_log_prob: label " + std::to_string(l) + " outside " +
                           std::to_string(classes) + " classes");
    }
  }
  if (frames < ctc_min_frames(labels)) {
    return {tape.constant(Tensor::scalar(kNegInf)), false};
  }

  // Extended label sequence: blank, l1, blank, l2, ..., blank.
  const std::size_t states = 2 * labels.size() + 1;
  std::vector<int> ext(states, blank);
  for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];

  auto emit = [&](std::size_t t, std::size_t s) {
    return ops::element(logp, t * classes + static_cast<std::size_t>(ext[s]));
  };

  // Unreachable states hold an invalid Var.
  std::vector<Var> alpha(states), next(states);
  alpha[0] = emit(0, 0);
  if (states > 1) alpha[1] = emit(0, 1);
  std::vector<Var> terms;
  terms.reserve(3);
  for (std::size_t t = 1; t < frames; ++t) {
    // States that can still reach the end from frame t.
    const std::size_t remaining = frames - t;
    const std::size_t lo = states > 2 * remaining ? states - 2 * remaining : 0;
    for (std::size_t s = 0; s < states; ++s) {
      next[s] = Var();
      if (s < lo || s > 2 * t + 1) continue;
      terms.clear();
      if (alpha[s].valid()) terms.push_back(alpha[s]);
      if (s >= 1 && alpha[s - 1].valid()) terms.push_back(alpha[s - 1]);
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2] && alpha[s - 2].valid()) {
        terms.push_back(alpha[s - 2]);
      }
      if (terms.empty()) continue;
      Var acc = terms.size() == 1 ? terms[0] : ops::logsumexp(terms);
      next[s] = ops::add(acc, emit(t, s));
    }
    std::swap(alpha, next);
  }
  terms.clear();
  if (alpha[states - 1].valid()) terms.push_back(alpha[states - 1]);
  if (states >= 2 && alpha[states - 2].valid()) terms.push_back(alpha[states - 2]);
  if (terms.empty()) return {tape.constant(Tensor::scalar(kNegInf)), false};
  return {ops::logsumexp(terms), true};
}

double ctc_log_prob(const Tensor& logp, std::span<const int> labels, int blank) {
  Tape tape(false);
  return ctc_log_prob(tape.constant(logp), labels, blank).log_prob.value().item();
}

Var s2s_log_prob(const Var& logits, std::span<const int> labels, double label_smoothing) {
  const Shape& shape = logits.shape();
  if (shape.size() != 2) throw DimensionError("s2s_log_prob: logits must be L x V");
  if (shape[0] != labels.size()) {
    throw DimensionError("s2s_log_prob: " + std::to_string(shape[0]) + " logit rows for " +
                         std::to_string(labels.size()) + " labels");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label smoothing must lie in [0, 1)");
  }
  Var logp = ops::log_softmax(logits);
  Var target = ops::sum(ops::pick(logp, labels));
  if (label_smoothing == 0.0) return target;
  Var uniform = ops::scale(ops::sum(logp), 1.0 / static_cast<double>(shape[1]));
  return ops::add(ops::scale(target, 1.0 - label_smoothing),
                  ops::scale(uniform, label_smoothing));
}

LossBreakdown joint_loss(double l_s2s, double l_ctc, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return LossBreakdown{l_s2s, l_ctc, alpha, alpha * l_s2s + (1.0 - alpha) * l_ctc};
}

Var joint_loss(const Var& s2s_log_prob, const Var& ctc_log_prob, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return ops::add(ops::scale(s2s_log_prob, -alpha), ops::scale(ctc_log_prob, -(1.0 - alpha)));
}

}  // namespace semask
