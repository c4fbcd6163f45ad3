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

#ifndef SEMASK_LOSS_HPP_
#define SEMASK_LOSS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "semask/autograd.hpp"
#include "semask/tensor.hpp"

namespace semask {

// log P_ctc(labels | x) as a tape scalar. When the lattice is too short for
// the labels, log_prob is a -inf constant and feasible is false.
struct CtcResult {
  Var log_prob;
  bool feasible = true;
};

// Minimum frames needed: one per label plus one blank between repeats.
std::size_t ctc_min_frames(std::span<const int> labels);

// Forward algorithm over the blank-interleaved lattice in log space, built
// from tape logsumexp nodes so gradients come from the tape. logp is
// T x V per-frame log-probabilities with blank at `blank`.
CtcResult ctc_log_prob(const Var& logp, std::span<const int> labels, int blank = 0);

// Value-only convenience wrapper.
double ctc_log_prob(const Tensor& logp, std::span<const int> labels, int blank = 0);

// Teacher-forced sum of log_softmax(logits)[row, label]. With smoothing eps
// each row's target is (1 - eps) on the label plus eps / V on every class.
Var s2s_log_prob(const Var& logits, std::span<const int> labels, double label_smoothing = 0.0);

struct LossBreakdown {
  double l_s2s = 0.0;  // nats
  double l_ctc = 0.0;  // nats
  double alpha = 0.7;
  double total = 0.0;
};

constexpr double kDefaultCtcWeightAlpha = 0.7;

// total = alpha * l_s2s + (1 - alpha) * l_ctc.
LossBreakdown joint_loss(double l_s2s, double l_ctc, double alpha = kDefaultCtcWeightAlpha);

// Tape form of the same objective from the two log-likelihoods.
Var joint_loss(const Var& s2s_log_prob, const Var& ctc_log_prob,
               double alpha = kDefaultCtcWeightAlpha);

}  // namespace semask

#endif  // SEMASK_LOSS_HPP_
