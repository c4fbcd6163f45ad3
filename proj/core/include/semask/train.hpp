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

#ifndef SEMASK_TRAIN_HPP_
#define SEMASK_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semask/alignment.hpp"
#include "semask/augment.hpp"
#include "semask/autograd.hpp"
#include "semask/checkpoint.hpp"
#include "semask/features.hpp"
#include "semask/lm.hpp"
#include "semask/model.hpp"

namespace semask {

struct TrainConfig {
  std::size_t warmup_steps = 25000;
  double peak_scale = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  std::size_t epochs = 40;
  std::size_t max_steps = 0;        // 0: no limit besides epochs
  std::size_t batch_frames = 4000;  // frame budget per batch, at least one utterance
  std::size_t avg_last_k = 5;
  double grad_clip = 5.0;           // global L2 norm; 0 disables
  double alpha = 0.7;
  double label_smoothing = 0.0;
  std::uint64_t seed = 0;

  static TrainConfig desk();
  void validate() const;
};

double noam_lr(std::size_t step, std::size_t d_model, std::size_t warmup, double scale);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

// One bias-corrected Adam update from each Parameter::grad. Throws
// NumericError naming the first parameter with a non-finite gradient.
void adam_step(ParameterSet& params, AdamState& state, double lr, const AdamConfig& cfg = {});

double global_grad_norm(const ParameterSet& params);
// Rescales all gradients so the global norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

struct TrainExample {
  std::string id;
  FeatureMatrix features;
  std::vector<int> labels;               // content ids, no sos/eos
  std::optional<std::vector<TokenSpan>> spans;
};

struct LossPoint {
  std::size_t step = 0;
  double lr = 0.0;
  double l_total = 0.0;  // per target token
  double l_s2s = 0.0;
  double l_ctc = 0.0;
};

std::string format_loss_point(const LossPoint& p);

struct TrainResult {
  std::vector<Checkpoint> checkpoints;  // one per epoch, plus a final one when max_steps cuts in
  std::vector<LossPoint> curve;
  std::size_t steps = 0;
  std::size_t skipped_infeasible = 0;
};

struct TrainHooks {
  std::function<void(const Checkpoint&, std::size_t epoch)> on_checkpoint;
  std::function<void(const LossPoint&)> on_step;
};

// Per-utterance losses, without touching gradients.
struct UtteranceLoss {
  double l_s2s = 0.0;
  double l_ctc = 0.0;
  std::size_t tokens = 0;
  bool feasible = true;
};

// Forward (and backward when `backward_scale` is set) on one example whose
// features were already augmented.
UtteranceLoss utterance_loss(AsrModel& model, const FeatureMatrix& features,
                             std::span<const int> labels, double alpha, double label_smoothing,
                             Rng* dropout_rng, bool train,
                             std::optional<double> backward_scale = std::nullopt);

std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainExample> data,
                                                   std::span<const std::size_t> order,
                                                   std::size_t frame_budget);

TrainResult train_loop(std::span<const TrainExample> data, AsrModel& model,
                       const TrainConfig& cfg, const MaskConfig& mask,
                       const TrainHooks& hooks = {});

// Argmax attention decoding until eos or max_len tokens.
std::vector<int> greedy_decode(AsrModel& model, const FeatureMatrix& features,
                               std::size_t max_len);

std::size_t edit_distance(std::span<const int> a, std::span<const int> b);

// 1 - total edit distance / total reference tokens.
double token_accuracy(AsrModel& model, std::span<const TrainExample> data);

struct LmTrainConfig {
  std::size_t epochs = 10;
  double lr = 3e-3;
  double grad_clip = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Sentences are content ids in reading order; right-to-left models see them
// reversed. Returns mean negative log-likelihood per token for each epoch.
std::vector<double> train_lm(RecurrentLM& lm, const std::vector<std::vector<int>>& sentences,
                             const LmTrainConfig& cfg);

}  // namespace semask

#endif  // SEMASK_TRAIN_HPP_
