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

#include "semask/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "semask/errors.hpp"
#include "semask/log.hpp"
#include "semask/loss.hpp"
#include "semask/ops.hpp"

namespace semask {

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.warmup_steps = 200;
  cfg.epochs = 20;
  cfg.batch_frames = 2000;
  return cfg;
}

void TrainConfig::validate() const {
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (avg_last_k < 1) throw ConfigError("avg_last_k must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(peak_scale > 0.0)) throw ConfigError("peak_scale must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing must lie in [0, 1)");
  }
}

double noam_lr(std::size_t step, std::size_t d_model, std::size_t warmup, double scale) {
  if (step == 0) throw ContractError("noam_lr: step counts from 1");
  if (warmup == 0 || d_model == 0) throw ContractError("noam_lr: warmup and d_model must be >= 1");
  const auto s = static_cast<double>(step);
  const auto w = static_cast<double>(warmup);
  return scale * std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

void adam_step(ParameterSet& params, AdamState& state, double lr, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m.emplace_back(params[i].value.shape());
      state.v.emplace_back(params[i].value.shape());
    }
  }
  if (state.m.size() != params.size()) throw ContractError("adam_step: state/parameter mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params[i].grad.data()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + params[i].name + "' at step " +
                           std::to_string(state.t + 1));
      }
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    const auto g = params[i].grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
    }
  }
}

double global_grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params[i].grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (double& g : params[i].grad.data()) g *= s;
    }
  }
  return norm;
}

std::string format_loss_point(const LossPoint& p) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu %.9g %.6f %.6f %.6f", p.step, p.lr, p.l_total, p.l_s2s,
                p.l_ctc);
  return buf;
}

UtteranceLoss utterance_loss(AsrModel& model, const FeatureMatrix& features,
                             std::span<const int> labels, double alpha, double label_smoothing,
                             Rng* dropout_rng, bool train, std::optional<double> backward_scale) {
  Tape tape(backward_scale.has_value());
  ForwardContext ctx{tape, dropout_rng, train};
  EncoderOutput enc = model.encode(ctx, features);
  Var ctc_lp = model.ctc_log_probs(ctx, enc);
  CtcResult ctc = ctc_log_prob(ctc_lp, labels, Vocab::kBlank);
  UtteranceLoss out;
  out.tokens = labels.size() + 1;
  if (!ctc.feasible) {
    out.feasible = false;
    return out;
  }
  std::vector<int> prefix{Vocab::kSos};
  prefix.insert(prefix.end(), labels.begin(), labels.end());
  std::vector<int> targets(labels.begin(), labels.end());
  targets.push_back(Vocab::kEos);
  Var logits = model.decode_logits(ctx, prefix, enc);
  Var s2s = s2s_log_prob(logits, targets, label_smoothing);
  out.l_s2s = -s2s.value().item();
  out.l_ctc = -ctc.log_prob.value().item();
  if (backward_scale) {
    Var loss = ops::scale(joint_loss(s2s, ctc.log_prob, alpha), *backward_scale);
    tape.backward(loss);
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainExample> data,
                                                   std::span<const std::size_t> order,
                                                   std::size_t frame_budget) {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  std::size_t frames = 0;
  for (std::size_t idx : order) {
    const std::size_t f = data[idx].features.frames();
    if (!cur.empty() && frames + f > frame_budget) {
      batches.push_back(std::move(cur));
      cur.clear();
      frames = 0;
    }
    cur.push_back(idx);
    frames += f;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

TrainResult train_loop(std::span<const TrainExample> data, AsrModel& model,
                       const TrainConfig& cfg, const MaskConfig& mask,
                       const TrainHooks& hooks) {
  cfg.validate();
  mask.validate();
  if (data.empty()) throw InputError("train_loop: empty dataset");
  if (mask.enable_semantic_mask && mask.token_mask_prob > 0.0) {
    for (const auto& ex : data) {
      if (!ex.spans) throw InputError("no alignment for utterance '" + ex.id + "'");
    }
  }
  ParameterSet& params = model.params();
  const std::uint64_t fingerprint = model.config().fingerprint();
  const AdamConfig adam{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  AdamState state;
  TrainResult result;
  Rng order_rng(derive_seed(cfg.seed, "order"));
  std::vector<std::size_t> order(data.size());

  auto emit_checkpoint = [&](std::size_t epoch) {
    result.checkpoints.push_back(snapshot(params, result.steps, fingerprint));
    if (hooks.on_checkpoint) hooks.on_checkpoint(result.checkpoints.back(), epoch);
  };

  bool stop = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order.begin(), order.end());
    for (const auto& batch : make_batches(data, order, cfg.batch_frames)) {
      const std::size_t step = result.steps + 1;
      std::size_t tokens = 0;
      for (std::size_t idx : batch) tokens += data[idx].labels.size() + 1;
      params.zero_grad();
      LossPoint point;
      point.step = step;
      point.lr = noam_lr(step, model.config().d_model, cfg.warmup_steps, cfg.peak_scale);
      std::size_t used_tokens = 0;
      for (std::size_t idx : batch) {
        const TrainExample& ex = data[idx];
        const std::string key = ex.id + "#" + std::to_string(step);
        MaskConfig utt_mask = mask;
        Rng aug_rng(derive_seed(cfg.seed, "augment:" + key));
        std::vector<FrameSpan> spans;
        if (ex.spans) spans = spans_to_frames(*ex.spans, ex.features.frame_shift_ms, ex.features.frames());
        const MaskResult aug = apply_pipeline(ex.features, spans, utt_mask, aug_rng);
        Rng drop_rng(derive_seed(cfg.seed, "dropout:" + key));
        const UtteranceLoss l =
            utterance_loss(model, aug.features, ex.labels, cfg.alpha, cfg.label_smoothing,
                           &drop_rng, true, 1.0 / static_cast<double>(tokens));
        if (!l.feasible) {
          ++result.skipped_infeasible;
          log_warning("skipping '" + ex.id + "': too few frames for its CTC target");
          continue;
        }
        point.l_s2s += l.l_s2s;
        point.l_ctc += l.l_ctc;
        used_tokens += l.tokens;
      }
      if (used_tokens > 0) {
        point.l_s2s /= static_cast<double>(used_tokens);
        point.l_ctc /= static_cast<double>(used_tokens);
        point.l_total = joint_loss(point.l_s2s, point.l_ctc, cfg.alpha).total;
        clip_grad_norm(params, cfg.grad_clip);
        adam_step(params, state, point.lr, adam);
      }
      result.steps = step;
      result.curve.push_back(point);
      if (hooks.on_step) hooks.on_step(point);
      if (cfg.max_steps != 0 && result.steps >= cfg.max_steps) {
        stop = true;
        break;
      }
    }
    emit_checkpoint(epoch);
  }
  if (result.skipped_infeasible > 0) {
    log_warning("skipped " + std::to_string(result.skipped_infeasible) +
                " utterance visits with infeasible CTC targets");
  }
  return result;
}

std::vector<int> greedy_decode(AsrModel& model, const FeatureMatrix& features,
                               std::size_t max_len) {
  Tape tape(false);
  ForwardContext ctx{tape, nullptr, false};
  EncoderOutput enc = model.encode(ctx, features);
  std::vector<int> prefix{Vocab::kSos};
  while (prefix.size() <= max_len) {
    const Tensor& logits = model.decode_logits(ctx, prefix, enc).value();
    const auto last = logits.row(logits.dim(0) - 1);
    // Reserved ids other than eos are never emitted.
    int best = Vocab::kEos;
    for (int id = Vocab::kEos; static_cast<std::size_t>(id) < last.size(); ++id) {
      if (last[static_cast<std::size_t>(id)] > last[static_cast<std::size_t>(best)]) best = id;
    }
    if (best == Vocab::kEos) break;
    prefix.push_back(best);
  }
  return {prefix.begin() + 1, prefix.end()};
}

std::size_t edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double token_accuracy(AsrModel& model, std::span<const TrainExample> data) {
  std::size_t errors = 0;
  std::size_t total = 0;
  for (const auto& ex : data) {
    const std::size_t max_len = 2 * ex.labels.size() + 5;
    const auto hyp = greedy_decode(model, ex.features, max_len);
    errors += edit_distance(hyp, ex.labels);
    total += ex.labels.size();
  }
  if (total == 0) throw ContractError("token_accuracy: no reference tokens");
  return 1.0 - static_cast<double>(errors) / static_cast<double>(total);
}

void LmTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("LM epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("LM lr must be positive");
  if (grad_clip < 0.0) throw ConfigError("LM grad_clip must be >= 0");
}

std::vector<double> train_lm(RecurrentLM& lm, const std::vector<std::vector<int>>& sentences,
                             const LmTrainConfig& cfg) {
  cfg.validate();
  if (sentences.empty()) throw InputError("train_lm: no sentences");
  const bool reverse = lm.config().direction == LmDirection::kRightToLeft;
  Rng rng(derive_seed(cfg.seed, "lm-order"));
  std::vector<std::size_t> order(sentences.size());
  AdamState state;
  const AdamConfig adam;
  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t idx : order) {
      std::vector<int> seq = sentences[idx];
      if (reverse) std::reverse(seq.begin(), seq.end());
      lm.params().zero_grad();
      Tape tape;
      Var lp = lm.sequence_log_prob(tape, seq, true);
      const double n = static_cast<double>(seq.size() + 1);
      tape.backward(ops::scale(lp, -1.0 / n));
      nll -= lp.value().item();
      tokens += seq.size() + 1;
      clip_grad_norm(lm.params(), cfg.grad_clip);
      adam_step(lm.params(), state, cfg.lr, adam);
    }
    history.push_back(nll / static_cast<double>(tokens));
  }
  return history;
}

}  // namespace semask
