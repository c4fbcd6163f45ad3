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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. `acceptance N...` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "semask/augment.hpp"
#include "semask/checkpoint.hpp"
#include "semask/decode.hpp"
#include "semask/loss.hpp"
#include "semask/model.hpp"
#include "semask/train.hpp"
#include "support/beam_oracle.hpp"
#include "support/grad_cases.hpp"
#include "support/oracles.hpp"
#include "support/synth_data.hpp"

namespace semask {
namespace {

using testing::random_log_probs;
using testing::random_tensor;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// 1: forward algorithm against exhaustive path enumeration.
Outcome ctc_oracle() {
  Rng rng(101);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto frames = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto classes = static_cast<std::size_t>(rng.uniform_int(2, 3));
    const Tensor logp = random_log_probs(frames, classes, rng);
    std::vector<int> labels;
    const auto len = rng.uniform_int(1, static_cast<std::int64_t>(frames));
    for (std::int64_t i = 0; i < len; ++i) {
      labels.push_back(static_cast<int>(rng.uniform_int(1, static_cast<std::int64_t>(classes) - 1)));
    }
    if (ctc_min_frames(labels) > frames) labels.resize(1);
    const double got = ctc_log_prob(logp, labels);
    const double want = testing::ctc_bruteforce_log_prob(logp, labels, 0);
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-10, fmt("200 instances, max |diff| %.3g (tol 1e-10)", worst)};
}

// 2: probabilities of every collapsed output sum to one.
Outcome ctc_normalization() {
  Rng rng(102);
  double worst = 0.0;
  for (std::size_t classes : {2u, 3u}) {
    for (std::size_t frames = 1; frames <= 4; ++frames) {
      for (int rep = 0; rep < 5; ++rep) {
        const Tensor logp = random_log_probs(frames, classes, rng);
        double all_blank = 0.0;
        for (std::size_t t = 0; t < frames; ++t) all_blank += logp.at(t, 0);
        double total = std::exp(all_blank);
        for (std::size_t len = 1; len <= frames; ++len) {
          testing::for_each_string(len, classes - 1, [&](const std::vector<int>& s) {
            std::vector<int> labels(s);
            for (int& l : labels) ++l;
            if (ctc_min_frames(labels) <= frames) total += std::exp(ctc_log_prob(logp, labels));
          });
        }
        worst = std::max(worst, std::abs(total - 1.0));
      }
    }
  }
  return {worst <= 1e-9, fmt("T<=4, V in {2,3}: max |sum-1| %.3g (tol 1e-9)", worst)};
}

// 3: finite differences for every op and for the joint loss of a small model.
Outcome gradient_suite() {
  Rng rng(103);
  double worst_op = 0.0;
  std::string worst_name;
  auto cases = testing::op_grad_cases();
  const std::vector<int> labels{1, 2, 1};
  cases.push_back({"ctc_log_prob", {{6, 3}}, [labels](Tape&, const std::vector<Var>& v) {
                     return ctc_log_prob(ops::log_softmax(v[0]), labels).log_prob;
                   }});
  cases.push_back({"s2s_log_prob", {{3, 5}}, [labels](Tape&, const std::vector<Var>& v) {
                     return s2s_log_prob(v[0], labels, 0.1);
                   }});
  for (const auto& gc : cases) {
    std::vector<Tensor> inputs;
    for (const auto& s : gc.shapes) inputs.push_back(random_tensor(s, rng, gc.lo, gc.hi));
    const auto r = testing::gradcheck(gc.fn, inputs);
    if (r.max_rel_error > worst_op) {
      worst_op = r.max_rel_error;
      worst_name = gc.name;
    }
  }

  ModelConfig mc = ModelConfig::tiny(16, 8);
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.n_enc_layers = 2;
  mc.n_dec_layers = 2;
  mc.d_ff = 32;
  AsrModel model(mc, 104);
  FeatureMatrix f(12, 16);
  for (double& x : f.values()) x = rng.uniform(-1.5, 1.5);
  const std::vector<int> words{4, 6, 5};
  auto loss = [&](Tape& tape) {
    ForwardContext ctx{tape};
    EncoderOutput enc = model.encode(ctx, f);
    std::vector<int> prefix{Vocab::kSos}, targets(words);
    prefix.insert(prefix.end(), words.begin(), words.end());
    targets.push_back(Vocab::kEos);
    Var s2s = s2s_log_prob(model.decode_logits(ctx, prefix, enc), targets);
    Var ctc = ctc_log_prob(model.ctc_log_probs(ctx, enc), words).log_prob;
    return joint_loss(s2s, ctc);
  };
  model.params().zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < model.params().size(); ++i) total += model.params()[i].value.size();
  double worst_model = 0.0;
  std::size_t sampled = 0;
  while (sampled < 20) {
    auto flat = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(total) - 1));
    std::size_t i = 0;
    while (flat >= model.params()[i].value.size()) flat -= model.params()[i++].value.size();
    Parameter& p = model.params()[i];
    const double x0 = p.value[flat], h = 1e-5;
    p.value[flat] = x0 + h;
    Tape tp(false);
    const double fp = loss(tp).value().item();
    p.value[flat] = x0 - h;
    Tape tm(false);
    const double fm = loss(tm).value().item();
    p.value[flat] = x0;
    const double numeric = (fp - fm) / (2.0 * h);
    if (std::abs(numeric) < 1e-8 && std::abs(p.grad[flat]) < 1e-8) continue;
    worst_model = std::max(worst_model, testing::rel_error(p.grad[flat], numeric));
    ++sampled;
  }
  const bool ok = worst_op < 1e-4 && worst_model < 1e-4;
  return {ok, std::to_string(cases.size()) + " ops, worst " + worst_name +
                  fmt(" %.3g; joint loss 20 params worst %.3g (tol 1e-4)", worst_op,
                      worst_model)};
}

// 4: semantic-mask invariants.
Outcome semantic_mask_invariants() {
  Rng rng(105);
  FeatureMatrix f(60, 8);
  for (double& x : f.values()) x = rng.uniform(-3.0, 3.0);
  std::vector<FrameSpan> spans;
  for (std::size_t i = 0; i < 6; ++i) spans.push_back({i, 2 + i * 9, 2 + i * 9 + 6});
  const std::vector<double> mean = utterance_mean(f);
  MaskConfig cfg;
  cfg.token_mask_prob = 0.4;
  bool partition = true, exact_fill = true;
  for (int draw = 0; draw < 200; ++draw) {
    const MaskResult r = semantic_mask(f, spans, cfg, rng);
    std::vector<bool> masked(f.frames(), false);
    for (std::size_t k : r.masked_tokens) {
      for (std::size_t t = spans[k].start_frame; t < spans[k].end_frame; ++t) masked[t] = true;
    }
    for (std::size_t t = 0; t < f.frames(); ++t) {
      for (std::size_t d = 0; d < f.dims(); ++d) {
        if (masked[t]) {
          exact_fill = exact_fill && r.features.at(t, d) == mean[d];
        } else {
          partition = partition && r.features.at(t, d) == f.at(t, d);
        }
      }
    }
  }
  MaskConfig zero = cfg;
  zero.token_mask_prob = 0.0;
  const MaskResult id = semantic_mask(f, spans, zero, rng);
  const bool identity = id.masked_tokens.empty() && std::equal(id.features.values().begin(),
                                                               id.features.values().end(),
                                                               f.values().begin());
  const std::size_t n = 100000;
  Rng draws(106);
  const auto picked = sample_tokens(n, 0.15, TokenSampling::kBernoulli, draws);
  const double rate = static_cast<double>(picked.size()) / static_cast<double>(n);
  const double sigma = std::sqrt(0.15 * 0.85 / static_cast<double>(n));
  const bool concentrated = std::abs(rate - 0.15) <= 4.0 * sigma;
  return {partition && exact_fill && identity && concentrated,
          std::string("partition ") + (partition ? "ok" : "bad") + ", mean fill " +
              (exact_fill ? "exact" : "inexact") + ", prob 0 " + (identity ? "identity" : "changed") +
              fmt(", rate %.5f over 1e5 (|dev| %.2f sigma)", rate, std::abs(rate - 0.15) / sigma)};
}

// 5: wide beam equals exhaustive argmax of the fused objective.
Outcome beam_oracle() {
  Rng rng(107);
  const std::size_t vocab = 7;
  const std::vector<int> tokens{4, 5, 6};
  LmConfig lc;
  lc.vocab_size = vocab;
  lc.hidden = 4;
  std::size_t agree = 0;
  double score_gap = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto frames = static_cast<std::size_t>(rng.uniform_int(3, 6));
    const Tensor logp = random_log_probs(frames, vocab, rng);
    RecurrentLM lm(lc, 200 + static_cast<std::uint64_t>(inst));
    DecodeConfig cfg;
    cfg.beam = 30;
    const auto s2s = testing::fake_s2s(vocab);
    const auto best = BeamSearch(logp, s2s, &lm, cfg, tokens, 3).run().nbest.front();
    const auto oracle = testing::exhaustive(logp, s2s, &lm, cfg, tokens, 3).front();
    if (best.transcript() == oracle.words) ++agree;
    score_gap = std::max(score_gap, std::abs(best.combined - oracle.score));
  }
  return {agree == 50 && score_gap <= 1e-9,
          std::to_string(agree) + "/50 instances match exhaustive argmax" +
              fmt(", max score gap %.3g (tol 1e-9)", score_gap)};
}

// 6: only the front-end breaks permutation symmetry.
Outcome positional_property() {
  ModelConfig mc = ModelConfig::tiny(16, 8);
  AsrModel model(mc, 108);
  Rng rng(109);
  const Tensor x = random_tensor({9, mc.d_model}, rng);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  auto permute = [](const Tensor& t, const std::vector<std::size_t>& p) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t c = 0; c < t.dim(1); ++c) out.at(i, c) = t.at(p[i], c);
    }
    return out;
  };
  Tape tape(false);
  ForwardContext ctx{tape};
  const Tensor y = model.encoder_stack(ctx, tape.constant(x)).value();
  const Tensor yp = model.encoder_stack(ctx, tape.constant(permute(x, perm))).value();
  const Tensor py = permute(y, perm);
  double equi = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) equi = std::max(equi, std::abs(yp[i] - py[i]));

  FeatureMatrix f(16, 16);
  for (double& v : f.values()) v = rng.uniform(-2.0, 2.0);
  const Tensor full = model.encode(ctx, f).states.value();
  int found_at = 0;
  for (int trial = 1; trial <= 10 && found_at == 0; ++trial) {
    std::vector<std::size_t> p(16);
    std::iota(p.begin(), p.end(), 0);
    rng.shuffle(p.begin(), p.end());
    FeatureMatrix g(16, 16);
    for (std::size_t t = 0; t < 16; ++t) {
      for (std::size_t d = 0; d < 16; ++d) g.at(t, d) = f.at(p[t], d);
    }
    const Tensor out = model.encode(ctx, g).states.value();
    // Equivariance would make the encoder outputs a row permutation of each other.
    std::multiset<std::vector<double>> a, b;
    for (std::size_t r = 0; r < full.dim(0); ++r) {
      a.insert(std::vector<double>(full.row(r).begin(), full.row(r).end()));
      b.insert(std::vector<double>(out.row(r).begin(), out.row(r).end()));
    }
    double gap = 0.0;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
      for (std::size_t c = 0; c < ia->size(); ++c) gap = std::max(gap, std::abs((*ia)[c] - (*ib)[c]));
    }
    if (gap > 1e-6) found_at = trial;
  }
  return {equi <= 1e-9 && found_at > 0,
          fmt("stack max |diff| %.3g (tol 1e-9); full encoder counterexample at permutation %.0f",
              equi, found_at)};
}

// 7: the tiny model memorizes a tone-coded corpus; fully masked words make it harder.
struct OverfitRun {
  double accuracy = 0.0;
  std::size_t steps = 0;
  std::size_t first_95 = 0;  // first evaluated step reaching 95%, 0 if never
  double seconds = 0.0;
};

OverfitRun overfit(double mask_prob, std::size_t budget) {
  SynthConfig sc;
  sc.num_utterances = 20;
  const auto data = testing::synth_examples(sc);
  AsrModel model(ModelConfig::tiny(16, testing::synth_vocab(sc).size()), 110);
  TrainConfig tc;
  tc.warmup_steps = 100;
  tc.peak_scale = 0.2;
  tc.epochs = 1000000;
  tc.max_steps = budget;
  tc.batch_frames = 400;
  tc.seed = 111;
  MaskConfig mask;
  mask.token_mask_prob = mask_prob;
  OverfitRun out;
  TrainHooks hooks;
  hooks.on_step = [&](const LossPoint& p) {
    if (out.first_95 == 0 && p.step % 250 == 0 && token_accuracy(model, data) >= 0.95) {
      out.first_95 = p.step;
    }
  };
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = train_loop(data, model, tc, mask, hooks);
  out.steps = r.steps;
  out.accuracy = token_accuracy(model, data);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Outcome overfit_harness() {
  const std::size_t budget = 2000;
  const OverfitRun light = overfit(0.15, budget);
  const OverfitRun full = overfit(1.0, budget);
  return {light.accuracy >= 0.95 && full.accuracy < light.accuracy,
          fmt("mask 0.15: accuracy %.4f after %.0f steps (>= 0.95 by step %.0f); ",
              light.accuracy, static_cast<double>(light.steps),
              static_cast<double>(light.first_95)) +
              fmt("mask 1.0: accuracy %.4f; %.0f s", full.accuracy, light.seconds + full.seconds)};
}

// 8: schedule, optimizer and averaging oracles.
Outcome schedule_and_optimizer() {
  const std::size_t d = 256, w = 25000;
  bool noam = true;
  for (std::size_t s : {std::size_t{1}, w, 4 * w}) {
    const double sd = static_cast<double>(s), wd = static_cast<double>(w);
    const double want = std::min(1.0 / std::sqrt(sd), sd / (wd * std::sqrt(wd))) / 16.0;
    noam = noam && std::abs(noam_lr(s, d, w, 1.0) - want) <= 1e-18 + 1e-15 * want;
  }
  ParameterSet ps;
  ps.add("w", Tensor::vector({0.5, -1.0}));
  AdamState st;
  const double g[5][2] = {{1.0, 0.1}, {-2.0, 0.2}, {0.5, -0.3}, {3.0, 0.0}, {-1.0, 1e-3}};
  double wv[2] = {0.5, -1.0}, m[2] = {0, 0}, v[2] = {0, 0}, adam_err = 0.0;
  for (int k = 0; k < 5; ++k) {
    ps.get("w").grad[0] = g[k][0];
    ps.get("w").grad[1] = g[k][1];
    adam_step(ps, st, 0.01);
    for (int j = 0; j < 2; ++j) {
      m[j] = 0.9 * m[j] + 0.1 * g[k][j];
      v[j] = 0.98 * v[j] + 0.02 * g[k][j] * g[k][j];
      const double mh = m[j] / (1 - std::pow(0.9, k + 1)), vh = v[j] / (1 - std::pow(0.98, k + 1));
      wv[j] -= 0.01 * mh / (std::sqrt(vh) + 1e-9);
      adam_err = std::max(adam_err, std::abs(ps.get("w").value[static_cast<std::size_t>(j)] - wv[j]));
    }
  }
  Rng rng(112);
  std::vector<Checkpoint> cks(4);
  for (std::size_t k = 0; k < 4; ++k) {
    cks[k].step = k + 1;
    cks[k].params.emplace_back("a", random_tensor({3, 3}, rng));
    cks[k].params.emplace_back("b", random_tensor({4}, rng));
  }
  const Checkpoint avg = average_checkpoints(cks);
  double avg_err = 0.0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t i = 0; i < avg.params[p].second.size(); ++i) {
      double sum = 0.0;
      for (const auto& ck : cks) sum += ck.params[p].second[i];
      avg_err = std::max(avg_err, std::abs(avg.params[p].second[i] - sum / 4.0));
    }
  }
  const std::vector<Checkpoint> same(3, cks[0]);
  const Checkpoint idem = average_checkpoints(same);
  double idem_err = 0.0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t i = 0; i < idem.params[p].second.size(); ++i) {
      idem_err = std::max(idem_err, std::abs(idem.params[p].second[i] - cks[0].params[p].second[i]));
    }
  }
  const bool ok = noam && adam_err <= 1e-12 && avg_err <= 1e-12 && idem_err <= 1e-12;
  return {ok, std::string("noam ") + (noam ? "exact" : "off") +
                  fmt(", adam trace err %.3g, average err %.3g, idempotence err %.3g", adam_err,
                      avg_err, idem_err)};
}

// 9: rescoring equation on a hand-built n-best list.
Outcome rescoring() {
  LmConfig lc;
  lc.vocab_size = 8;
  lc.hidden = 4;
  lc.direction = LmDirection::kRightToLeft;
  RecurrentLM r2l(lc, 113);
  for (std::size_t i = 0; i < r2l.params().size(); ++i) r2l.params()[i].value.fill(0.0);
  auto hyp = [](std::vector<int> words, double s2s) {
    Hypothesis h;
    h.tokens.insert(h.tokens.end(), words.begin(), words.end());
    h.tokens.push_back(Vocab::kEos);
    h.s2s_lp = s2s;
    return h;
  };
  const std::vector<Hypothesis> nbest{hyp({4}, -1.0), hyp({4, 5}, -1.25), hyp({6, 5, 7}, -0.5)};
  // Uniform r2l model: log P_r2l(y) = -|y| log 8.
  const double l8 = std::log(8.0);
  const double want[3] = {-1.0 + 0.5 * 1 - 0.7 * 1 * l8, -1.25 + 0.5 * 2 - 0.7 * 2 * l8,
                          -0.5 + 0.5 * 3 - 0.7 * 3 * l8};
  const auto r = rescore(nbest, &r2l, 0.5, 0.7);
  bool exact = r.size() == 3;
  std::set<std::vector<int>> seen;
  for (const auto& x : r) {
    const std::size_t n = x.wordcount;
    exact = exact && std::abs(x.score - want[n - 1]) <= 1e-12;
    seen.insert(x.hyp.tokens);
  }
  bool sorted = true;
  for (std::size_t i = 1; i < r.size(); ++i) sorted = sorted && r[i - 1].score >= r[i].score;
  const auto plain = rescore(nbest, &r2l, 0.0, 0.0);
  const bool s2s_order = plain[0].hyp.s2s_lp == -0.5 && plain[1].hyp.s2s_lp == -1.0 &&
                         plain[2].hyp.s2s_lp == -1.25;
  const bool permutation = seen.size() == 3;
  return {exact && sorted && s2s_order && permutation,
          std::string("scores ") + (exact ? "exact" : "wrong") + ", order " +
              (sorted ? "descending" : "unsorted") + ", zero weights " +
              (s2s_order ? "keep s2s order" : "reorder") + ", output " +
              (permutation ? "is a permutation" : "drops entries")};
}

// 10: two identical pipeline runs agree byte for byte.
struct PipelineBytes {
  std::vector<std::uint8_t> checkpoint;
  std::string nbest;
  std::string curve;
};

PipelineBytes pipeline_run() {
  SynthConfig sc;
  sc.num_utterances = 4;
  sc.seed = 114;
  const auto data = testing::synth_examples(sc);
  AsrModel model(ModelConfig::tiny(16, testing::synth_vocab(sc).size()), 115);
  TrainConfig tc;
  tc.warmup_steps = 10;
  tc.peak_scale = 0.2;
  tc.epochs = 3;
  tc.batch_frames = 300;
  tc.seed = 116;
  MaskConfig mask;
  mask.enable_time_warp = true;
  mask.enable_freq_mask = true;
  mask.freq_width = 4;
  const TrainResult r = train_loop(data, model, tc, mask);
  PipelineBytes out;
  const std::size_t k = std::min<std::size_t>(2, r.checkpoints.size());
  const Checkpoint avg = average_checkpoints(
      std::span<const Checkpoint>(r.checkpoints).subspan(r.checkpoints.size() - k));
  out.checkpoint = encode_checkpoint(avg);
  load_into(avg, model.params(), model.config().fingerprint());
  for (const auto& p : r.curve) out.curve += format_loss_point(p) + '\n';
  DecodeConfig dc;
  dc.beam = 3;
  dc.n_best = 3;
  for (const auto& ex : data) {
    const auto res = decode(ex.features, model, nullptr, dc);
    for (std::size_t i = 0; i < res.nbest.size(); ++i) {
      const auto& h = res.nbest[i];
      std::string words;
      for (int t : h.transcript()) words += (words.empty() ? "" : " ") + std::to_string(t);
      out.nbest += format_nbest_line({ex.id, i + 1, h.combined, h.s2s_lp, h.ctc_lp, h.lm_lp,
                                      words, {}, {}, {}}) +
                   '\n';
    }
  }
  return out;
}

Outcome determinism() {
  const PipelineBytes a = pipeline_run(), b = pipeline_run();
  const bool ck = a.checkpoint == b.checkpoint, nb = a.nbest == b.nbest, cv = a.curve == b.curve;
  return {ck && nb && cv && !a.nbest.empty(),
          std::string("checkpoint ") + (ck ? "identical" : "differs") + ", n-best " +
              (nb ? "identical" : "differs") + ", loss curve " + (cv ? "identical" : "differs")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace semask

int main(int argc, char** argv) {
  using namespace semask;
  const std::vector<Criterion> all{
      {1, "ctc_oracle_equivalence", ctc_oracle},
      {2, "ctc_normalization", ctc_normalization},
      {3, "gradient_suite", gradient_suite},
      {4, "semantic_mask_invariants", semantic_mask_invariants},
      {5, "beam_search_oracle", beam_oracle},
      {6, "positional_information", positional_property},
      {7, "overfit_harness", overfit_harness},
      {8, "schedule_optimizer_averaging", schedule_and_optimizer},
      {9, "rescoring", rescoring},
      {10, "determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %-30s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
