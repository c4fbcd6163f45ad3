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

#include "semask/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "semask/errors.hpp"
#include "semask/model.hpp"
#include "semask/ops.hpp"

namespace semask {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam == 0) throw ConfigError("beam must be >= 1");
  if (n_best == 0) throw ConfigError("n_best must be >= 1");
  if (!(max_len_ratio > 0.0)) throw ConfigError("max_len_ratio must be positive");
}

CtcPrefixScorer::CtcPrefixScorer(Tensor logp, int blank) : logp_(std::move(logp)), blank_(blank) {
  if (logp_.rank() != 2) throw DimensionError("CtcPrefixScorer: logp must be T x V");
}

CtcPrefixScorer::State CtcPrefixScorer::initial() const {
  const std::size_t frames = logp_.dim(0);
  State s;
  s.r_nonblank.assign(frames, kNegInf);
  s.r_blank.resize(frames);
  double acc = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    acc += logp_.at(t, static_cast<std::size_t>(blank_));
    s.r_blank[t] = acc;
  }
  s.log_psi = 0.0;
  s.last = -1;
  return s;
}

CtcPrefixScorer::State CtcPrefixScorer::extend(const State& g, int token) const {
  const std::size_t frames = logp_.dim(0);
  if (token == blank_ || token < 0 || static_cast<std::size_t>(token) >= logp_.dim(1)) {
    throw DimensionError("CtcPrefixScorer: cannot extend with id " + std::to_string(token));
  }
  const auto c = static_cast<std::size_t>(token);
  const auto b = static_cast<std::size_t>(blank_);
  State h;
  h.last = token;
  h.r_nonblank.assign(frames, kNegInf);
  h.r_blank.assign(frames, kNegInf);
  const bool empty_prefix = g.last < 0;
  // Mass of g that may be followed by c at the next frame: a repeated label
  // needs an intervening blank.
  auto phi = [&](std::size_t t) {
    return token == g.last ? g.r_blank[t] : log_add(g.r_blank[t], g.r_nonblank[t]);
  };
  h.r_nonblank[0] = empty_prefix ? logp_.at(0, c) : kNegInf;
  double psi = h.r_nonblank[0];
  for (std::size_t t = 1; t < frames; ++t) {
    const double ph = phi(t - 1);
    h.r_nonblank[t] = log_add(h.r_nonblank[t - 1], ph) + logp_.at(t, c);
    h.r_blank[t] = log_add(h.r_blank[t - 1], h.r_nonblank[t - 1]) + logp_.at(t, b);
    psi = log_add(psi, ph + logp_.at(t, c));
  }
  h.log_psi = psi;
  return h;
}

double CtcPrefixScorer::finish(const State& s) const {
  const std::size_t last = logp_.dim(0) - 1;
  return log_add(s.r_nonblank[last], s.r_blank[last]);
}

std::pair<double, CtcPrefixScorer::State> ctc_prefix_score(const CtcPrefixScorer& scorer,
                                                           const CtcPrefixScorer::State& state,
                                                           int next_token) {
  if (next_token == Vocab::kEos) return {scorer.finish(state) - state.log_psi, state};
  CtcPrefixScorer::State next = scorer.extend(state, next_token);
  return {next.log_psi - state.log_psi, std::move(next)};
}

std::vector<int> Hypothesis::transcript() const {
  std::vector<int> out;
  for (int t : tokens) {
    if (t != Vocab::kSos && t != Vocab::kEos) out.push_back(t);
  }
  return out;
}

bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.combined != b.combined) return a.combined > b.combined;
  return a.tokens < b.tokens;
}

std::vector<int> default_expansion_tokens(std::size_t vocab_size) {
  std::vector<int> out;
  for (int id = Vocab::kUnk; static_cast<std::size_t>(id) < vocab_size; ++id) out.push_back(id);
  return out;
}

BeamSearch::BeamSearch(const Tensor& ctc_logp, S2sScorer s2s, const RecurrentLM* lm,
                       DecodeConfig cfg, std::vector<int> tokens, std::size_t max_len)
    : ctc_(ctc_logp),
      s2s_(std::move(s2s)),
      lm_(lm),
      cfg_(cfg),
      tokens_(std::move(tokens)),
      max_len_(max_len) {
  cfg_.validate();
  if (!s2s_) throw ContractError("BeamSearch: missing attention scorer");
  for (int t : tokens_) {
    if (t == Vocab::kBlank || t == Vocab::kSos || t == Vocab::kEos) {
      throw ContractError("BeamSearch: reserved id " + std::to_string(t) + " in expansion set");
    }
  }
}

std::vector<Hypothesis> BeamSearch::initial() const {
  Hypothesis h;
  h.ctc_state = ctc_.initial();
  if (lm_) {
    auto [logp, state] = lm_->start();
    h.lm_next = std::move(logp);
    h.lm_state = std::move(state);
  }
  return {std::move(h)};
}

Hypothesis BeamSearch::extend(const Hypothesis& h, int token, const std::vector<double>& s2s) const {
  Hypothesis out;
  out.tokens = h.tokens;
  out.tokens.push_back(token);
  auto [d_ctc, ctc_state] = ctc_prefix_score(ctc_, h.ctc_state, token);
  out.ctc_state = std::move(ctc_state);
  out.ctc_lp = h.ctc_lp + d_ctc;
  out.s2s_lp = h.s2s_lp + s2s.at(static_cast<std::size_t>(token));
  out.lm_lp = h.lm_lp;
  if (lm_) {
    out.lm_lp += h.lm_next.at(static_cast<std::size_t>(token));
    if (token != Vocab::kEos) {
      auto [logp, state] = lm_->score_step(*h.lm_state, token);
      out.lm_next = std::move(logp);
      out.lm_state = std::move(state);
    }
  }
  out.combined = fused(out.ctc_lp, out.s2s_lp, out.lm_lp);
  return out;
}

BeamSearch::Step BeamSearch::beam_step(const std::vector<Hypothesis>& beams) const {
  if (beams.empty()) throw ContractError("beam_step: no live hypotheses");
  Step step;
  std::vector<Hypothesis> candidates;
  for (const Hypothesis& h : beams) {
    const std::vector<double> s2s = s2s_(h.tokens);
    if (h.length() < max_len_) {
      for (int token : tokens_) candidates.push_back(extend(h, token, s2s));
    }
    Hypothesis done = extend(h, Vocab::kEos, s2s);
    if (done.combined != kNegInf) step.finished.push_back(std::move(done));
  }
  std::sort(candidates.begin(), candidates.end(), hypothesis_before);
  // Drop expansions with zero CTC mass; they can never finish with a finite score.
  std::erase_if(candidates, [](const Hypothesis& h) { return h.combined == kNegInf; });
  if (candidates.size() > cfg_.beam) candidates.resize(cfg_.beam);
  step.live = std::move(candidates);
  return step;
}

BeamSearch::Result BeamSearch::run() const {
  std::vector<Hypothesis> live = initial();
  std::vector<Hypothesis> finished;
  std::vector<Hypothesis> last_live = live;
  while (!live.empty()) {
    Step step = beam_step(live);
    for (auto& h : step.finished) finished.push_back(std::move(h));
    if (!step.live.empty()) last_live = step.live;
    live = std::move(step.live);
  }
  Result result;
  if (finished.empty()) {
    result.complete = false;
    std::sort(last_live.begin(), last_live.end(), hypothesis_before);
    result.nbest.push_back(last_live.front());
    return result;
  }
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  if (finished.size() > cfg_.n_best) finished.resize(cfg_.n_best);
  result.nbest = std::move(finished);
  return result;
}

BeamSearch::Result decode(const FeatureMatrix& features, AsrModel& model, const RecurrentLM* lm,
                          const DecodeConfig& cfg) {
  cfg.validate();
  Tape tape(false);
  ForwardContext ctx{tape, nullptr, false};
  EncoderOutput enc = model.encode(ctx, features);
  const Tensor ctc_logp = model.ctc_log_probs(ctx, enc).value();
  S2sScorer s2s = [&](std::span<const int> prefix) {
    const Tensor& logits = model.decode_logits(ctx, prefix, enc).value();
    const std::size_t v = logits.dim(1);
    Var last = tape.constant(Tensor({1, v}, std::vector<double>(logits.row(logits.dim(0) - 1).begin(),
                                                                logits.row(logits.dim(0) - 1).end())));
    const Tensor& lp = ops::log_softmax(last).value();
    return std::vector<double>(lp.data().begin(), lp.data().end());
  };
  const auto max_len = static_cast<std::size_t>(
      std::ceil(cfg.max_len_ratio * static_cast<double>(enc.length())));
  BeamSearch search(ctc_logp, s2s, lm, cfg, default_expansion_tokens(model.config().vocab_size),
                    max_len);
  return search.run();
}

std::vector<RescoredHypothesis> rescore(const std::vector<Hypothesis>& nbest,
                                        const RecurrentLM* r2l_lm, double gamma1, double gamma2) {
  if (nbest.empty()) throw ContractError("rescore: empty n-best list");
  std::vector<RescoredHypothesis> out;
  out.reserve(nbest.size());
  for (const Hypothesis& h : nbest) {
    RescoredHypothesis r;
    r.hyp = h;
    const auto words = h.transcript();
    r.wordcount = words.size();
    r.r2l_lp = r2l_lm ? r2l_sequence_score(*r2l_lm, words) : 0.0;
    r.score = h.s2s_lp + gamma1 * static_cast<double>(r.wordcount) + gamma2 * r.r2l_lp;
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const RescoredHypothesis& a,
                                              const RescoredHypothesis& b) {
    return a.score > b.score;
  });
  return out;
}

std::string format_nbest_line(const NbestEntry& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s %zu %.6f %.6f %.6f %.6f", e.utt_id.c_str(), e.rank,
                e.combined, e.s2s, e.ctc, e.lm);
  std::string line = buf;
  if (e.final_score) {
    std::snprintf(buf, sizeof(buf), " %.6f %zu %.6f", e.r2l.value_or(0.0), e.wordcount.value_or(0),
                  *e.final_score);
    line += buf;
  }
  if (!e.transcript.empty()) line += " " + e.transcript;
  return line;
}

std::vector<NbestEntry> parse_nbest(std::string_view text, bool has_rescore_columns) {
  std::vector<NbestEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ParseError("invalid number '" + s + "'", line_no);
    return v;
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto fields = split_words(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (fields.empty()) continue;
    const std::size_t fixed = has_rescore_columns ? 9 : 6;
    if (fields.size() < fixed) {
      throw ParseError("n-best line needs at least " + std::to_string(fixed) + " fields", line_no);
    }
    NbestEntry e;
    e.utt_id = fields[0];
    e.rank = static_cast<std::size_t>(number(fields[1]));
    e.combined = number(fields[2]);
    e.s2s = number(fields[3]);
    e.ctc = number(fields[4]);
    e.lm = number(fields[5]);
    if (has_rescore_columns) {
      e.r2l = number(fields[6]);
      e.wordcount = static_cast<std::size_t>(number(fields[7]));
      e.final_score = number(fields[8]);
    }
    for (std::size_t i = fixed; i < fields.size(); ++i) {
      if (i > fixed) e.transcript += ' ';
      e.transcript += fields[i];
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace semask
