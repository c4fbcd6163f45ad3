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

// semask: featurize, augment, train, average, decode and rescore from the
// command line. Machine-readable results go to files or stdout; diagnostics
// go to stderr. Exit status is 0 on success, 1 for bad input and 2 for
// numeric failures.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "semask/alignment.hpp"
#include "semask/audio_io.hpp"
#include "semask/augment.hpp"
#include "semask/checkpoint.hpp"
#include "semask/config.hpp"
#include "semask/decode.hpp"
#include "semask/errors.hpp"
#include "semask/features.hpp"
#include "semask/lm.hpp"
#include "semask/log.hpp"
#include "semask/model.hpp"
#include "semask/synth.hpp"
#include "semask/train.hpp"

namespace fs = std::filesystem;
using namespace semask;

namespace {

struct ManifestEntry {
  std::string id;
  fs::path path;
  std::size_t frames = 0;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto f = split_words(line);
    if (f.empty()) continue;
    if (f.size() != 3) {
      throw InputError(path.string() + ": line " + std::to_string(line_no) +
                       ": expected `utt_id path num_frames`");
    }
    fs::path p = f[1];
    if (p.is_relative()) p = path.parent_path() / p;
    out.push_back({f[0], p, static_cast<std::size_t>(std::stoull(f[2]))});
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig() : read_run_config(path);
}

std::string speed_tag(double factor) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_sp%g", factor);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

RecurrentLM load_lm(const fs::path& path) {
  const Checkpoint ck = read_checkpoint(path);
  const Tensor* embed = ck.find("lm.embed");
  if (!embed || embed->rank() != 2) throw InputError(path.string() + ": not a language model");
  for (LmDirection dir : {LmDirection::kLeftToRight, LmDirection::kRightToLeft}) {
    LmConfig cfg{embed->dim(0), embed->dim(1), dir};
    if (cfg.fingerprint() == ck.fingerprint) {
      RecurrentLM lm(cfg, 0);
      load_into(ck, lm.params(), cfg.fingerprint());
      return lm;
    }
  }
  throw ValidationError(path.string() + ": fingerprint matches no language model layout");
}

AsrModel load_model(const RunConfig& cfg, const Vocab& vocab, const fs::path& path) {
  ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  AsrModel model(mc, 0);
  load_into(read_checkpoint(path), model.params(), mc.fingerprint());
  return model;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  SynthConfig cfg;
};

int cmd_synth(const SynthArgs& a) {
  const auto corpus = synth_corpus(a.cfg);
  write_synth_corpus(a.out, corpus);
  std::cout << corpus.size() << '\n';
  return 0;
}

struct FeaturizeArgs {
  std::string wav_dir, out_dir, config, text, ctm;
  std::size_t jobs = 1;
};

int cmd_featurize(const FeaturizeArgs& a) {
  const RunConfig cfg = load_config(a.config);
  std::vector<fs::path> wavs;
  if (!fs::is_directory(a.wav_dir)) throw InputError("not a directory: " + a.wav_dir);
  for (const auto& e : fs::directory_iterator(a.wav_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
  }
  std::sort(wavs.begin(), wavs.end());
  const fs::path out_dir = a.out_dir;
  fs::create_directories(out_dir / "feats");

  struct Item {
    fs::path wav;
    double factor;
    std::string id;
    std::size_t frames = 0;
    std::string error;
  };
  std::vector<Item> items;
  for (const auto& w : wavs) {
    for (double f : cfg.speed_factors) {
      const std::string base = w.stem().string();
      items.push_back({w, f, f == 1.0 ? base : base + speed_tag(f), 0, {}});
    }
  }
  parallel_for(items.size(), a.jobs, [&](std::size_t i) {
    Item& it = items[i];
    try {
      Waveform wave = read_wav(it.wav);
      if (it.factor != 1.0) wave = speed_perturb(wave, it.factor);
      FeatureMatrix f = log_mel(wave, cfg.features);
      if (cfg.normalize) f = normalize(f);
      write_smf1(out_dir / "feats" / (it.id + ".smf1"), f);
      it.frames = f.frames();
    } catch (const std::exception& e) {
      it.error = e.what();
    }
  });

  std::ostringstream manifest;
  std::size_t failures = 0;
  for (const auto& it : items) {
    if (!it.error.empty()) {
      log_message(LogLevel::kError, it.wav.string() + ": " + it.error);
      ++failures;
      continue;
    }
    manifest << it.id << " feats/" << it.id << ".smf1 " << it.frames << '\n';
  }
  write_text(out_dir / "feats.manifest", manifest.str());

  if (!a.text.empty()) {
    std::ostringstream text;
    for (const auto& [id, words] : read_transcripts(a.text)) {
      for (double f : cfg.speed_factors) {
        text << (f == 1.0 ? id : id + speed_tag(f)) << ' ' << words << '\n';
      }
    }
    write_text(out_dir / "text", text.str());
  }
  if (!a.ctm.empty()) {
    Alignments scaled;
    for (const auto& [id, spans] : read_ctm(a.ctm)) {
      for (double f : cfg.speed_factors) {
        scaled[f == 1.0 ? id : id + speed_tag(f)] = f == 1.0 ? spans : scale_spans(spans, f);
      }
    }
    write_text(out_dir / "align.ctm", serialize_ctm(scaled));
  }
  return failures == 0 ? 0 : 1;
}

struct AugmentArgs {
  std::string features, ctm, config, out;
  std::uint64_t seed = 0;
  int row = 0;
  bool allow_missing = false;
};

int cmd_augment(const AugmentArgs& a) {
  const RunConfig cfg = load_config(a.config);
  MaskConfig mask = cfg.augment;
  if (a.row > 0) {
    const MaskConfig row = ablation_row(a.row);
    mask.enable_semantic_mask = row.enable_semantic_mask;
    mask.enable_time_warp = row.enable_time_warp;
    mask.enable_freq_mask = row.enable_freq_mask;
    mask.enable_time_mask = row.enable_time_mask;
  }
  mask.seed = a.seed;
  mask.validate();
  const auto entries = read_manifest(a.features);
  const Alignments ali = a.ctm.empty() ? Alignments{} : read_ctm(a.ctm);
  const fs::path out_dir = a.out;
  fs::create_directories(out_dir / "feats");
  std::ostringstream manifest;
  for (const auto& e : entries) {
    const FeatureMatrix f = read_smf1(e.path);
    MaskConfig m = mask;
    std::vector<FrameSpan> spans;
    auto it = ali.find(e.id);
    if (it != ali.end()) {
      spans = spans_to_frames(it->second, f.frame_shift_ms, f.frames());
    } else if (m.enable_semantic_mask) {
      if (!a.allow_missing) throw InputError("no alignment for utterance '" + e.id + "'");
      log_warning("no alignment for '" + e.id + "'; semantic mask skipped");
      m.enable_semantic_mask = false;
    }
    Rng rng(derive_seed(a.seed, e.id));
    const MaskResult r = apply_pipeline(f, spans, m, rng);
    write_smf1(out_dir / "feats" / (e.id + ".smf1"), r.features);
    manifest << e.id << " feats/" << e.id << ".smf1 " << r.features.frames() << '\n';
    std::cout << e.id;
    for (std::size_t k : r.masked_tokens) std::cout << ' ' << k;
    std::cout << '\n';
  }
  write_text(out_dir / "feats.manifest", manifest.str());
  return 0;
}

std::vector<TrainExample> load_examples(const fs::path& data, const Vocab& vocab) {
  const auto entries = read_manifest(data / "feats.manifest");
  const auto text = read_transcripts(data / "text");
  Alignments ali;
  if (fs::exists(data / "align.ctm")) ali = read_ctm(data / "align.ctm");
  std::vector<TrainExample> out;
  for (const auto& e : entries) {
    auto t = text.find(e.id);
    if (t == text.end()) throw InputError("no transcript for utterance '" + e.id + "'");
    TrainExample ex;
    ex.id = e.id;
    ex.features = read_smf1(e.path);
    ex.labels = tokenize(t->second, vocab);
    if (auto s = ali.find(e.id); s != ali.end()) ex.spans = s->second;
    out.push_back(std::move(ex));
  }
  return out;
}

Vocab data_vocab(const fs::path& data) {
  if (fs::exists(data / "vocab.txt")) return read_vocab(data / "vocab.txt");
  std::vector<std::string> lines;
  for (const auto& [id, words] : read_transcripts(data / "text")) lines.push_back(words);
  return build_vocab(lines, 1u << 20);
}

struct TrainArgs {
  std::string config, data, out;
};

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = load_config(a.config);
  const fs::path out = a.out;
  const Vocab vocab = data_vocab(a.data);
  const auto data = load_examples(a.data, vocab);
  ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  AsrModel model(mc, cfg.train.seed);
  fs::create_directories(out / "checkpoints");
  write_vocab(out / "vocab.txt", vocab);
  write_text(out / "run.cfg", serialize_run_config(cfg));

  std::ofstream curve(out / "loss.txt", std::ios::binary);
  if (!curve) throw InputError("cannot write " + (out / "loss.txt").string());
  std::vector<fs::path> saved;
  TrainHooks hooks;
  hooks.on_step = [&](const LossPoint& p) { curve << format_loss_point(p) << '\n'; };
  hooks.on_checkpoint = [&](const Checkpoint& ck, std::size_t epoch) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch%03zu.smck", epoch);
    saved.push_back(out / "checkpoints" / name);
    write_checkpoint(saved.back(), ck);
  };
  const TrainResult r = train_loop(data, model, cfg.train, cfg.augment, hooks);
  const std::size_t k = std::min(cfg.train.avg_last_k, r.checkpoints.size());
  const Checkpoint avg = average_checkpoints(
      std::span<const Checkpoint>(r.checkpoints).subspan(r.checkpoints.size() - k));
  write_checkpoint(out / "model.smck", avg);
  log_info("trained " + std::to_string(r.steps) + " steps; averaged last " + std::to_string(k) +
           " checkpoints into " + (out / "model.smck").string());
  return 0;
}

struct AverageArgs {
  std::vector<std::string> checkpoints;
  std::string out;
};

int cmd_average(const AverageArgs& a) {
  std::vector<Checkpoint> cks;
  for (const auto& p : a.checkpoints) cks.push_back(read_checkpoint(p));
  write_checkpoint(a.out, average_checkpoints(cks));
  return 0;
}

struct DecodeArgs {
  std::string config, checkpoint, lm, features, vocab, out;
  std::size_t jobs = 1;
};

int cmd_decode(const DecodeArgs& a) {
  const RunConfig cfg = load_config(a.config);
  const Vocab vocab = read_vocab(a.vocab);
  AsrModel model = load_model(cfg, vocab, a.checkpoint);
  std::optional<RecurrentLM> lm;
  if (!a.lm.empty()) {
    lm.emplace(load_lm(a.lm));
    if (lm->config().vocab_size != vocab.size()) {
      throw ValidationError("language model vocabulary size does not match " + a.vocab);
    }
  }
  const auto entries = read_manifest(a.features);
  std::vector<std::string> blocks(entries.size());
  parallel_for(entries.size(), a.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    const FeatureMatrix f = read_smf1(e.path);
    const auto result = decode(f, model, lm ? &*lm : nullptr, cfg.decode);
    if (!result.complete) log_warning("'" + e.id + "': no hypothesis reached end of sentence");
    std::string block;
    for (std::size_t r = 0; r < result.nbest.size(); ++r) {
      const Hypothesis& h = result.nbest[r];
      NbestEntry n{e.id, r + 1, h.combined, h.s2s_lp, h.ctc_lp, h.lm_lp,
                   detokenize(h.transcript(), vocab), {}, {}, {}};
      block += format_nbest_line(n) + '\n';
    }
    blocks[i] = std::move(block);
  });
  std::string all;
  for (const auto& b : blocks) all += b;
  write_text(a.out, all);
  return 0;
}

struct RescoreArgs {
  std::string nbest, r2l_lm, vocab, out;
  double gamma1 = 0.5;
  double gamma2 = 0.7;
};

int cmd_rescore(const RescoreArgs& a) {
  const Vocab vocab = read_vocab(a.vocab);
  std::optional<RecurrentLM> r2l;
  if (!a.r2l_lm.empty()) r2l.emplace(load_lm(a.r2l_lm));
  const auto entries = parse_nbest(read_text(a.nbest));
  std::vector<std::string> order;
  std::map<std::string, std::vector<Hypothesis>> groups;
  for (const auto& e : entries) {
    if (!groups.contains(e.utt_id)) order.push_back(e.utt_id);
    Hypothesis h;
    for (int id : tokenize(e.transcript, vocab)) h.tokens.push_back(id);
    h.tokens.push_back(Vocab::kEos);
    h.s2s_lp = e.s2s;
    h.ctc_lp = e.ctc;
    h.lm_lp = e.lm;
    h.combined = e.combined;
    groups[e.utt_id].push_back(std::move(h));
  }
  std::string all;
  for (const auto& id : order) {
    const auto ranked = rescore(groups[id], r2l ? &*r2l : nullptr, a.gamma1, a.gamma2);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const auto& x = ranked[r];
      NbestEntry n{id, r + 1, x.hyp.combined, x.hyp.s2s_lp, x.hyp.ctc_lp, x.hyp.lm_lp,
                   detokenize(x.hyp.transcript(), vocab), x.r2l_lp, x.wordcount, x.score};
      all += format_nbest_line(n) + '\n';
    }
  }
  write_text(a.out, all);
  return 0;
}

struct TrainLmArgs {
  std::string text, vocab, direction = "l2r", out;
  std::size_t hidden = 64;
  LmTrainConfig cfg;
};

int cmd_train_lm(const TrainLmArgs& a) {
  const Vocab vocab = read_vocab(a.vocab);
  std::vector<std::vector<int>> sentences;
  for (const auto& [id, words] : read_transcripts(a.text)) {
    sentences.push_back(tokenize(words, vocab));
  }
  LmConfig cfg{vocab.size(), a.hidden, parse_lm_direction(a.direction)};
  RecurrentLM lm(cfg, a.cfg.seed);
  const auto history = train_lm(lm, sentences, a.cfg);
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::printf("%zu %.6f\n", e + 1, history[e]);
  }
  write_checkpoint(a.out, snapshot(lm.params(), history.size(), cfg.fingerprint()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semask: semantic-mask transformer ASR toolkit"};
  app.require_subcommand(1);
  std::string log_level = "warning";
  app.add_option("--log-level", log_level, "error, warning or info")
      ->check(CLI::IsMember({"error", "warning", "info"}));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a tone-coded toy corpus (WAV, text, CTM)");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--utterances", synth.cfg.num_utterances, "Number of utterances");
  s->add_option("--words", synth.cfg.num_words, "Lexicon size");
  s->add_option("--min-words", synth.cfg.min_words, "Fewest words per utterance");
  s->add_option("--max-words", synth.cfg.max_words, "Most words per utterance");
  s->add_option("--seed", synth.cfg.seed, "Random seed");

  FeaturizeArgs feat;
  auto* f = app.add_subcommand("featurize", "Compute log-mel features for every WAV");
  f->add_option("--wav-dir", feat.wav_dir, "Directory of .wav files")->required();
  f->add_option("--out-dir", feat.out_dir, "Output data directory")->required();
  f->add_option("--config", feat.config, "Run config file");
  f->add_option("--text", feat.text, "Transcripts to copy (expanded for speed factors)");
  f->add_option("--ctm", feat.ctm, "Alignments to copy (rescaled for speed factors)");
  f->add_option("--jobs", feat.jobs, "Worker threads")->check(CLI::PositiveNumber);

  AugmentArgs aug;
  auto* g = app.add_subcommand("augment", "Apply the masking pipeline to a feature manifest");
  g->add_option("--features", aug.features, "Feature manifest")->required();
  g->add_option("--ctm", aug.ctm, "Word alignments");
  g->add_option("--config", aug.config, "Run config file");
  g->add_option("--seed", aug.seed, "Random seed")->required();
  g->add_option("--out", aug.out, "Output directory")->required();
  g->add_option("--row", aug.row, "Ablation row 1-6; selects which [augment] stages run")
      ->check(CLI::Range(1, 6));
  g->add_flag("--allow-missing", aug.allow_missing,
              "Fall back to the spectral stages when an alignment is missing");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the joint CTC/attention model");
  t->add_option("--config", train.config, "Run config file");
  t->add_option("--data", train.data, "Data directory")->required();
  t->add_option("--out", train.out, "Output directory")->required();

  AverageArgs avg;
  auto* v = app.add_subcommand("average", "Average checkpoints element-wise");
  v->add_option("--checkpoints", avg.checkpoints, "Checkpoint files")->required();
  v->add_option("--out", avg.out, "Output checkpoint")->required();

  DecodeArgs dec;
  auto* d = app.add_subcommand("decode", "Beam search with CTC and LM fusion");
  d->add_option("--config", dec.config, "Run config file");
  d->add_option("--checkpoint", dec.checkpoint, "Model checkpoint")->required();
  d->add_option("--vocab", dec.vocab, "Vocabulary file")->required();
  d->add_option("--lm", dec.lm, "Left-to-right LM checkpoint");
  d->add_option("--features", dec.features, "Feature manifest")->required();
  d->add_option("--out", dec.out, "Output n-best file")->required();
  d->add_option("--jobs", dec.jobs, "Worker threads")->check(CLI::PositiveNumber);

  RescoreArgs res;
  auto* r = app.add_subcommand("rescore", "Rerank an n-best file with a right-to-left LM");
  r->add_option("--nbest", res.nbest, "n-best file from decode")->required();
  r->add_option("--r2l-lm", res.r2l_lm, "Right-to-left LM checkpoint");
  r->add_option("--vocab", res.vocab, "Vocabulary file")->required();
  r->add_option("--gamma1", res.gamma1, "Word-count weight");
  r->add_option("--gamma2", res.gamma2, "Right-to-left LM weight");
  r->add_option("--out", res.out, "Output file")->required();

  TrainLmArgs lm;
  auto* l = app.add_subcommand("train-lm", "Train a recurrent language model");
  l->add_option("--text", lm.text, "Transcripts (`utt_id words...`)")->required();
  l->add_option("--vocab", lm.vocab, "Vocabulary file")->required();
  l->add_option("--direction", lm.direction, "l2r or r2l")->check(CLI::IsMember({"l2r", "r2l"}));
  l->add_option("--hidden", lm.hidden, "LSTM width");
  l->add_option("--epochs", lm.cfg.epochs, "Passes over the text");
  l->add_option("--lr", lm.cfg.lr, "Adam learning rate");
  l->add_option("--seed", lm.cfg.seed, "Random seed");
  l->add_option("--out", lm.out, "Output checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  set_log_level(log_level == "error" ? LogLevel::kError
                : log_level == "info" ? LogLevel::kInfo
                                      : LogLevel::kWarning);

  try {
    if (*s) return cmd_synth(synth);
    if (*f) return cmd_featurize(feat);
    if (*g) return cmd_augment(aug);
    if (*t) return cmd_train(train);
    if (*v) return cmd_average(avg);
    if (*d) return cmd_decode(dec);
    if (*r) return cmd_rescore(res);
    if (*l) return cmd_train_lm(lm);
  } catch (const NumericError& e) {
    std::cerr << "semask: numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "semask: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
