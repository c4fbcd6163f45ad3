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

#include "semask/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "semask/errors.hpp"

namespace semask {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  std::size_t line;
};

using Section = std::map<std::string, Entry>;

class Reader {
 public:
  Reader(const std::string& section, Section& entries) : section_(section), entries_(entries) {}

  template <typename T>
  void get(const std::string& key, T& out) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    const Entry e = it->second;
    entries_.erase(it);
    try {
      convert(e.value, out);
    } catch (const InputError& err) {
      throw ParseError("[" + section_ + "] " + key + ": " + err.what(), e.line);
    }
  }

  void finish() const {
    if (!entries_.empty()) {
      const auto& [key, e] = *entries_.begin();
      throw ParseError("unknown key '" + key + "' in [" + section_ + "]", e.line);
    }
  }

 private:
  static void convert(const std::string& v, bool& out) {
    if (v == "true" || v == "1") {
      out = true;
    } else if (v == "false" || v == "0") {
      out = false;
    } else {
      throw InputError("expected true or false, got '" + v + "'");
    }
  }
  static void convert(const std::string& v, double& out) {
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw InputError("expected a number, got '" + v + "'");
  }
  static void convert(const std::string& v, int& out) {
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw InputError("expected an integer, got '" + v + "'");
  }
  template <typename U>
    requires std::is_unsigned_v<U>
  static void convert(const std::string& v, U& out) {
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) {
      throw InputError("expected a non-negative integer, got '" + v + "'");
    }
  }
  static void convert(const std::string& v, std::vector<double>& out) {
    out.clear();
    std::size_t pos = 0;
    while (pos <= v.size()) {
      auto comma = v.find(',', pos);
      if (comma == std::string::npos) comma = v.size();
      double x = 0.0;
      convert(trim(std::string_view(v).substr(pos, comma - pos)), x);
      out.push_back(x);
      pos = comma + 1;
    }
  }
  static void convert(const std::string& v, TokenSampling& out) {
    if (v == "bernoulli") {
      out = TokenSampling::kBernoulli;
    } else if (v == "exact") {
      out = TokenSampling::kExactFraction;
    } else {
      throw InputError("expected bernoulli or exact, got '" + v + "'");
    }
  }
  static void convert(const std::string& v, FillMode& out) {
    if (v == "mean") {
      out = FillMode::kMeanVector;
    } else if (v == "scalar_mean") {
      out = FillMode::kScalarMean;
    } else if (v == "zero") {
      out = FillMode::kZeros;
    } else {
      throw InputError("expected mean, scalar_mean or zero, got '" + v + "'");
    }
  }

  std::string section_;
  Section& entries_;
};

const char* sampling_name(TokenSampling s) {
  return s == TokenSampling::kBernoulli ? "bernoulli" : "exact";
}

const char* fill_name(FillMode f) {
  switch (f) {
    case FillMode::kMeanVector:
      return "mean";
    case FillMode::kScalarMean:
      return "scalar_mean";
    case FillMode::kZeros:
      return "zero";
  }
  return "mean";
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig::RunConfig() : model(ModelConfig::desk(83, 0)), train(TrainConfig::desk()) {}

void RunConfig::validate() const {
  if (features.n_mels <= 0 || features.out_dim < features.n_mels) {
    throw ConfigError("features: need 0 < n_mels <= out_dim");
  }
  if (features.n_fft <= 0 || !(features.win_ms > 0.0) || !(features.shift_ms > 0.0)) {
    throw ConfigError("features: n_fft, win_ms and shift_ms must be positive");
  }
  if (speed_factors.empty()) throw ConfigError("features: speed_factors must not be empty");
  for (double f : speed_factors) {
    if (!(f >= 0.5 && f <= 2.0)) throw ConfigError("features: speed factors must lie in [0.5, 2]");
  }
  if (model.input_dim != static_cast<std::size_t>(features.out_dim)) {
    throw ConfigError("model.input_dim (" + std::to_string(model.input_dim) +
                      ") must equal features.out_dim (" + std::to_string(features.out_dim) + ")");
  }
  augment.validate();
  ModelConfig m = model;
  if (m.vocab_size == 0) m.vocab_size = Vocab::kNumReserved + 1;
  m.validate();
  train.validate();
  decode.validate();
}

RunConfig parse_run_config(std::string_view text) {
  std::map<std::string, Section> sections;
  std::string current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", line_no);
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      static const char* kKnown[] = {"features", "augment", "model", "train", "decode"};
      if (std::find(std::begin(kKnown), std::end(kKnown), current) == std::end(kKnown)) {
        throw ParseError("unknown section [" + current + "]", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    if (current.empty()) throw ParseError("key outside of any section", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    auto [it, inserted] = sections[current].emplace(key, Entry{value, line_no});
    if (!inserted) throw ParseError("duplicate key '" + key + "' in [" + current + "]", line_no);
  }

  RunConfig cfg;
  {
    Reader r("features", sections["features"]);
    auto& f = cfg.features;
    r.get("n_fft", f.n_fft);
    r.get("win_ms", f.win_ms);
    r.get("shift_ms", f.shift_ms);
    r.get("n_mels", f.n_mels);
    r.get("fmin", f.fmin);
    r.get("fmax", f.fmax);
    r.get("out_dim", f.out_dim);
    r.get("normalize", cfg.normalize);
    r.get("speed_factors", cfg.speed_factors);
    r.finish();
  }
  {
    Reader r("augment", sections["augment"]);
    auto& a = cfg.augment;
    r.get("semantic_mask", a.enable_semantic_mask);
    r.get("token_mask_prob", a.token_mask_prob);
    r.get("sampling", a.sampling);
    r.get("fill", a.fill);
    r.get("time_warp", a.enable_time_warp);
    r.get("warp_param", a.warp_param);
    r.get("freq_mask", a.enable_freq_mask);
    r.get("freq_width", a.freq_width);
    r.get("freq_count", a.freq_count);
    r.get("time_mask", a.enable_time_mask);
    r.get("time_width", a.time_width);
    r.get("time_count", a.time_count);
    r.finish();
  }
  {
    Section& s = sections["model"];
    std::size_t input_dim = static_cast<std::size_t>(cfg.features.out_dim);
    if (auto it = s.find("preset"); it != s.end()) {
      const std::string preset = it->second.value;
      if (preset == "desk") {
        cfg.model = ModelConfig::desk(input_dim, 0);
      } else if (preset == "tiny") {
        cfg.model = ModelConfig::tiny(input_dim, 0);
      } else if (preset == "paper_960h") {
        cfg.model = ModelConfig::paper_960h(input_dim, 0);
      } else {
        throw ParseError("unknown model preset '" + preset + "'", it->second.line);
      }
      s.erase(it);
    } else {
      cfg.model.input_dim = input_dim;
    }
    Reader r("model", s);
    auto& m = cfg.model;
    r.get("input_dim", m.input_dim);
    r.get("d_model", m.d_model);
    r.get("n_heads", m.n_heads);
    r.get("n_enc_layers", m.n_enc_layers);
    r.get("n_dec_layers", m.n_dec_layers);
    r.get("d_ff", m.d_ff);
    r.get("dropout", m.dropout);
    r.get("cnn_channels1", m.cnn_channels1);
    r.get("cnn_channels2", m.cnn_channels2);
    r.get("dec_conv_kernel", m.dec_conv_kernel);
    r.get("ln_eps", m.ln_eps);
    r.finish();
  }
  {
    Reader r("train", sections["train"]);
    auto& t = cfg.train;
    r.get("warmup_steps", t.warmup_steps);
    r.get("peak_scale", t.peak_scale);
    r.get("adam_beta1", t.adam_beta1);
    r.get("adam_beta2", t.adam_beta2);
    r.get("adam_eps", t.adam_eps);
    r.get("epochs", t.epochs);
    r.get("max_steps", t.max_steps);
    r.get("batch_frames", t.batch_frames);
    r.get("avg_last_k", t.avg_last_k);
    r.get("grad_clip", t.grad_clip);
    r.get("alpha", t.alpha);
    r.get("label_smoothing", t.label_smoothing);
    r.get("seed", t.seed);
    r.finish();
  }
  {
    Reader r("decode", sections["decode"]);
    auto& d = cfg.decode;
    r.get("beam", d.beam);
    r.get("beta1", d.beta1);
    r.get("beta2", d.beta2);
    r.get("ctc_weight", d.ctc_weight);
    r.get("max_len_ratio", d.max_len_ratio);
    r.get("gamma1", d.gamma1);
    r.get("gamma2", d.gamma2);
    r.get("n_best", d.n_best);
    r.finish();
  }
  cfg.validate();
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ParseError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto u = [](std::size_t v) { return std::to_string(v); };

  const auto& f = cfg.features;
  os << "[features]\n";
  kv("n_fft", std::to_string(f.n_fft));
  kv("win_ms", num(f.win_ms));
  kv("shift_ms", num(f.shift_ms));
  kv("n_mels", std::to_string(f.n_mels));
  kv("fmin", num(f.fmin));
  kv("fmax", num(f.fmax));
  kv("out_dim", std::to_string(f.out_dim));
  kv("normalize", b(cfg.normalize));
  std::string speeds;
  for (double s : cfg.speed_factors) speeds += (speeds.empty() ? "" : ",") + num(s);
  kv("speed_factors", speeds);

  const auto& a = cfg.augment;
  os << "\n[augment]\n";
  kv("semantic_mask", b(a.enable_semantic_mask));
  kv("token_mask_prob", num(a.token_mask_prob));
  kv("sampling", sampling_name(a.sampling));
  kv("fill", fill_name(a.fill));
  kv("time_warp", b(a.enable_time_warp));
  kv("warp_param", u(a.warp_param));
  kv("freq_mask", b(a.enable_freq_mask));
  kv("freq_width", u(a.freq_width));
  kv("freq_count", u(a.freq_count));
  kv("time_mask", b(a.enable_time_mask));
  kv("time_width", u(a.time_width));
  kv("time_count", u(a.time_count));

  const auto& m = cfg.model;
  os << "\n[model]\n";
  kv("input_dim", u(m.input_dim));
  kv("d_model", u(m.d_model));
  kv("n_heads", u(m.n_heads));
  kv("n_enc_layers", u(m.n_enc_layers));
  kv("n_dec_layers", u(m.n_dec_layers));
  kv("d_ff", u(m.d_ff));
  kv("dropout", num(m.dropout));
  kv("cnn_channels1", u(m.cnn_channels1));
  kv("cnn_channels2", u(m.cnn_channels2));
  kv("dec_conv_kernel", u(m.dec_conv_kernel));
  kv("ln_eps", num(m.ln_eps));

  const auto& t = cfg.train;
  os << "\n[train]\n";
  kv("warmup_steps", u(t.warmup_steps));
  kv("peak_scale", num(t.peak_scale));
  kv("adam_beta1", num(t.adam_beta1));
  kv("adam_beta2", num(t.adam_beta2));
  kv("adam_eps", num(t.adam_eps));
  kv("epochs", u(t.epochs));
  kv("max_steps", u(t.max_steps));
  kv("batch_frames", u(t.batch_frames));
  kv("avg_last_k", u(t.avg_last_k));
  kv("grad_clip", num(t.grad_clip));
  kv("alpha", num(t.alpha));
  kv("label_smoothing", num(t.label_smoothing));
  kv("seed", std::to_string(t.seed));

  const auto& d = cfg.decode;
  os << "\n[decode]\n";
  kv("beam", u(d.beam));
  kv("beta1", num(d.beta1));
  kv("beta2", num(d.beta2));
  kv("ctc_weight", num(d.ctc_weight));
  kv("max_len_ratio", num(d.max_len_ratio));
  kv("gamma1", num(d.gamma1));
  kv("gamma2", num(d.gamma2));
  kv("n_best", u(d.n_best));
  return os.str();
}

}  // namespace semask
