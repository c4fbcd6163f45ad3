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

#include "semask/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "semask/errors.hpp"

namespace semask {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

Alignments parse_ctm(std::string_view text) {
  struct Record {
    TokenSpan span;
    std::size_t line;
  };
  std::map<std::string, std::vector<Record>> grouped;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_words(line);
    if (fields.empty() || fields[0].rfind(";;", 0) == 0) continue;
    if (fields.size() < 5) {
      throw ParseError("expected `utt_id channel start dur token`, got " +
                           std::to_string(fields.size()) + " fields",
                       line_no);
    }
    const auto start = parse_double(fields[2]);
    const auto dur = parse_double(fields[3]);
    if (!start || *start < 0.0) throw ParseError("invalid start time '" + fields[2] + "'", line_no);
    if (!dur || *dur <= 0.0) throw ParseError("invalid duration '" + fields[3] + "'", line_no);
    Record rec{TokenSpan{fields[4], *start, *dur, fields[1]}, line_no};
    grouped[fields[0]].push_back(std::move(rec));
  }

  Alignments out;
  for (auto& [utt, records] : grouped) {
    std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
      return a.span.start_s < b.span.start_s;
    });
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& prev = records[i - 1];
      const auto& cur = records[i];
      // Small tolerance for decimal round-off where one word ends as the next begins.
      if (cur.span.start_s < prev.span.end_s() - 1e-9) {
        const auto [a, b] = std::minmax(prev.line, cur.line);
        throw ValidationError("utterance " + utt + ": overlapping spans on lines " +
                              std::to_string(a) + "," + std::to_string(b) + " ('" +
                              prev.span.token + "', '" + cur.span.token + "')");
      }
    }
    auto& spans = out[utt];
    spans.reserve(records.size());
    for (auto& r : records) spans.push_back(std::move(r.span));
  }
  return out;
}

Alignments read_ctm(const std::filesystem::path& path) { return parse_ctm(read_text(path)); }

std::string serialize_ctm(const Alignments& alignments) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& [utt, spans] : alignments) {
    for (const auto& s : spans) {
      os << utt << ' ' << s.channel << ' ' << s.start_s << ' ' << s.dur_s << ' ' << s.token
         << '\n';
    }
  }
  return os.str();
}

std::vector<FrameSpan> spans_to_frames(const std::vector<TokenSpan>& spans, double frame_shift_ms,
                                       std::size_t num_frames) {
  if (frame_shift_ms <= 0.0) throw ConfigError("frame shift must be positive");
  std::vector<FrameSpan> out;
  out.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    // The slack keeps decimal times such as 0.3 s from spilling into an extra frame.
    constexpr double kSlack = 1e-9;
    const double start = std::floor(spans[i].start_s * 1000.0 / frame_shift_ms + kSlack);
    const double end = std::ceil(spans[i].end_s() * 1000.0 / frame_shift_ms - kSlack);
    if (!(start < static_cast<double>(num_frames))) continue;
    const auto s = static_cast<std::size_t>(std::max(0.0, start));
    const auto e = static_cast<std::size_t>(std::min(end, static_cast<double>(num_frames)));
    if (s >= e) continue;
    out.push_back(FrameSpan{i, s, e});
  }
  return out;
}

std::vector<TokenSpan> scale_spans(const std::vector<TokenSpan>& spans, double factor) {
  std::vector<TokenSpan> out = spans;
  for (auto& s : out) {
    s.start_s /= factor;
    s.dur_s /= factor;
  }
  return out;
}

Vocab::Vocab() : tokens_{"<blank>", "<sos>", "<eos>", "<unk>"} {
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
}

Vocab::Vocab(const std::vector<std::string>& content_tokens) : Vocab() {
  for (const auto& t : content_tokens) {
    if (ids_.count(t)) throw ValidationError("duplicate vocabulary token '" + t + "'");
    ids_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  }
}

int Vocab::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DimensionError("token id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocab::content_tokens() const {
  return {tokens_.begin() + kNumReserved, tokens_.end()};
}

Vocab build_vocab(const std::vector<std::string>& corpus_lines, std::size_t max_size) {
  if (max_size <= static_cast<std::size_t>(Vocab::kNumReserved)) {
    throw ConfigError("vocabulary size must exceed the " + std::to_string(Vocab::kNumReserved) +
                      " reserved ids");
  }
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& line : corpus_lines) {
    for (const auto& w : split_words(line)) ++counts[to_lower_ascii(w)];
  }
  const Vocab reserved;
  std::vector<std::pair<std::string, std::size_t>> items;
  for (auto& [w, c] : counts) {
    if (reserved.id_of(w) != Vocab::kUnk || w == reserved.token(Vocab::kUnk)) continue;
    items.emplace_back(w, c);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t keep = std::min(items.size(), max_size - Vocab::kNumReserved);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(items[i].first);
  return Vocab(tokens);
}

std::vector<int> tokenize(std::string_view text, const Vocab& vocab) {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id_of(to_lower_ascii(w)));
  return ids;
}

std::string detokenize(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    if (id == Vocab::kSos || id == Vocab::kEos || id == Vocab::kBlank) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

void write_vocab(const std::filesystem::path& path, const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& t : vocab.content_tokens()) out << t << '\n';
}

Vocab read_vocab(const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  std::istringstream in(read_text(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto words = split_words(line);
    if (words.empty()) continue;
    if (words.size() != 1) throw ParseError("vocabulary lines hold exactly one token", line_no);
    tokens.push_back(words[0]);
  }
  return Vocab(tokens);
}

std::map<std::string, std::string> read_transcripts(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_text(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    auto words = split_words(line);
    if (words.empty()) continue;
    std::string text;
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (i > 1) text += ' ';
      text += words[i];
    }
    if (!out.emplace(words[0], std::move(text)).second) {
      throw ParseError("duplicate utterance id '" + words[0] + "'", line_no);
    }
  }
  return out;
}

}  // namespace semask
