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

#ifndef SEMASK_ALIGNMENT_HPP_
#define SEMASK_ALIGNMENT_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semask {

// One aligned word from a forced-alignment CTM record.
struct TokenSpan {
  std::string token;
  double start_s = 0.0;
  double dur_s = 0.0;
  std::string channel = "1";

  double end_s() const { return start_s + dur_s; }
  bool operator==(const TokenSpan&) const = default;
};

// Frames [start_frame, end_frame) covered by transcript token token_index.
struct FrameSpan {
  std::size_t token_index = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;

  std::size_t length() const { return end_frame - start_frame; }
  bool operator==(const FrameSpan&) const = default;
};

using Alignments = std::map<std::string, std::vector<TokenSpan>>;

// Records are `utt_id channel start_s dur_s token`, whitespace separated.
// Blank lines and lines starting with ';;' are ignored.
Alignments parse_ctm(std::string_view text);
Alignments read_ctm(const std::filesystem::path& path);
std::string serialize_ctm(const Alignments& alignments);

std::vector<FrameSpan> spans_to_frames(const std::vector<TokenSpan>& spans, double frame_shift_ms,
                                       std::size_t num_frames);

// Span times rescaled for audio played at `factor` times normal speed.
std::vector<TokenSpan> scale_spans(const std::vector<TokenSpan>& spans, double factor);

class Vocab {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;

  Vocab();
  // Content tokens take ids kNumReserved, kNumReserved + 1, ... in order.
  explicit Vocab(const std::vector<std::string>& content_tokens);

  int id_of(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  std::vector<std::string> content_tokens() const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Most frequent lowercased words first, ties lexicographic; at most
// max_size ids including the reserved block.
Vocab build_vocab(const std::vector<std::string>& corpus_lines, std::size_t max_size);

std::string to_lower_ascii(std::string_view s);
std::vector<std::string> split_words(std::string_view text);

// Whitespace split, lowercase, unknown words map to kUnk. Never throws.
std::vector<int> tokenize(std::string_view text, const Vocab& vocab);
std::string detokenize(const std::vector<int>& ids, const Vocab& vocab);

// One content token per line, reserved block implied.
void write_vocab(const std::filesystem::path& path, const Vocab& vocab);
Vocab read_vocab(const std::filesystem::path& path);

// `utt_id word word ...` lines.
std::map<std::string, std::string> read_transcripts(const std::filesystem::path& path);

}  // namespace semask

#endif  // SEMASK_ALIGNMENT_HPP_
