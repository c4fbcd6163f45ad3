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

#include <algorithm>
#include <map>
#include <unordered_map>

#include <gtest/gtest.h>

#include "semask/alignment.hpp"
#include "semask/errors.hpp"
#include "semask/rng.hpp"

namespace semask {
namespace {

TEST(CtmTest, ParsesRecords) {
  const Alignments a = parse_ctm("u1 1 0.00 0.50 the\nu1 1 0.50 0.30 cat\n");
  ASSERT_EQ(a.size(), 1u);
  const auto& spans = a.at("u1");
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].token, "the");
  EXPECT_EQ(spans[1].start_s, 0.5);
  EXPECT_EQ(spans[1].dur_s, 0.3);
  EXPECT_TRUE(parse_ctm("").empty());
  EXPECT_TRUE(parse_ctm(";; comment\n\n").empty());
}

TEST(CtmTest, SortsWithinUtterance) {
  const Alignments a = parse_ctm("u1 1 1.0 0.5 b\nu2 1 0 1 x\nu1 1 0.0 0.5 a\n");
  EXPECT_EQ(a.at("u1")[0].token, "a");
  EXPECT_EQ(a.at("u1")[1].token, "b");
  EXPECT_EQ(a.at("u2").size(), 1u);
}

TEST(CtmTest, OverlapNamesBothLines) {
  try {
    parse_ctm("u1 1 0.00 0.50 the\nu1 1 0.40 0.30 cat\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("lines 1,2"), std::string::npos) << e.what();
  }
}

TEST(CtmTest, MalformedLineReportsLineNumber) {
  try {
    parse_ctm("u1 1 0.0 0.5 a\nu1 1 zero 0.5 b\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_ctm("u1 1 0.0\n"), ParseError);
  EXPECT_THROW(parse_ctm("u1 1 0.0 -1 a\n"), ParseError);
}

TEST(CtmTest, SerializeRoundTrip) {
  Rng rng(1);
  Alignments a;
  for (int u = 0; u < 5; ++u) {
    double t = rng.uniform(0.0, 0.3);
    std::vector<TokenSpan> spans;
    for (int k = 0; k < 6; ++k) {
      const double d = rng.uniform(0.01, 0.7);
      spans.push_back({"w" + std::to_string(rng.uniform_int(0, 9)), t, d, "1"});
      t += d + rng.uniform(0.0, 0.2);
    }
    a["utt" + std::to_string(u)] = spans;
  }
  EXPECT_EQ(parse_ctm(serialize_ctm(a)), a);
}

TEST(SpansToFramesTest, Examples) {
  const std::vector<TokenSpan> whole{{"a", 0.0, 0.5, "1"}};
  EXPECT_EQ(spans_to_frames(whole, 10.0, 100), (std::vector<FrameSpan>{{0, 0, 50}}));
  const std::vector<TokenSpan> partial{{"a", 0.005, 0.007, "1"}};
  EXPECT_EQ(spans_to_frames(partial, 10.0, 100), (std::vector<FrameSpan>{{0, 0, 2}}));
  const std::vector<TokenSpan> beyond{{"a", 0.1, 0.2, "1"}, {"b", 2.0, 0.3, "1"}};
  EXPECT_EQ(spans_to_frames(beyond, 10.0, 100), (std::vector<FrameSpan>{{0, 10, 30}}));
}

TEST(SpansToFramesTest, AlwaysInsideUtterance) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const auto frames = static_cast<std::size_t>(rng.uniform_int(1, 300));
    std::vector<TokenSpan> spans;
    double t = rng.uniform(0.0, 1.0);
    for (int k = 0; k < 8; ++k) {
      const double d = rng.uniform(0.001, 0.5);
      spans.push_back({"x", t, d, "1"});
      t += d;
    }
    for (const FrameSpan& s : spans_to_frames(spans, 10.0, frames)) {
      EXPECT_LT(s.start_frame, s.end_frame);
      EXPECT_LE(s.end_frame, frames);
      EXPECT_LT(s.token_index, spans.size());
    }
  }
}

TEST(VocabTest, ReservedIdsAndTokenize) {
  const Vocab v(std::vector<std::string>{"the", "cat"});
  EXPECT_EQ(Vocab::kBlank, 0);
  EXPECT_EQ(v.id_of("the"), 4);
  EXPECT_EQ(v.id_of("cat"), 5);
  EXPECT_EQ(tokenize("THE cat", v), (std::vector<int>{4, 5}));
  EXPECT_TRUE(tokenize("", v).empty());
  EXPECT_EQ(tokenize("the dog", v), (std::vector<int>{4, Vocab::kUnk}));
  EXPECT_EQ(detokenize({4, 5}, v), "the cat");
  EXPECT_NO_THROW(tokenize("\xff\xfe caf\xc3\xa9 \t\n", v));
}

TEST(VocabTest, BuildOrdersByFrequencyThenLexicographic) {
  EXPECT_EQ(build_vocab({"a a b"}, 10).content_tokens(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(build_vocab({"b a"}, 10).content_tokens(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(build_vocab({"c b a c"}, 6).content_tokens(), (std::vector<std::string>{"c", "a"}));
  EXPECT_THROW(build_vocab({"a"}, 4), ConfigError);
}

TEST(VocabTest, TopKMatchesCountingOracle) {
  Rng rng(3);
  std::vector<std::string> lines;
  std::unordered_map<std::string, int> counts;
  for (int l = 0; l < 1000; ++l) {
    std::string line;
    for (int w = 0; w < 10; ++w) {
      // Skewed draw so frequencies differ.
      const auto id = rng.uniform_int(0, rng.uniform_int(0, 300));
      const std::string word = "w" + std::to_string(id);
      ++counts[word];
      line += word + " ";
    }
    lines.push_back(line);
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const Vocab v = build_vocab(lines, 54);
  const auto content = v.content_tokens();
  ASSERT_EQ(content.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(content[i], ranked[i].first);
  EXPECT_EQ(build_vocab(lines, 54), v);
}

TEST(VocabTest, FileRoundTrip) {
  const Vocab v(std::vector<std::string>{"x", "y", "z"});
  const auto path = std::filesystem::temp_directory_path() / "semask_vocab.txt";
  write_vocab(path, v);
  EXPECT_EQ(read_vocab(path), v);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace semask
