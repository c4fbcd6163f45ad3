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

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "semask/augment.hpp"
#include "semask/errors.hpp"
#include "semask/log.hpp"

namespace semask {
namespace {

FeatureMatrix random_features(std::size_t t, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix f(t, d);
  for (double& v : f.values()) v = rng.uniform(-4.0, 4.0);
  return f;
}

std::vector<FrameSpan> tiling_spans(std::size_t frames, std::size_t width, std::size_t gap) {
  std::vector<FrameSpan> spans;
  std::size_t t = gap;
  for (std::size_t i = 0; t + width <= frames; ++i, t += width + gap) spans.push_back({i, t, t + width});
  return spans;
}

bool row_equals(const FeatureMatrix& f, std::size_t t, const std::vector<double>& v) {
  for (std::size_t d = 0; d < f.dims(); ++d) {
    if (f.at(t, d) != v[d]) return false;
  }
  return true;
}

bool rows_equal(const FeatureMatrix& a, const FeatureMatrix& b, std::size_t t) {
  for (std::size_t d = 0; d < a.dims(); ++d) {
    if (a.at(t, d) != b.at(t, d)) return false;
  }
  return true;
}

MaskConfig semantic_only(double prob) {
  MaskConfig cfg;
  cfg.enable_semantic_mask = true;
  cfg.token_mask_prob = prob;
  return cfg;
}

TEST(SemanticMaskTest, ZeroProbabilityIsIdentity) {
  const FeatureMatrix f = random_features(60, 5, 1);
  Rng rng(1);
  const MaskResult r = semantic_mask(f, tiling_spans(60, 7, 2), semantic_only(0.0), rng);
  EXPECT_EQ(r.features, f);
  EXPECT_TRUE(r.masked_tokens.empty());
}

TEST(SemanticMaskTest, ForcedSelectionFillsSpanWithInputMean) {
  const FeatureMatrix f = random_features(10, 4, 2);
  Rng rng(2);
  const MaskResult r = semantic_mask(f, {{0, 2, 5}}, semantic_only(1.0), rng);
  const auto mean = utterance_mean(f);
  for (std::size_t t = 0; t < 10; ++t) {
    if (t >= 2 && t < 5) {
      EXPECT_TRUE(row_equals(r.features, t, mean)) << t;
    } else {
      EXPECT_TRUE(rows_equal(r.features, f, t)) << t;
    }
  }
  EXPECT_EQ(r.masked_tokens, (std::vector<std::size_t>{0}));
}

TEST(SemanticMaskTest, EmptySpansAreIdentity) {
  const FeatureMatrix f = random_features(10, 4, 3);
  Rng rng(3);
  EXPECT_EQ(semantic_mask(f, {}, semantic_only(1.0), rng).features, f);
}

TEST(SemanticMaskTest, ModifiedFramesAreExactlySelectedSpans) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FeatureMatrix f = random_features(120, 6, seed);
    const auto spans = tiling_spans(120, 5, 3);
    Rng rng(seed);
    const MaskResult r = semantic_mask(f, spans, semantic_only(0.3), rng);
    std::set<std::size_t> expected;
    for (std::size_t k : r.masked_tokens) {
      for (std::size_t t = spans[k].start_frame; t < spans[k].end_frame; ++t) expected.insert(t);
    }
    std::set<std::size_t> changed;
    for (std::size_t t = 0; t < 120; ++t) {
      if (!rows_equal(r.features, f, t)) changed.insert(t);
    }
    EXPECT_EQ(changed, expected);
  }
}

TEST(SemanticMaskTest, FillModes) {
  const FeatureMatrix f = random_features(8, 3, 4);
  MaskConfig cfg = semantic_only(1.0);
  cfg.fill = FillMode::kZeros;
  Rng rng(4);
  EXPECT_TRUE(row_equals(semantic_mask(f, {{0, 1, 2}}, cfg, rng).features, 1, {0, 0, 0}));
  cfg.fill = FillMode::kScalarMean;
  const auto m = utterance_mean(f);
  const double s = (m[0] + m[1] + m[2]) / 3.0;
  EXPECT_TRUE(row_equals(semantic_mask(f, {{0, 1, 2}}, cfg, rng).features, 1, {s, s, s}));
}

TEST(SemanticMaskTest, BernoulliRateConcentrates) {
  Rng rng(5);
  const std::size_t n = 100000;
  const auto picks = sample_tokens(n, 0.15, TokenSampling::kBernoulli, rng);
  const double rate = static_cast<double>(picks.size()) / n;
  EXPECT_LE(std::abs(rate - 0.15), 4.0 * std::sqrt(0.15 * 0.85 / n));
  EXPECT_GE(rate, 0.146);
  EXPECT_LE(rate, 0.154);
}

TEST(SemanticMaskTest, ExactFractionPicksRoundedCount) {
  Rng rng(6);
  for (std::size_t n : {1u, 7u, 20u, 33u}) {
    const auto picks = sample_tokens(n, 0.15, TokenSampling::kExactFraction, rng);
    EXPECT_EQ(picks.size(), static_cast<std::size_t>(std::llround(0.15 * n)));
    EXPECT_EQ(std::set<std::size_t>(picks.begin(), picks.end()).size(), picks.size());
  }
}

TEST(FreqMaskTest, IdentityCases) {
  const FeatureMatrix f = random_features(20, 10, 7);
  Rng rng(7);
  EXPECT_EQ(freq_mask(f, 5, 0, rng), f);
  EXPECT_EQ(freq_mask(f, 0, 3, rng), f);
  EXPECT_THROW(freq_mask(f, 10, 1, rng), ConfigError);
}

TEST(FreqMaskTest, ReplayedBandsHoldMeans) {
  const FeatureMatrix f = random_features(20, 12, 8);
  const auto mean = utterance_mean(f);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const FeatureMatrix g = freq_mask(f, 4, 2, rng);
    Rng replay(seed);
    std::set<std::size_t> masked;
    for (int m = 0; m < 2; ++m) {
      const auto w = static_cast<std::size_t>(replay.uniform_int(0, 4));
      const auto f0 = static_cast<std::size_t>(replay.uniform_int(0, static_cast<std::int64_t>(12 - w)));
      for (std::size_t d = f0; d < f0 + w; ++d) masked.insert(d);
    }
    for (std::size_t t = 0; t < 20; ++t) {
      for (std::size_t d = 0; d < 12; ++d) {
        EXPECT_EQ(g.at(t, d), masked.count(d) ? mean[d] : f.at(t, d));
      }
    }
  }
}

TEST(TimeMaskTest, IdentityCasesAndReplay) {
  const FeatureMatrix f = random_features(30, 4, 9);
  Rng rng(9);
  EXPECT_EQ(time_mask(f, 5, 0, rng), f);
  EXPECT_EQ(time_mask(f, 0, 3, rng), f);
  const auto mean = utterance_mean(f);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed);
    const FeatureMatrix g = time_mask(f, 40, 2, a);
    Rng replay(seed);
    std::set<std::size_t> masked;
    for (int m = 0; m < 2; ++m) {
      const auto w = static_cast<std::size_t>(replay.uniform_int(0, 30));
      const auto t0 = static_cast<std::size_t>(replay.uniform_int(0, static_cast<std::int64_t>(30 - w)));
      for (std::size_t t = t0; t < t0 + w; ++t) masked.insert(t);
    }
    for (std::size_t t = 0; t < 30; ++t) {
      if (masked.count(t)) {
        EXPECT_TRUE(row_equals(g, t, mean));
      } else {
        EXPECT_TRUE(rows_equal(g, f, t));
      }
    }
  }
}

TEST(TimeWarpTest, IdentityCases) {
  const FeatureMatrix f = random_features(40, 3, 10);
  Rng rng(10);
  EXPECT_EQ(time_warp(f, 0, rng), f);
  const FeatureMatrix g = warp_frames(f, 17, 0);
  for (std::size_t i = 0; i < f.values().size(); ++i) EXPECT_NEAR(g.values()[i], f.values()[i], 1e-12);
  set_log_level(LogLevel::kSilent);
  EXPECT_EQ(time_warp(f, 20, rng), f);
  set_log_level(LogLevel::kWarning);
}

TEST(TimeWarpTest, RampMatchesClosedFormRemap) {
  const std::size_t frames = 50;
  FeatureMatrix ramp(frames, 2);
  for (std::size_t t = 0; t < frames; ++t) {
    ramp.at(t, 0) = 3.0 * t + 1.0;
    ramp.at(t, 1) = -0.5 * t;
  }
  for (std::size_t c : {6u, 20u, 43u}) {
    for (std::ptrdiff_t s : {-5, -1, 3, 5}) {
      const FeatureMatrix g = warp_frames(ramp, c, s);
      const double last = frames - 1.0;
      const double k = static_cast<double>(c) + static_cast<double>(s);
      for (std::size_t t = 0; t < frames; ++t) {
        const double u = static_cast<double>(t);
        const double src = u <= k ? u * static_cast<double>(c) / k : c + (u - k) * (last - c) / (last - k);
        EXPECT_NEAR(g.at(t, 0), 3.0 * src + 1.0, 1e-9) << c << " " << s << " " << t;
        EXPECT_NEAR(g.at(t, 1), -0.5 * src, 1e-9);
      }
      EXPECT_TRUE(rows_equal(g, ramp, 0));
      EXPECT_TRUE(rows_equal(g, ramp, frames - 1));
      // The knot moves the content of frame c to frame c + s.
      EXPECT_NEAR(g.at(static_cast<std::size_t>(k), 0), ramp.at(c, 0), 1e-9);
    }
  }
}

TEST(TimeWarpTest, KnotMustStayInside) {
  const FeatureMatrix f = random_features(20, 2, 14);
  EXPECT_THROW(warp_frames(f, 5, -5), ContractError);
  EXPECT_THROW(warp_frames(f, 15, 4), ContractError);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    EXPECT_NO_THROW(time_warp(f, 5, rng));
  }
}

TEST(PipelineTest, DisabledIsIdentityAndShapesPreserved) {
  const FeatureMatrix f = random_features(80, 40, 11);
  const auto spans = tiling_spans(80, 6, 2);
  Rng rng(11);
  MaskConfig off = ablation_row(1);
  EXPECT_EQ(apply_pipeline(f, spans, off, rng).features, f);
  for (int row = 1; row <= 6; ++row) {
    Rng r(row);
    const MaskResult out = apply_pipeline(f, spans, ablation_row(row), r);
    EXPECT_EQ(out.features.frames(), 80u);
    EXPECT_EQ(out.features.dims(), 40u);
  }
}

TEST(PipelineTest, AblationRowsSelectStages) {
  const MaskConfig r4 = ablation_row(4);
  EXPECT_TRUE(r4.enable_time_warp && r4.enable_time_mask && r4.enable_freq_mask);
  EXPECT_FALSE(r4.enable_semantic_mask);
  const MaskConfig r6 = ablation_row(6);
  EXPECT_TRUE(r6.enable_time_warp && r6.enable_time_mask && r6.enable_freq_mask &&
              r6.enable_semantic_mask);
  EXPECT_TRUE(ablation_row(3).enable_semantic_mask);
  EXPECT_FALSE(ablation_row(3).enable_time_mask);
  EXPECT_THROW(ablation_row(7), ConfigError);
}

TEST(PipelineTest, StageOrderMatchesManualComposition) {
  const FeatureMatrix f = random_features(90, 40, 12);
  const auto spans = tiling_spans(90, 6, 2);
  MaskConfig cfg = ablation_row(6);
  cfg.token_mask_prob = 0.4;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng a(seed);
    const MaskResult got = apply_pipeline(f, spans, cfg, a);
    Rng b(seed);
    const auto fill = utterance_mean(f);
    MaskResult want = semantic_mask(f, spans, cfg, b, fill);
    want.features = time_warp(want.features, cfg.warp_param, b);
    want.features = freq_mask(want.features, cfg.freq_width, cfg.freq_count, b, fill);
    want.features = time_mask(want.features, cfg.time_width, cfg.time_count, b, fill);
    EXPECT_EQ(got.features, want.features);
    EXPECT_EQ(got.masked_tokens, want.masked_tokens);
  }
}

TEST(PipelineTest, DeterministicGivenSeed) {
  const FeatureMatrix f = random_features(90, 40, 13);
  const auto spans = tiling_spans(90, 6, 2);
  Rng a(99), b(99);
  EXPECT_EQ(apply_pipeline(f, spans, ablation_row(6), a).features,
            apply_pipeline(f, spans, ablation_row(6), b).features);
}

TEST(MaskConfigTest, Validation) {
  MaskConfig cfg;
  cfg.token_mask_prob = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.token_mask_prob = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace semask
