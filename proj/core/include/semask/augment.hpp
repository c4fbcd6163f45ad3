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

#ifndef SEMASK_AUGMENT_HPP_
#define SEMASK_AUGMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semask/alignment.hpp"
#include "semask/features.hpp"
#include "semask/rng.hpp"

namespace semask {

enum class FillMode { kMeanVector, kScalarMean, kZeros };

// How token_mask_prob is turned into a selection: an independent draw per
// token, or exactly round(prob * n) tokens chosen without replacement.
enum class TokenSampling { kBernoulli, kExactFraction };

struct MaskConfig {
  bool enable_semantic_mask = true;
  double token_mask_prob = 0.15;
  TokenSampling sampling = TokenSampling::kBernoulli;
  FillMode fill = FillMode::kMeanVector;

  bool enable_time_warp = false;
  std::size_t warp_param = 5;

  bool enable_freq_mask = false;
  std::size_t freq_width = 30;
  std::size_t freq_count = 2;

  bool enable_time_mask = false;
  std::size_t time_width = 40;
  std::size_t time_count = 2;

  std::uint64_t seed = 0;

  void validate() const;
};

// Stage toggles of the masking ablation rows (1-based, six rows): none,
// time mask, word mask, SpecAugment default, word mask replacing time mask,
// everything.
MaskConfig ablation_row(int row);

struct MaskResult {
  FeatureMatrix features;
  std::vector<std::size_t> masked_tokens;  // FrameSpan::token_index values
};

// Fill vector for the chosen mode, computed from f.
std::vector<double> fill_vector(const FeatureMatrix& f, FillMode mode);

// Replaces every frame of each selected span with `fill`.
MaskResult semantic_mask(const FeatureMatrix& f, const std::vector<FrameSpan>& spans,
                         const MaskConfig& cfg, Rng& rng, const std::vector<double>& fill);
MaskResult semantic_mask(const FeatureMatrix& f, const std::vector<FrameSpan>& spans,
                         const MaskConfig& cfg, Rng& rng);

// Token indices chosen for masking out of n candidates.
std::vector<std::size_t> sample_tokens(std::size_t n, double prob, TokenSampling sampling,
                                       Rng& rng);

FeatureMatrix freq_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count, Rng& rng,
                        const std::vector<double>& fill);
FeatureMatrix freq_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count, Rng& rng);

FeatureMatrix time_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count, Rng& rng,
                        const std::vector<double>& fill);
FeatureMatrix time_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count, Rng& rng);

// Piecewise-linear time remap sending frame `center` to `center + shift`
// with the first and last frames fixed.
FeatureMatrix warp_frames(const FeatureMatrix& f, std::size_t center, std::ptrdiff_t shift);
FeatureMatrix time_warp(const FeatureMatrix& f, std::size_t warp_param, Rng& rng);

// semantic mask -> time warp -> frequency mask -> time mask, each stage only
// when enabled. The fill is computed once from the input.
MaskResult apply_pipeline(const FeatureMatrix& f, const std::vector<FrameSpan>& spans,
                          const MaskConfig& cfg, Rng& rng);

}  // namespace semask

#endif  // SEMASK_AUGMENT_HPP_
