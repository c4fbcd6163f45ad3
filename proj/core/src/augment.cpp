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

#include "semask/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semask/errors.hpp"
#include "semask/log.hpp"

namespace semask {

void MaskConfig::validate() const {
  if (!(token_mask_prob >= 0.0 && token_mask_prob <= 1.0)) {
    throw ConfigError("token_mask_prob must lie in [0, 1]");
  }
}

MaskConfig ablation_row(int row) {
  MaskConfig cfg;
  cfg.enable_semantic_mask = false;
  switch (row) {
    case 1:
      break;
    case 2:
      cfg.enable_time_mask = true;
      break;
    case 3:
      cfg.enable_semantic_mask = true;
      break;
    case 4:
      cfg.enable_time_warp = cfg.enable_time_mask = cfg.enable_freq_mask = true;
      break;
    case 5:
      cfg.enable_time_warp = cfg.enable_freq_mask = cfg.enable_semantic_mask = true;
      break;
    case 6:
      cfg.enable_time_warp = cfg.enable_time_mask = cfg.enable_freq_mask = true;
      cfg.enable_semantic_mask = true;
      break;
    default:
      throw ConfigError("ablation row must be 1..6, got " + std::to_string(row));
  }
  return cfg;
}

std::vector<double> fill_vector(const FeatureMatrix& f, FillMode mode) {
  switch (mode) {
    case FillMode::kMeanVector:
      return utterance_mean(f);
    case FillMode::kScalarMean: {
      const auto mean = utterance_mean(f);
      const double s = std::accumulate(mean.begin(), mean.end(), 0.0) /
                       static_cast<double>(mean.size());
      return std::vector<double>(f.dims(), s);
    }
    case FillMode::kZeros:
      return std::vector<double>(f.dims(), 0.0);
  }
  return {};
}

std::vector<std::size_t> sample_tokens(std::size_t n, double prob, TokenSampling sampling,
                                       Rng& rng) {
  std::vector<std::size_t> chosen;
  if (n == 0 || prob <= 0.0) return chosen;
  if (sampling == TokenSampling::kBernoulli) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(prob)) chosen.push_back(i);
    }
    return chosen;
  }
  const auto k = static_cast<std::size_t>(std::llround(prob * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(order[i], order[j]);
  }
  chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

MaskResult semantic_mask(const FeatureMatrix& f, const std::vector<FrameSpan>& spans,
                         const MaskConfig& cfg, Rng& rng, const std::vector<double>& fill) {
  if (fill.size() != f.dims()) throw DimensionError("semantic_mask: fill size mismatch");
  MaskResult result{f, {}};
  const auto picks = sample_tokens(spans.size(), cfg.token_mask_prob, cfg.sampling, rng);
  for (std::size_t p : picks) {
    const FrameSpan& span = spans[p];
    if (span.end_frame > f.frames() || span.start_frame >= span.end_frame) {
      throw ValidationError("semantic_mask: span [" + std::to_string(span.start_frame) + ", " +
                            std::to_string(span.end_frame) + ") invalid for " +
                            std::to_string(f.frames()) + " frames");
    }
    for (std::size_t t = span.start_frame; t < span.end_frame; ++t) {
      std::copy(fill.begin(), fill.end(), result.features.row(t).begin());
    }
    result.masked_tokens.push_back(span.token_index);
  }
  return result;
}

MaskResult semantic_mask(const FeatureMatrix& f, const std::vector<FrameSpan>& spans,
                         const MaskConfig& cfg, Rng& rng) {
  return semantic_mask(f, spans, cfg, rng, fill_vector(f, cfg.fill));
}

FeatureMatrix freq_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count, Rng& rng,
                        const std::vector<double>& fill) {
  if (max_width >= f.dims()) {
    throw ConfigError("frequency mask width " + std::to_string(max_width) +
                      " must be smaller than feature dim " + std::to_string(f.dims()));
  }
  FeatureMatrix out = f;
  for (std::size_t m = 0; m < count; ++m) {
    const auto w = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_width)));
    const auto f0 =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(f.dims() - w)));
    for (std::size_t t = 0; t < f.frames(); ++t) {
      for (std::size_t d = f0; d < f0 + w; ++d) out.at(t, d) = fill[d];
    }
  }
  return out;
}

FeatureMatrix freq_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count,
                        Rng& rng) {
  return freq_mask(f, max_width, count, rng, utterance_mean(f));
}

FeatureMatrix time_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count, Rng& rng,
                        const std::vector<double>& fill) {
  FeatureMatrix out = f;
  const std::size_t cap = std::min(max_width, f.frames());
  for (std::size_t m = 0; m < count; ++m) {
    const auto w = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cap)));
    const auto t0 =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(f.frames() - w)));
    for (std::size_t t = t0; t < t0 + w; ++t) {
      std::copy(fill.begin(), fill.end(), out.row(t).begin());
    }
  }
  return out;
}

FeatureMatrix time_mask(const FeatureMatrix& f, std::size_t max_width, std::size_t count,
                        Rng& rng) {
  return time_mask(f, max_width, count, rng, utterance_mean(f));
}

FeatureMatrix warp_frames(const FeatureMatrix& f, std::size_t center, std::ptrdiff_t shift) {
  const std::size_t frames = f.frames();
  if (frames < 2 || shift == 0) return f;
  const double last = static_cast<double>(frames - 1);
  const double src_knot = static_cast<double>(center);
  const double dst_knot = src_knot + static_cast<double>(shift);
  if (src_knot <= 0.0 || src_knot >= last || dst_knot <= 0.0 || dst_knot >= last) {
    throw ContractError("warp_frames: knot outside the interior of the time axis");
  }
  FeatureMatrix out(frames, f.dims());
  out.frame_shift_ms = f.frame_shift_ms;
  out.source_id = f.source_id;
  for (std::size_t t = 0; t < frames; ++t) {
    const double dst = static_cast<double>(t);
    double src;
    if (t == 0 || t + 1 == frames) {
      src = dst;
    } else if (dst <= dst_knot) {
      src = dst * src_knot / dst_knot;
    } else {
      src = src_knot + (dst - dst_knot) * (last - src_knot) / (last - dst_knot);
    }
    src = std::clamp(src, 0.0, last);
    const auto lo = static_cast<std::size_t>(src);
    const std::size_t hi = std::min(lo + 1, frames - 1);
    const double frac = src - static_cast<double>(lo);
    for (std::size_t d = 0; d < f.dims(); ++d) {
      out.at(t, d) = f.at(lo, d) + frac * (f.at(hi, d) - f.at(lo, d));
    }
  }
  return out;
}

FeatureMatrix time_warp(const FeatureMatrix& f, std::size_t warp_param, Rng& rng) {
  if (warp_param == 0) return f;
  if (f.frames() <= 2 * warp_param) {
    log_warning("time_warp skipped: " + std::to_string(f.frames()) + " frames <= 2 * " +
                std::to_string(warp_param));
    return f;
  }
  const auto w = static_cast<std::int64_t>(warp_param);
  const auto center = static_cast<std::size_t>(
      rng.uniform_int(w, static_cast<std::int64_t>(f.frames()) - 1 - w));
  std::ptrdiff_t shift = rng.uniform_int(-w, w);
  // Keep the moved knot off the fixed endpoints.
  const auto c = static_cast<std::ptrdiff_t>(center);
  const auto last = static_cast<std::ptrdiff_t>(f.frames()) - 1;
  shift = std::clamp(shift, 1 - c, last - 1 - c);
  return warp_frames(f, center, shift);
}

MaskResult apply_pipeline(const FeatureMatrix& f, const std::vector<FrameSpan>& spans,
                          const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::vector<double> fill = fill_vector(f, cfg.fill);
  MaskResult result{f, {}};
  if (cfg.enable_semantic_mask) result = semantic_mask(f, spans, cfg, rng, fill);
  if (cfg.enable_time_warp) result.features = time_warp(result.features, cfg.warp_param, rng);
  if (cfg.enable_freq_mask) {
    result.features = freq_mask(result.features, cfg.freq_width, cfg.freq_count, rng, fill);
  }
  if (cfg.enable_time_mask) {
    result.features = time_mask(result.features, cfg.time_width, cfg.time_count, rng, fill);
  }
  return result;
}

}  // namespace semask
