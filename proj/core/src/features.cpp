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

#include "semask/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "semask/errors.hpp"

namespace semask {

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t dims, double fill)
    : frames_(frames), dims_(dims), values_(frames * dims, fill) {}

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t dims, std::vector<double> values)
    : frames_(frames), dims_(dims), values_(std::move(values)) {
  if (values_.size() != frames * dims) {
    throw DimensionError("feature matrix " + std::to_string(frames) + "x" + std::to_string(dims) +
                         " given " + std::to_string(values_.size()) + " values");
  }
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) throw DimensionError("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = x[i + k];
        const auto v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

MelFilterbank make_mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin,
                                  double fmax) {
  if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (fmax <= 0.0) fmax = sample_rate / 2.0;
  if (fmax > sample_rate / 2.0) throw ConfigError("fmax exceeds the Nyquist frequency");
  if (fmin < 0.0 || fmin >= fmax) throw ConfigError("fmin must lie in [0, fmax)");
  const std::size_t bins = static_cast<std::size_t>(n_fft) / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  const double delta = (mel_hi - mel_lo) / (n_mels + 1);

  MelFilterbank fb;
  fb.center_hz.resize(static_cast<std::size_t>(n_mels));
  fb.weights.assign(static_cast<std::size_t>(n_mels), std::vector<double>(bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double left = mel_lo + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    fb.center_hz[static_cast<std::size_t>(m)] = mel_to_hz(center);
    for (std::size_t k = 0; k < bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / n_fft);
      double wgt = 0.0;
      if (mel > left && mel <= center) {
        wgt = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        wgt = (right - mel) / (right - center);
      }
      fb.weights[static_cast<std::size_t>(m)][k] = wgt;
    }
  }
  return fb;
}

std::size_t num_frames(std::size_t num_samples, std::size_t win, std::size_t shift) {
  if (num_samples < win) return 0;
  return 1 + (num_samples - win) / shift;
}

FeatureMatrix log_mel(const Waveform& w, const FeatureConfig& cfg) {
  if (cfg.win_ms < cfg.shift_ms) throw ConfigError("win_ms must be >= shift_ms");
  if (cfg.shift_ms <= 0.0) throw ConfigError("shift_ms must be positive");
  if (cfg.out_dim < cfg.n_mels) throw ConfigError("out_dim must be >= n_mels");
  if (w.sample_rate <= 0) throw InputError("invalid sample rate");
  const auto win = static_cast<std::size_t>(std::lround(cfg.win_ms * w.sample_rate / 1000.0));
  const auto shift = static_cast<std::size_t>(std::lround(cfg.shift_ms * w.sample_rate / 1000.0));
  const std::size_t frames = num_frames(w.samples.size(), win, shift);
  if (frames == 0) {
    throw InputError("waveform of " + std::to_string(w.samples.size()) +
                     " samples is shorter than one " + std::to_string(win) + "-sample window");
  }
  const std::size_t n_fft =
      next_pow2(std::max<std::size_t>(win, static_cast<std::size_t>(std::max(cfg.n_fft, 1))));
  const MelFilterbank fb =
      make_mel_filterbank(cfg.n_mels, static_cast<int>(n_fft), w.sample_rate, cfg.fmin, cfg.fmax);

  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(win - 1));
  }

  const std::size_t bins = n_fft / 2 + 1;
  FeatureMatrix out(frames, static_cast<std::size_t>(cfg.out_dim), 0.0);
  out.frame_shift_ms = cfg.shift_ms;
  std::vector<std::complex<double>> buf(n_fft);
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>());
    for (std::size_t i = 0; i < win; ++i) buf[i] = w.samples[t * shift + i] * window[i];
    fft_inplace(buf);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(buf[k]);
    for (std::size_t m = 0; m < fb.weights.size(); ++m) {
      double e = 0.0;
      const auto& wm = fb.weights[m];
      for (std::size_t k = 0; k < bins; ++k) e += wm[k] * power[k];
      out.at(t, m) = std::log(e + kLogMelFloor);
    }
  }
  return out;
}

Waveform speed_perturb(const Waveform& w, double factor) {
  if (!(factor >= 0.5 && factor <= 2.0)) {
    throw InputError("speed factor " + std::to_string(factor) + " outside [0.5, 2.0]");
  }
  if (w.samples.empty()) throw InputError("speed_perturb: empty waveform");
  if (factor == 1.0) return w;
  const std::size_t in_len = w.samples.size();
  const auto out_len = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(in_len) / factor)));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(out_len);
  if (out_len == 1 || in_len == 1) {
    std::fill(out.samples.begin(), out.samples.end(), w.samples.front());
    return out;
  }
  const double step = static_cast<double>(in_len - 1) / static_cast<double>(out_len - 1);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = std::min(static_cast<double>(i) * step, static_cast<double>(in_len - 1));
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, in_len - 1);
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] = w.samples[lo] + frac * (w.samples[hi] - w.samples[lo]);
  }
  return out;
}

NormStats compute_stats(const FeatureMatrix& f) {
  NormStats s;
  s.mean = utterance_mean(f);
  s.stddev.assign(f.dims(), 0.0);
  for (std::size_t t = 0; t < f.frames(); ++t) {
    for (std::size_t d = 0; d < f.dims(); ++d) {
      const double c = f.at(t, d) - s.mean[d];
      s.stddev[d] += c * c;
    }
  }
  for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(f.frames()));
  return s;
}

FeatureMatrix normalize(const FeatureMatrix& f, NormalizeMode mode, const NormStats* stats) {
  NormStats local;
  if (mode == NormalizeMode::kPerUtterance) {
    local = compute_stats(f);
    stats = &local;
  } else if (stats == nullptr) {
    throw ConfigError("global normalization requires statistics");
  }
  if (stats->mean.size() != f.dims() || stats->stddev.size() != f.dims()) {
    throw DimensionError("normalization stats have " + std::to_string(stats->mean.size()) +
                         " dims, features have " + std::to_string(f.dims()));
  }
  constexpr double kMinStd = 1e-8;
  FeatureMatrix out = f;
  for (std::size_t t = 0; t < f.frames(); ++t) {
    for (std::size_t d = 0; d < f.dims(); ++d) {
      double v = f.at(t, d) - stats->mean[d];
      if (stats->stddev[d] >= kMinStd) v /= stats->stddev[d];
      out.at(t, d) = v;
    }
  }
  return out;
}

std::vector<double> utterance_mean(const FeatureMatrix& f) {
  if (f.frames() == 0) throw InputError("utterance_mean: no frames");
  std::vector<double> mean(f.dims(), 0.0);
  for (std::size_t t = 0; t < f.frames(); ++t) {
    for (std::size_t d = 0; d < f.dims(); ++d) mean[d] += f.at(t, d);
  }
  for (double& m : mean) m /= static_cast<double>(f.frames());
  return mean;
}

}  // namespace semask
