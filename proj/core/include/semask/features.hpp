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

#ifndef SEMASK_FEATURES_HPP_
#define SEMASK_FEATURES_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semask/tensor.hpp"

namespace semask {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

// T x D matrix of frames, row-major.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t frames, std::size_t dims, double fill = 0.0);
  FeatureMatrix(std::size_t frames, std::size_t dims, std::vector<double> values);

  std::size_t frames() const { return frames_; }
  std::size_t dims() const { return dims_; }
  bool empty() const { return frames_ == 0; }

  double& at(std::size_t t, std::size_t d) { return values_[t * dims_ + d]; }
  double at(std::size_t t, std::size_t d) const { return values_[t * dims_ + d]; }
  std::span<double> row(std::size_t t) { return {values_.data() + t * dims_, dims_}; }
  std::span<const double> row(std::size_t t) const { return {values_.data() + t * dims_, dims_}; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Tensor to_tensor() const { return Tensor({frames_, dims_}, values_); }

  double frame_shift_ms = 10.0;
  std::string source_id;

  bool operator==(const FeatureMatrix& other) const {
    return frames_ == other.frames_ && dims_ == other.dims_ && values_ == other.values_;
  }

 private:
  std::size_t frames_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

struct FeatureConfig {
  int n_fft = 512;
  double win_ms = 25.0;
  double shift_ms = 10.0;
  int n_mels = 80;
  double fmin = 20.0;
  double fmax = 0.0;   // <= 0 means sample_rate / 2
  int out_dim = 83;    // dims beyond n_mels are zero-filled pitch slots
};

constexpr double kLogMelFloor = 1e-10;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x);

std::size_t next_pow2(std::size_t n);

// Triangular mel filters over the first n_fft/2 + 1 bins: n_mels rows.
struct MelFilterbank {
  std::vector<double> center_hz;
  std::vector<std::vector<double>> weights;
};
MelFilterbank make_mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin,
                                  double fmax);

std::size_t num_frames(std::size_t num_samples, std::size_t win, std::size_t shift);

// Hann-windowed power spectrum -> mel energies -> log(energy + floor).
FeatureMatrix log_mel(const Waveform& w, const FeatureConfig& cfg);

// Linear-interpolation resampling to round(len / factor) samples with the
// first and last samples kept in place. factor 1.0 returns the input.
Waveform speed_perturb(const Waveform& w, double factor);

enum class NormalizeMode { kPerUtterance, kGlobal };

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Per-dimension statistics over frames (population std).
NormStats compute_stats(const FeatureMatrix& f);

FeatureMatrix normalize(const FeatureMatrix& f, NormalizeMode mode = NormalizeMode::kPerUtterance,
                        const NormStats* stats = nullptr);

std::vector<double> utterance_mean(const FeatureMatrix& f);

}  // namespace semask

#endif  // SEMASK_FEATURES_HPP_
