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

#ifndef SEMASK_RNG_HPP_
#define SEMASK_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace semask {

// Deterministic random source. The engine output sequence is fixed by the
// C++ standard; the distributions below are written out by hand because the
// standard library distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform real in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller.
  double normal();

  // Independent stream for a named item, e.g. one utterance.
  Rng fork(std::string_view key) const;

  std::uint64_t seed() const { return seed_; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Per-item stream seed from a base seed and a key (FNV-1a then splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace semask

#endif  // SEMASK_RNG_HPP_
