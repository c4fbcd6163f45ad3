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

#ifndef SEMASK_MODEL_HPP_
#define SEMASK_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semask/autograd.hpp"
#include "semask/features.hpp"
#include "semask/ops.hpp"
#include "semask/rng.hpp"

namespace semask {

struct ModelConfig {
  std::size_t input_dim = 83;
  std::size_t d_model = 256;
  std::size_t n_heads = 4;
  std::size_t n_enc_layers = 4;
  std::size_t n_dec_layers = 2;
  std::size_t d_ff = 1024;
  std::size_t vocab_size = 0;  // includes the reserved ids (blank at 0)
  double dropout = 0.1;
  std::size_t cnn_channels1 = 32;
  std::size_t cnn_channels2 = 64;
  std::size_t dec_conv_kernel = 3;
  double ln_eps = 1e-5;

  // Desk-scale default, a tiny test preset, and the full-size configuration
  // (12/6 layers, 512 dims, 8 heads).
  static ModelConfig desk(std::size_t input_dim, std::size_t vocab_size);
  static ModelConfig tiny(std::size_t input_dim, std::size_t vocab_size);
  static ModelConfig paper_960h(std::size_t input_dim, std::size_t vocab_size);

  void validate() const;
  // Canonical text of every field; the checkpoint fingerprint hashes it.
  std::string canonical() const;
  std::uint64_t fingerprint() const;

  // Encoder length for T input frames: two ceil-mode 2x poolings.
  static std::size_t subsampled_length(std::size_t frames) { return ((frames + 1) / 2 + 1) / 2; }
};

// Per-forward state: the tape, optional dropout RNG, and train/eval mode.
struct ForwardContext {
  Tape& tape;
  Rng* rng = nullptr;
  bool train = false;
};

struct EncoderOutput {
  Var states;                              // T' x d_model
  std::vector<std::size_t> subsample_map;  // input frame -> encoder frame

  std::size_t length() const { return states.shape()[0]; }
};

// Projection weights for one multi-head attention block.
struct AttentionParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

// Additive mask value for disallowed positions.
constexpr double kMaskedLogit = -1e9;

// softmax(q k^T / sqrt(d_k) + mask) v. mask is m x n (0 or kMaskedLogit).
Var self_attention(const Var& q, const Var& k, const Var& v, const Tensor* mask = nullptr);

// Per-head projections, per-head attention, concatenation, output projection.
Var multi_head(const Var& query, const Var& memory, const AttentionParams& p,
               std::size_t n_heads, const Tensor* mask = nullptr);

// Upper-triangular kMaskedLogit mask for causal self-attention.
Tensor causal_mask(std::size_t n);

class AsrModel {
 public:
  AsrModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // T x D -> T' x d_model.
  Var cnn_frontend(const ForwardContext& ctx, const Var& features);
  // Transformer blocks only; no positional signal is added.
  Var encoder_stack(const ForwardContext& ctx, const Var& x);
  EncoderOutput encode(const ForwardContext& ctx, const FeatureMatrix& features);

  // Logits (len(prefix) x vocab) for next-token prediction after each prefix position.
  Var decode_logits(const ForwardContext& ctx, std::span<const int> prefix,
                    const EncoderOutput& enc);
  // Per-frame log-probabilities (T' x vocab), blank at id 0.
  Var ctc_log_probs(const ForwardContext& ctx, const EncoderOutput& enc);

 private:
  Var p(const ForwardContext& ctx, const std::string& name);
  AttentionParams attention(const ForwardContext& ctx, const std::string& prefix);
  Var conv_block_ln(const ForwardContext& ctx, const Var& x, const std::string& name);
  Var feed_forward(const ForwardContext& ctx, const Var& x, const std::string& prefix);
  Var residual_norm(const ForwardContext& ctx, const Var& x, const Var& sub,
                    const std::string& ln_name);

  void add_linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  void add_attention(const std::string& name, Rng& rng);
  void add_layer_norm(const std::string& name, std::size_t dim);

  ModelConfig cfg_;
  ParameterSet params_;
};

// Uniform(-a, a) tensor with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace semask

#endif  // SEMASK_MODEL_HPP_
