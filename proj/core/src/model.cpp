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

#include "semask/model.hpp"

#include <cmath>
#include <sstream>

#include "semask/errors.hpp"

namespace semask {

using namespace semask::ops;

ModelConfig ModelConfig::desk(std::size_t input_dim, std::size_t vocab_size) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::tiny(std::size_t input_dim, std::size_t vocab_size) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.vocab_size = vocab_size;
  c.d_model = 32;
  c.n_heads = 2;
  c.n_enc_layers = 2;
  c.n_dec_layers = 1;
  c.d_ff = 64;
  c.dropout = 0.0;
  c.cnn_channels1 = 4;
  c.cnn_channels2 = 8;
  return c;
}

ModelConfig ModelConfig::paper_960h(std::size_t input_dim, std::size_t vocab_size) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.vocab_size = vocab_size;
  c.d_model = 512;
  c.n_heads = 8;
  c.n_enc_layers = 12;
  c.n_dec_layers = 6;
  c.d_ff = 2048;
  return c;
}

void ModelConfig::validate() const {
  if (input_dim < 4) throw ConfigError("model input_dim must be >= 4");
  if (d_model == 0 || n_heads == 0 || d_ff == 0 || vocab_size == 0 || cnn_channels1 == 0 ||
      cnn_channels2 == 0 || dec_conv_kernel == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(ln_eps > 0.0)) throw ConfigError("ln_eps must be positive");
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "input_dim=" << input_dim << ";d_model=" << d_model << ";n_heads=" << n_heads
     << ";n_enc_layers=" << n_enc_layers << ";n_dec_layers=" << n_dec_layers << ";d_ff=" << d_ff
     << ";vocab_size=" << vocab_size << ";cnn=" << cnn_channels1 << "," << cnn_channels2
     << ";dec_conv_kernel=" << dec_conv_kernel << ";ln_eps=" << ln_eps;
  return os.str();
}

std::uint64_t ModelConfig::fingerprint() const { return fnv1a64(canonical()); }

Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-a, a);
  return t;
}

Tensor causal_mask(std::size_t n) {
  Tensor m({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m.at(i, j) = kMaskedLogit;
  }
  return m;
}

Var self_attention(const Var& q, const Var& k, const Var& v, const Tensor* mask) {
  if (q.shape().size() != 2 || k.shape().size() != 2 || v.shape().size() != 2) {
    throw DimensionError("self_attention: rank-2 operands required");
  }
  if (q.shape()[1] != k.shape()[1] || k.shape()[0] != v.shape()[0]) {
    throw DimensionError("self_attention: incompatible shapes q" + shape_str(q.shape()) + " k" +
                         shape_str(k.shape()) + " v" + shape_str(v.shape()));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.shape()[1]));
  Var scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);
  if (mask) {
    if (mask->shape() != scores.shape()) {
      throw DimensionError("self_attention: mask " + shape_str(mask->shape()) + " vs scores " +
                           shape_str(scores.shape()));
    }
    scores = add(scores, q.tape().constant(*mask));
  }
  return matmul(softmax(scores), v);
}

Var multi_head(const Var& query, const Var& memory, const AttentionParams& p,
               std::size_t n_heads, const Tensor* mask) {
  Var q = linear(query, p.wq, p.bq);
  Var k = linear(memory, p.wk, p.bk);
  Var v = linear(memory, p.wv, p.bv);
  const std::size_t d = q.shape()[1];
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("multi_head: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(n_heads) + " heads");
  }
  const std::size_t dk = d / n_heads;
  std::vector<Var> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    heads.push_back(self_attention(slice_cols(q, h * dk, dk), slice_cols(k, h * dk, dk),
                                   slice_cols(v, h * dk, dk), mask));
  }
  Var joined = n_heads == 1 ? heads.front() : concat(heads, 1);
  return linear(joined, p.wo, p.bo);
}

AsrModel::AsrModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t c1 = cfg_.cnn_channels1, c2 = cfg_.cnn_channels2;
  auto add_conv = [&](const std::string& name, std::size_t cout, std::size_t cin) {
    params_.add(name, xavier_uniform({cout, cin, 3, 3}, cin * 9, cout * 9, rng));
  };
  add_conv("enc.frontend.conv1a", c1, 1);
  add_layer_norm("enc.frontend.ln1a", c1);
  add_conv("enc.frontend.conv1b", c1, c1);
  add_layer_norm("enc.frontend.ln1b", c1);
  add_conv("enc.frontend.conv2a", c2, c1);
  add_layer_norm("enc.frontend.ln2a", c2);
  add_conv("enc.frontend.conv2b", c2, c2);
  add_layer_norm("enc.frontend.ln2b", c2);
  const std::size_t freq_out = ModelConfig::subsampled_length(cfg_.input_dim);
  add_linear("enc.frontend.proj", c2 * freq_out, cfg_.d_model, rng);

  for (std::size_t l = 0; l < cfg_.n_enc_layers; ++l) {
    const std::string pre = "enc.layers." + std::to_string(l);
    add_attention(pre + ".self_attn", rng);
    add_layer_norm(pre + ".ln1", cfg_.d_model);
    add_linear(pre + ".ff1", cfg_.d_model, cfg_.d_ff, rng);
    add_linear(pre + ".ff2", cfg_.d_ff, cfg_.d_model, rng);
    add_layer_norm(pre + ".ln2", cfg_.d_model);
  }

  const std::size_t d = cfg_.d_model, k = cfg_.dec_conv_kernel;
  {
    Tensor emb({cfg_.vocab_size, d});
    for (double& v : emb.data()) v = rng.normal() / std::sqrt(static_cast<double>(d));
    params_.add("dec.embed", std::move(emb));
  }
  params_.add("dec.conv.weight", xavier_uniform({d, d, k}, d * k, d * k, rng));
  params_.add("dec.conv.bias", Tensor({d}, 0.0));
  for (std::size_t l = 0; l < cfg_.n_dec_layers; ++l) {
    const std::string pre = "dec.layers." + std::to_string(l);
    add_attention(pre + ".self_attn", rng);
    add_layer_norm(pre + ".ln1", d);
    add_attention(pre + ".cross_attn", rng);
    add_layer_norm(pre + ".ln2", d);
    add_linear(pre + ".ff1", d, cfg_.d_ff, rng);
    add_linear(pre + ".ff2", cfg_.d_ff, d, rng);
    add_layer_norm(pre + ".ln3", d);
  }
  add_linear("dec.out", d, cfg_.vocab_size, rng);
  add_linear("ctc.out", d, cfg_.vocab_size, rng);
}

void AsrModel::add_linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  params_.add(name + ".weight", xavier_uniform({in, out}, in, out, rng));
  params_.add(name + ".bias", Tensor({out}, 0.0));
}

void AsrModel::add_attention(const std::string& name, Rng& rng) {
  for (const char* proj : {".q", ".k", ".v", ".o"}) {
    add_linear(name + proj, cfg_.d_model, cfg_.d_model, rng);
  }
}

void AsrModel::add_layer_norm(const std::string& name, std::size_t dim) {
  params_.add(name + ".gain", Tensor({dim}, 1.0));
  params_.add(name + ".bias", Tensor({dim}, 0.0));
}

Var AsrModel::p(const ForwardContext& ctx, const std::string& name) {
  return ctx.tape.param(params_.get(name));
}

AttentionParams AsrModel::attention(const ForwardContext& ctx, const std::string& prefix) {
  return AttentionParams{p(ctx, prefix + ".q.weight"), p(ctx, prefix + ".q.bias"),
                         p(ctx, prefix + ".k.weight"), p(ctx, prefix + ".k.bias"),
                         p(ctx, prefix + ".v.weight"), p(ctx, prefix + ".v.bias"),
                         p(ctx, prefix + ".o.weight"), p(ctx, prefix + ".o.bias")};
}

// conv3x3 -> layer norm over channels -> relu.
Var AsrModel::conv_block_ln(const ForwardContext& ctx, const Var& x, const std::string& name) {
  const std::string conv = "enc.frontend.conv" + name;
  const std::string ln = "enc.frontend.ln" + name;
  Var y = conv2d(x, p(ctx, conv), 1, 1);
  Var channels_last = permute3(y, {1, 2, 0});
  Var normed = layer_norm(channels_last, p(ctx, ln + ".gain"), p(ctx, ln + ".bias"), cfg_.ln_eps);
  return relu(permute3(normed, {2, 0, 1}));
}

Var AsrModel::cnn_frontend(const ForwardContext& ctx, const Var& features) {
  const Shape& s = features.shape();
  if (s.size() != 2 || s[1] != cfg_.input_dim) {
    throw DimensionError("cnn_frontend: expected T x " + std::to_string(cfg_.input_dim) +
                         " features, got " + shape_str(s));
  }
  if (s[0] < 4) {
    throw InputError("cnn_frontend: need at least 4 frames, got " + std::to_string(s[0]));
  }
  Var x = reshape(features, {1, s[0], s[1]});
  x = conv_block_ln(ctx, x, "1a");
  x = conv_block_ln(ctx, x, "1b");
  x = max_pool2d(x, 2, 2, true);
  x = conv_block_ln(ctx, x, "2a");
  x = conv_block_ln(ctx, x, "2b");
  x = max_pool2d(x, 2, 2, true);
  // C x T' x F' -> T' x (C * F')
  Var time_major = permute3(x, {1, 0, 2});
  const Shape& ts = time_major.shape();
  Var flat = reshape(time_major, {ts[0], ts[1] * ts[2]});
  return linear(flat, p(ctx, "enc.frontend.proj.weight"), p(ctx, "enc.frontend.proj.bias"));
}

Var AsrModel::residual_norm(const ForwardContext& ctx, const Var& x, const Var& sub,
                            const std::string& ln_name) {
  Var dropped = ctx.rng ? dropout(sub, cfg_.dropout, *ctx.rng, ctx.train) : sub;
  return layer_norm(add(x, dropped), p(ctx, ln_name + ".gain"), p(ctx, ln_name + ".bias"),
                    cfg_.ln_eps);
}

Var AsrModel::feed_forward(const ForwardContext& ctx, const Var& x, const std::string& prefix) {
  Var h = relu(linear(x, p(ctx, prefix + ".ff1.weight"), p(ctx, prefix + ".ff1.bias")));
  return linear(h, p(ctx, prefix + ".ff2.weight"), p(ctx, prefix + ".ff2.bias"));
}

Var AsrModel::encoder_stack(const ForwardContext& ctx, const Var& x_in) {
  Var x = x_in;
  for (std::size_t l = 0; l < cfg_.n_enc_layers; ++l) {
    const std::string pre = "enc.layers." + std::to_string(l);
    Var attn = multi_head(x, x, attention(ctx, pre + ".self_attn"), cfg_.n_heads);
    x = residual_norm(ctx, x, attn, pre + ".ln1");
    x = residual_norm(ctx, x, feed_forward(ctx, x, pre), pre + ".ln2");
  }
  return x;
}

EncoderOutput AsrModel::encode(const ForwardContext& ctx, const FeatureMatrix& features) {
  Var input = ctx.tape.constant(features.to_tensor());
  EncoderOutput out;
  out.states = encoder_stack(ctx, cnn_frontend(ctx, input));
  out.subsample_map.resize(features.frames());
  for (std::size_t t = 0; t < features.frames(); ++t) out.subsample_map[t] = t / 4;
  return out;
}

Var AsrModel::decode_logits(const ForwardContext& ctx, std::span<const int> prefix,
                            const EncoderOutput& enc) {
  if (prefix.empty()) throw ContractError("decode_logits: empty prefix");
  Var x = embedding(p(ctx, "dec.embed"), prefix);
  // Causal 1-D convolution over time supplies the positional signal.
  const std::size_t k = cfg_.dec_conv_kernel;
  Var conv = conv1d(transpose(x), p(ctx, "dec.conv.weight"), 1, k - 1, 0);
  x = add_row(transpose(conv), p(ctx, "dec.conv.bias"));

  const Tensor mask = causal_mask(prefix.size());
  for (std::size_t l = 0; l < cfg_.n_dec_layers; ++l) {
    const std::string pre = "dec.layers." + std::to_string(l);
    Var self = multi_head(x, x, attention(ctx, pre + ".self_attn"), cfg_.n_heads, &mask);
    x = residual_norm(ctx, x, self, pre + ".ln1");
    Var cross = multi_head(x, enc.states, attention(ctx, pre + ".cross_attn"), cfg_.n_heads);
    x = residual_norm(ctx, x, cross, pre + ".ln2");
    x = residual_norm(ctx, x, feed_forward(ctx, x, pre), pre + ".ln3");
  }
  return linear(x, p(ctx, "dec.out.weight"), p(ctx, "dec.out.bias"));
}

Var AsrModel::ctc_log_probs(const ForwardContext& ctx, const EncoderOutput& enc) {
  return log_softmax(linear(enc.states, p(ctx, "ctc.out.weight"), p(ctx, "ctc.out.bias")));
}

}  // namespace semask
