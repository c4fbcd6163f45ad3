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
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "semask/errors.hpp"
#include "semask/model.hpp"
#include "support/oracles.hpp"

namespace semask {
namespace {

using testing::random_tensor;
using namespace ops;

FeatureMatrix random_features(std::size_t t, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix f(t, d);
  for (double& v : f.values()) v = rng.uniform(-2.0, 2.0);
  return f;
}

ModelConfig small_config() {
  ModelConfig c = ModelConfig::tiny(16, 7);
  c.d_model = 16;
  c.d_ff = 24;
  return c;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < x.dim(1); ++c) out.at(i, c) = x.at(perm[i], c);
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(ModelShapes, SubsampledLength) {
  EXPECT_EQ(ModelConfig::subsampled_length(4), 1u);
  EXPECT_EQ(ModelConfig::subsampled_length(8), 2u);
  EXPECT_EQ(ModelConfig::subsampled_length(9), 3u);
  EXPECT_EQ(ModelConfig::subsampled_length(100), 25u);
  EXPECT_EQ(ModelConfig::subsampled_length(101), 26u);
}

TEST(ModelShapes, EncoderOutputShape) {
  AsrModel model(small_config(), 3);
  for (std::size_t t : {4u, 8u, 13u}) {
    Tape tape(false);
    ForwardContext ctx{tape};
    EncoderOutput enc = model.encode(ctx, random_features(t, 16, t));
    EXPECT_EQ(enc.states.shape(), (Shape{ModelConfig::subsampled_length(t), 16}));
    ASSERT_EQ(enc.subsample_map.size(), t);
    EXPECT_EQ(enc.subsample_map.back(), (t - 1) / 4);
  }
}

TEST(ModelShapes, TooFewFramesRejected) {
  AsrModel model(small_config(), 3);
  Tape tape(false);
  ForwardContext ctx{tape};
  EXPECT_THROW(model.encode(ctx, random_features(3, 16, 1)), InputError);
  EXPECT_THROW(model.encode(ctx, random_features(8, 15, 1)), DimensionError);
}

TEST(ModelShapes, ZeroInputIsFinite) {
  AsrModel model(small_config(), 3);
  Tape tape(false);
  ForwardContext ctx{tape};
  EncoderOutput enc = model.encode(ctx, FeatureMatrix(12, 16, 0.0));
  for (double v : enc.states.value().data()) EXPECT_TRUE(std::isfinite(v));
  const std::vector<int> prefix{1, 4};
  for (double v : model.decode_logits(ctx, prefix, enc).value().data()) {
    EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(ModelShapes, FrameShiftChangesOutput) {
  AsrModel model(small_config(), 3);
  FeatureMatrix a = random_features(16, 16, 9);
  FeatureMatrix b(16, 16);
  for (std::size_t t = 0; t < 16; ++t) {
    for (std::size_t d = 0; d < 16; ++d) b.at(t, d) = a.at((t + 1) % 16, d);
  }
  Tape tape(false);
  ForwardContext ctx{tape};
  Tensor ea = model.encode(ctx, a).states.value();
  Tensor eb = model.encode(ctx, b).states.value();
  EXPECT_GT(max_abs_diff(ea, eb), 1e-6);
}

TEST(ModelConfigTest, ValidateRejectsIndivisibleHeads) {
  ModelConfig c = small_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfigTest, FingerprintTracksArchitecture) {
  ModelConfig a = small_config();
  ModelConfig b = small_config();
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.n_enc_layers += 1;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(Attention, SingleKeyReturnsValue) {
  Rng rng(1);
  Tape tape(false);
  Var q = tape.constant(random_tensor({3, 4}, rng));
  Var k = tape.constant(random_tensor({1, 4}, rng));
  Tensor vt = random_tensor({1, 5}, rng);
  Var v = tape.constant(vt);
  Tensor out = self_attention(q, k, v).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(out.at(i, c), vt.at(0, c));
  }
}

TEST(Attention, MatchesScaledSoftmaxFormula) {
  Rng rng(2);
  Tensor qt = random_tensor({3, 4}, rng), kt = random_tensor({5, 4}, rng),
         vt = random_tensor({5, 2}, rng);
  Tape tape(false);
  Tensor out = self_attention(tape.constant(qt), tape.constant(kt), tape.constant(vt)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> w(5);
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 4; ++c) s += qt.at(i, c) * kt.at(j, c);
      w[j] = std::exp(s / 2.0);
    }
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t c = 0; c < 2; ++c) {
      double ref = 0.0;
      for (std::size_t j = 0; j < 5; ++j) ref += w[j] / z * vt.at(j, c);
      EXPECT_NEAR(out.at(i, c), ref, 1e-12);
    }
  }
}

TEST(Attention, DominantKeyConcentratesWeight) {
  Tape tape(false);
  Tensor qt({1, 2}, 0.0);
  qt.at(0, 0) = 40.0;
  Tensor kt = Tensor::matrix({{0.0, 1.0}, {1.0, 0.0}, {0.0, -1.0}});
  Tensor vt = Tensor::matrix({{1.0}, {2.0}, {3.0}});
  Tensor out = self_attention(tape.constant(qt), tape.constant(kt), tape.constant(vt)).value();
  EXPECT_NEAR(out.at(0, 0), 2.0, 1e-9);
}

TEST(Attention, MaskedPositionsGetNoWeight) {
  Rng rng(3);
  Tensor qt = random_tensor({4, 3}, rng), kt = random_tensor({4, 3}, rng),
         vt = random_tensor({4, 3}, rng);
  const Tensor mask = causal_mask(4);
  Tape tape(false);
  Tensor full = self_attention(tape.constant(qt), tape.constant(kt), tape.constant(vt), &mask)
                    .value();
  Tensor q2 = qt, k2 = kt, v2 = vt;
  for (std::size_t c = 0; c < 3; ++c) {
    k2.at(3, c) += 5.0;
    v2.at(3, c) -= 7.0;
  }
  Tensor changed =
      self_attention(tape.constant(q2), tape.constant(k2), tape.constant(v2), &mask).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(full.at(i, c), changed.at(i, c));
  }
}

struct HeadParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

HeadParams random_head_params(std::size_t d, Rng& rng) {
  return {random_tensor({d, d}, rng, -0.5, 0.5), random_tensor({d}, rng, -0.5, 0.5),
          random_tensor({d, d}, rng, -0.5, 0.5), random_tensor({d}, rng, -0.5, 0.5),
          random_tensor({d, d}, rng, -0.5, 0.5), random_tensor({d}, rng, -0.5, 0.5),
          random_tensor({d, d}, rng, -0.5, 0.5), random_tensor({d}, rng, -0.5, 0.5)};
}

AttentionParams bind(Tape& tape, const HeadParams& h) {
  return {tape.constant(h.wq), tape.constant(h.bq), tape.constant(h.wk), tape.constant(h.bk),
          tape.constant(h.wv), tape.constant(h.bv), tape.constant(h.wo), tape.constant(h.bo)};
}

Tensor affine_ref(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out({x.dim(0), w.dim(1)});
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < w.dim(1); ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < x.dim(1); ++k) s += x.at(i, k) * w.at(k, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

Tensor multi_head_ref(const Tensor& query, const Tensor& memory, const HeadParams& p,
                      std::size_t heads) {
  const Tensor q = affine_ref(query, p.wq, p.bq), k = affine_ref(memory, p.wk, p.bk),
               v = affine_ref(memory, p.wv, p.bv);
  const std::size_t d = q.dim(1), dk = d / heads;
  Tensor joined({query.dim(0), d});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < query.dim(0); ++i) {
      std::vector<double> s(memory.dim(0));
      for (std::size_t j = 0; j < memory.dim(0); ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dk; ++c) dot += q.at(i, h * dk + c) * k.at(j, h * dk + c);
        s[j] = dot / std::sqrt(static_cast<double>(dk));
      }
      const double m = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& x : s) z += (x = std::exp(x - m));
      for (std::size_t c = 0; c < dk; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < memory.dim(0); ++j) acc += s[j] / z * v.at(j, h * dk + c);
        joined.at(i, h * dk + c) = acc;
      }
    }
  }
  return affine_ref(joined, p.wo, p.bo);
}

TEST(MultiHead, MatchesPerHeadOracle) {
  Rng rng(4);
  const HeadParams hp = random_head_params(8, rng);
  const Tensor query = random_tensor({3, 8}, rng), memory = random_tensor({5, 8}, rng);
  for (std::size_t heads : {1u, 2u, 4u}) {
    Tape tape(false);
    Tensor out =
        multi_head(tape.constant(query), tape.constant(memory), bind(tape, hp), heads).value();
    EXPECT_LT(max_abs_diff(out, multi_head_ref(query, memory, hp, heads)), 1e-12);
  }
}

TEST(MultiHead, SingleIdentityHeadReducesToAttention) {
  Rng rng(5);
  HeadParams hp = random_head_params(4, rng);
  Tensor eye({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  hp.wq = hp.wk = hp.wv = hp.wo = eye;
  hp.bq = hp.bk = hp.bv = hp.bo = Tensor({4}, 0.0);
  const Tensor x = random_tensor({5, 4}, rng);
  Tape tape(false);
  Var xv = tape.constant(x);
  Tensor a = multi_head(xv, xv, bind(tape, hp), 1).value();
  Tensor b = self_attention(xv, xv, xv).value();
  EXPECT_LT(max_abs_diff(a, b), 1e-14);
}

TEST(MultiHead, HeadOrderIsIrrelevantWhenOutputRowsFollow) {
  Rng rng(6);
  const HeadParams hp = random_head_params(8, rng);
  const std::size_t heads = 4, dk = 2;
  const std::vector<std::size_t> order{2, 0, 3, 1};
  HeadParams swapped = hp;
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t c = 0; c < dk; ++c) {
      const std::size_t to = h * dk + c, from = order[h] * dk + c;
      for (std::size_t r = 0; r < 8; ++r) {
        swapped.wq.at(r, to) = hp.wq.at(r, from);
        swapped.wk.at(r, to) = hp.wk.at(r, from);
        swapped.wv.at(r, to) = hp.wv.at(r, from);
        swapped.wo.at(to, r) = hp.wo.at(from, r);
      }
      swapped.bq[to] = hp.bq[from];
      swapped.bk[to] = hp.bk[from];
      swapped.bv[to] = hp.bv[from];
    }
  }
  const Tensor x = random_tensor({6, 8}, rng);
  Tape tape(false);
  Var xv = tape.constant(x);
  Tensor a = multi_head(xv, xv, bind(tape, hp), heads).value();
  Tensor b = multi_head(xv, xv, bind(tape, swapped), heads).value();
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(MultiHead, IdenticalMemoryRowsCollapseCrossAttention) {
  Rng rng(7);
  const HeadParams hp = random_head_params(8, rng);
  const Tensor state = random_tensor({1, 8}, rng);
  Tensor memory({4, 8});
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t c = 0; c < 8; ++c) memory.at(j, c) = state.at(0, c);
  }
  const Tensor expect = affine_ref(affine_ref(state, hp.wv, hp.bv), hp.wo, hp.bo);
  const Tensor query = random_tensor({3, 8}, rng);
  Tape tape(false);
  Tensor out =
      multi_head(tape.constant(query), tape.constant(memory), bind(tape, hp), 2).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(out.at(i, c), expect.at(0, c), 1e-12);
  }
}

TEST(MultiHead, RejectsIndivisibleWidth) {
  Rng rng(8);
  const HeadParams hp = random_head_params(6, rng);
  Tape tape(false);
  Var x = tape.constant(random_tensor({2, 6}, rng));
  EXPECT_THROW(multi_head(x, x, bind(tape, hp), 4), DimensionError);
}

TEST(Encoder, StackIsPermutationEquivariant) {
  AsrModel model(small_config(), 11);
  Rng rng(12);
  const Tensor x = random_tensor({7, 16}, rng);
  const std::vector<std::size_t> perm{3, 6, 0, 1, 5, 2, 4};
  Tape tape(false);
  ForwardContext ctx{tape};
  Tensor y = model.encoder_stack(ctx, tape.constant(x)).value();
  Tensor yp = model.encoder_stack(ctx, tape.constant(permute_rows(x, perm))).value();
  EXPECT_LT(max_abs_diff(yp, permute_rows(y, perm)), 1e-9);
}

TEST(Encoder, FullEncoderIsNotPermutationEquivariant) {
  AsrModel model(small_config(), 11);
  const FeatureMatrix f = random_features(16, 16, 13);
  Tape tape(false);
  ForwardContext ctx{tape};
  const Tensor y = model.encode(ctx, f).states.value();
  Rng rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::size_t> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    FeatureMatrix g(16, 16);
    for (std::size_t t = 0; t < 16; ++t) {
      for (std::size_t d = 0; d < 16; ++d) g.at(t, d) = f.at(perm[t], d);
    }
    const Tensor yg = model.encode(ctx, g).states.value();
    std::vector<double> rows_y(y.data().begin(), y.data().end());
    std::vector<double> rows_g(yg.data().begin(), yg.data().end());
    std::sort(rows_y.begin(), rows_y.end());
    std::sort(rows_g.begin(), rows_g.end());
    for (std::size_t i = 0; i < rows_y.size(); ++i) {
      worst = std::max(worst, std::abs(rows_y[i] - rows_g[i]));
    }
  }
  EXPECT_GT(worst, 1e-6);
}

TEST(Decoder, LogitsAreCausal) {
  AsrModel model(small_config(), 21);
  Tape tape(false);
  ForwardContext ctx{tape};
  EncoderOutput enc = model.encode(ctx, random_features(12, 16, 22));
  const std::vector<int> a{1, 4, 5, 6, 3};
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    std::vector<int> b = a;
    for (std::size_t j = k + 1; j < b.size(); ++j) b[j] = 3 + static_cast<int>((b[j] + 1) % 4);
    Tensor la = model.decode_logits(ctx, a, enc).value();
    Tensor lb = model.decode_logits(ctx, b, enc).value();
    for (std::size_t i = 0; i <= k; ++i) {
      for (std::size_t c = 0; c < la.dim(1); ++c) EXPECT_EQ(la.at(i, c), lb.at(i, c));
    }
  }
}

TEST(Decoder, StartPrefixGivesOneRow) {
  AsrModel model(small_config(), 21);
  Tape tape(false);
  ForwardContext ctx{tape};
  EncoderOutput enc = model.encode(ctx, random_features(4, 16, 23));
  const std::vector<int> start{1};
  EXPECT_EQ(model.decode_logits(ctx, start, enc).shape(), (Shape{1, 7}));
  EXPECT_THROW(model.decode_logits(ctx, std::span<const int>{}, enc), ContractError);
}

TEST(CtcHead, ZeroWeightsGiveUniform) {
  AsrModel model(small_config(), 31);
  model.params().get("ctc.out.weight").value.fill(0.0);
  model.params().get("ctc.out.bias").value.fill(0.0);
  Tape tape(false);
  ForwardContext ctx{tape};
  EncoderOutput enc = model.encode(ctx, random_features(9, 16, 32));
  for (double v : model.ctc_log_probs(ctx, enc).value().data()) {
    EXPECT_NEAR(v, -std::log(7.0), 1e-12);
  }
}

TEST(CtcHead, RowsAreNormalized) {
  AsrModel model(small_config(), 31);
  Tape tape(false);
  ForwardContext ctx{tape};
  EncoderOutput enc = model.encode(ctx, random_features(20, 16, 33));
  Tensor lp = model.ctc_log_probs(ctx, enc).value();
  ASSERT_EQ(lp.shape(), (Shape{5, 7}));
  for (std::size_t t = 0; t < 5; ++t) {
    double z = 0.0;
    for (double v : lp.row(t)) z += std::exp(v);
    EXPECT_NEAR(z, 1.0, 1e-12);
  }
}

TEST(ModelDeterminism, SameSeedSameOutput) {
  AsrModel a(small_config(), 41), b(small_config(), 41), c(small_config(), 42);
  const FeatureMatrix f = random_features(10, 16, 43);
  const std::vector<int> prefix{1, 5};
  auto run = [&](AsrModel& m) {
    Tape tape(false);
    ForwardContext ctx{tape};
    EncoderOutput enc = m.encode(ctx, f);
    return m.decode_logits(ctx, prefix, enc).value();
  };
  EXPECT_EQ(run(a), run(b));
  EXPECT_NE(run(a), run(c));
}

TEST(ModelDropout, ActiveOnlyInTraining) {
  ModelConfig cfg = small_config();
  cfg.dropout = 0.3;
  AsrModel model(cfg, 51);
  const FeatureMatrix f = random_features(8, 16, 52);
  Tape tape(false);
  Rng r1(1), r2(2);
  Tensor eval_a = model.encode(ForwardContext{tape}, f).states.value();
  Tensor eval_b = model.encode(ForwardContext{tape, &r1, false}, f).states.value();
  Tensor train = model.encode(ForwardContext{tape, &r2, true}, f).states.value();
  EXPECT_EQ(eval_a, eval_b);
  EXPECT_GT(max_abs_diff(eval_a, train), 1e-6);
}

TEST(ModelGradient, ParametersMatchFiniteDifferences) {
  ModelConfig cfg = small_config();
  cfg.d_model = 8;
  cfg.d_ff = 8;
  cfg.cnn_channels1 = 2;
  cfg.cnn_channels2 = 2;
  AsrModel model(cfg, 61);
  const FeatureMatrix f = random_features(8, 16, 62);
  const std::vector<int> prefix{1, 4, 5};
  auto loss = [&](Tape& tape) {
    ForwardContext ctx{tape};
    EncoderOutput enc = model.encode(ctx, f);
    Var s = add(testing::probe(model.decode_logits(ctx, prefix, enc), 3),
                testing::probe(model.ctc_log_probs(ctx, enc), 4));
    return s;
  };
  model.params().zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  double worst = 0.0;
  std::size_t checked = 0;
  Rng pick(63);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Parameter& p = model.params()[i];
    for (int rep = 0; rep < 2; ++rep) {
      const std::size_t j = static_cast<std::size_t>(
          pick.uniform_int(0, static_cast<std::int64_t>(p.value.size()) - 1));
      const double x0 = p.value[j], h = 1e-5;
      p.value[j] = x0 + h;
      Tape tp(false);
      const double fp = loss(tp).value().item();
      p.value[j] = x0 - h;
      Tape tm(false);
      const double fm = loss(tm).value().item();
      p.value[j] = x0;
      const double numeric = (fp - fm) / (2.0 * h);
      if (std::abs(numeric) < 1e-7 && std::abs(p.grad[j]) < 1e-7) continue;
      worst = std::max(worst, testing::rel_error(p.grad[j], numeric));
      ++checked;
    }
  }
  EXPECT_GT(checked, model.params().size());
  EXPECT_LT(worst, 1e-4);
}

}  // namespace
}  // namespace semask
