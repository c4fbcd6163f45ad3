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

#ifndef SEMASK_OPS_HPP_
#define SEMASK_OPS_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "semask/autograd.hpp"
#include "semask/rng.hpp"

// Differentiable operations on tape variables. Every op records its backward
// rule on the tape of its first operand; all operands must share that tape.
namespace semask::ops {

// Elementwise, identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var relu(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);

// x[m x n] + bias[n] broadcast over rows.
Var add_row(const Var& x, const Var& bias);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var reshape(const Var& x, Shape shape);
// Rank-3 axis permutation; out.dim(i) == x.dim(axes[i]).
Var permute3(const Var& x, std::array<std::size_t, 3> axes);

// x[m x k] * weight[k x n] + bias[n].
Var linear(const Var& x, const Var& weight, const Var& bias);

// Along the last axis.
Var softmax(const Var& x);
Var log_softmax(const Var& x);
Var logsumexp(const Var& x);
// Stable log(sum(exp(.))) of scalar variables; -inf entries are allowed.
Var logsumexp(std::span<const Var> scalars);

// General-axis softmax.
Var softmax(const Var& x, std::size_t axis);

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps);

// x[C_in x H x W], kernels[C_out x C_in x kh x kw]; cross-correlation.
Var conv2d(const Var& x, const Var& kernels, std::size_t stride, std::size_t padding);
// x[C x H x W]; ceil_mode keeps trailing partial windows.
Var max_pool2d(const Var& x, std::size_t window, std::size_t stride, bool ceil_mode = false);
// x[C_in x L], kernels[C_out x C_in x k].
Var conv1d(const Var& x, const Var& kernels, std::size_t stride, std::size_t pad_left,
           std::size_t pad_right);

// Rows of table[V x d] selected by ids.
Var embedding(const Var& table, std::span<const int> ids);

// Rank-2 concatenation along axis 0 or 1.
Var concat(std::span<const Var> parts, std::size_t axis);
// Columns [begin, begin + count) of a rank-2 variable.
Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
// Rows [begin, begin + count) of a rank-2 variable.
Var slice_rows(const Var& x, std::size_t begin, std::size_t count);

// Inverted dropout; identity when !train or p == 0.
Var dropout(const Var& x, double p, Rng& rng, bool train);

Var sum(const Var& x);
Var mean(const Var& x);
// Scalar x[flat_index].
Var element(const Var& x, std::size_t flat_index);
// Vector of x[r, cols[r]] for a rank-2 x.
Var pick(const Var& x, std::span<const int> cols);

}  // namespace semask::ops

#endif  // SEMASK_OPS_HPP_
