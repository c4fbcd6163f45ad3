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

#include "semask/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semask/errors.hpp"

namespace semask::ops {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_rank(const char* op, const Var& x, std::size_t rank) {
  if (x.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(x.shape()));
  }
}

void require_finite(const char* op, std::span<const double> values) {
  for (double v : values) {
    if (std::isnan(v)) throw NumericError(std::string(op) + ": NaN input");
  }
}

// Accumulates src into the gradient buffer of v when v needs it.
template <typename F>
void with_grad(Tape& t, const Var& v, F&& f) {
  if (t.requires_grad(v.id())) f(t.grad_buffer(v.id()));
}

// Splits a shape into (rows, last) for last-axis reductions.
std::pair<std::size_t, std::size_t> rows_and_last(const Shape& shape) {
  if (shape.empty()) return {1, 1};
  const std::size_t last = shape.back();
  return {shape_size(shape) / last, last};
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    for (const Var& v : {a, b}) {
      with_grad(t, v, [&](Tensor& gv) {
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      });
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    with_grad(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
    with_grad(t, b, [&](Tensor& gb) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    });
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    with_grad(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    });
    with_grad(t, b, [&](Tensor& gb) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    });
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return a.tape().record(std::move(out), {a}, [a, factor](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var exp(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::exp(v);
  Tensor saved = out;
  return x.tape().record(std::move(out), {x}, [x, y = std::move(saved)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
  });
}

Var log(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::log(v);
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv[i];
  });
}

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  Tensor saved = out;
  return x.tape().record(std::move(out), {x}, [x, y = std::move(saved)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  Tensor saved = out;
  return x.tape().record(std::move(out), {x}, [x, y = std::move(saved)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var add_row(const Var& x, const Var& bias) {
  require_rank("add_row", x, 2);
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (bias.value().size() != n) {
    throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " vs input " +
                         shape_str(x.shape()));
  }
  Tensor out = x.value();
  const Tensor& b = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += b[j];
  }
  return x.tape().record(std::move(out), {x, bias}, [x, bias, m, n](Tape& t, const Tensor& g) {
    with_grad(t, x, [&](Tensor& gx) {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    with_grad(t, bias, [&](Tensor& gb) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
    });
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor out({m, n}, 0.0);
  const double* ad = a.value().data().data();
  const double* bd = b.value().data().data();
  double* od = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = od + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      const double* brow = bd + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    const double* gd = g.data().data();
    with_grad(t, a, [&](Tensor& ga) {
      const double* bd = t.value(b).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += gd[i * n + j] * bd[p * n + j];
          ga[i * k + p] += s;
        }
      }
    });
    with_grad(t, b, [&](Tensor& gb) {
      const double* ad = t.value(a).data().data();
      double* gbd = gb.data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = ad[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gbd[p * n + j] += av * gd[i * n + j];
        }
      }
    });
  });
}

Var transpose(const Var& x) {
  require_rank("transpose", x, 2);
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  Tensor out({n, m});
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = xv.at(i, j);
  }
  return x.tape().record(std::move(out), {x}, [x, m, n](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) gx.at(i, j) += g.at(j, i);
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var permute3(const Var& x, std::array<std::size_t, 3> axes) {
  require_rank("permute3", x, 3);
  const Shape& in = x.shape();
  const Shape out_shape{in[axes[0]], in[axes[1]], in[axes[2]]};
  const std::array<std::size_t, 3> in_stride{in[1] * in[2], in[2], 1};
  // Stride in the input for each output axis.
  const std::array<std::size_t, 3> src_stride{in_stride[axes[0]], in_stride[axes[1]],
                                              in_stride[axes[2]]};
  Tensor out(out_shape);
  const Tensor& xv = x.value();
  std::size_t o = 0;
  for (std::size_t i = 0; i < out_shape[0]; ++i) {
    for (std::size_t j = 0; j < out_shape[1]; ++j) {
      for (std::size_t k = 0; k < out_shape[2]; ++k) {
        out[o++] = xv[i * src_stride[0] + j * src_stride[1] + k * src_stride[2]];
      }
    }
  }
  return x.tape().record(std::move(out), {x},
                         [x, out_shape, src_stride](Tape& t, const Tensor& g) {
                           Tensor& gx = t.grad_buffer(x.id());
                           std::size_t o = 0;
                           for (std::size_t i = 0; i < out_shape[0]; ++i) {
                             for (std::size_t j = 0; j < out_shape[1]; ++j) {
                               for (std::size_t k = 0; k < out_shape[2]; ++k) {
                                 gx[i * src_stride[0] + j * src_stride[1] + k * src_stride[2]] +=
                                     g[o++];
                               }
                             }
                           }
                         });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  return add_row(matmul(x, weight), bias);
}

Var softmax(const Var& x) {
  require_finite("softmax", x.value().data());
  const auto [rows, n] = rows_and_last(x.shape());
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      s += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= s;
  }
  Tensor saved = out;
  return x.tape().record(std::move(out), {x},
                         [x, y = std::move(saved), rows, n](Tape& t, const Tensor& g) {
                           Tensor& gx = t.grad_buffer(x.id());
                           for (std::size_t r = 0; r < rows; ++r) {
                             const std::size_t off = r * n;
                             double dot = 0.0;
                             for (std::size_t j = 0; j < n; ++j) dot += g[off + j] * y[off + j];
                             for (std::size_t j = 0; j < n; ++j) {
                               gx[off + j] += y[off + j] * (g[off + j] - dot);
                             }
                           }
                         });
}

Var softmax(const Var& x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) throw DimensionError("softmax: axis out of range");
  if (axis + 1 == shape.size()) return softmax(x);
  require_finite("softmax", x.value().data());
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t n = shape[axis];
  Tensor out = x.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, out[base + j * inner]);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double& v = out[base + j * inner];
        v = std::exp(v - mx);
        s += v;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= s;
    }
  }
  Tensor saved = out;
  return x.tape().record(
      std::move(out), {x},
      [x, y = std::move(saved), outer, inner, n](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * n * inner + in;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[base + j * inner] * y[base + j * inner];
            for (std::size_t j = 0; j < n; ++j) {
              const std::size_t k = base + j * inner;
              gx[k] += y[k] * (g[k] - dot);
            }
          }
        }
      });
}

Var log_softmax(const Var& x) {
  require_finite("log_softmax", x.value().data());
  const auto [rows, n] = rows_and_last(x.shape());
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < n; ++j) row[j] -= lse;
  }
  Tensor saved = out;
  return x.tape().record(std::move(out), {x},
                         [x, y = std::move(saved), rows, n](Tape& t, const Tensor& g) {
                           Tensor& gx = t.grad_buffer(x.id());
                           for (std::size_t r = 0; r < rows; ++r) {
                             const std::size_t off = r * n;
                             double gs = 0.0;
                             for (std::size_t j = 0; j < n; ++j) gs += g[off + j];
                             for (std::size_t j = 0; j < n; ++j) {
                               gx[off + j] += g[off + j] - std::exp(y[off + j]) * gs;
                             }
                           }
                         });
}

Var logsumexp(const Var& x) {
  require_finite("logsumexp", x.value().data());
  const auto [rows, n] = rows_and_last(x.shape());
  Shape out_shape = x.shape();
  if (!out_shape.empty()) out_shape.pop_back();
  Tensor out(out_shape);
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    if (mx == kNegInf) {
      out[r] = kNegInf;
      continue;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
    out[r] = mx + std::log(s);
  }
  Tensor saved = out;
  return x.tape().record(std::move(out), {x},
                         [x, y = std::move(saved), rows, n](Tape& t, const Tensor& g) {
                           const Tensor& xv = t.value(x);
                           Tensor& gx = t.grad_buffer(x.id());
                           for (std::size_t r = 0; r < rows; ++r) {
                             if (y[r] == kNegInf) continue;
                             for (std::size_t j = 0; j < n; ++j) {
                               gx[r * n + j] += g[r] * std::exp(xv[r * n + j] - y[r]);
                             }
                           }
                         });
}

Var logsumexp(std::span<const Var> scalars) {
  if (scalars.empty()) throw DimensionError("logsumexp: no operands");
  Tape& tape = scalars.front().tape();
  double mx = kNegInf;
  for (const Var& v : scalars) mx = std::max(mx, v.value().item());
  double result = kNegInf;
  if (mx != kNegInf) {
    double s = 0.0;
    for (const Var& v : scalars) s += std::exp(v.value().item() - mx);
    result = mx + std::log(s);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return tape.record(Tensor::scalar(result), inputs, [inputs, result](Tape& t, const Tensor& g) {
    if (result == kNegInf) return;
    for (const Var& v : inputs) {
      with_grad(t, v, [&](Tensor& gv) { gv[0] += g[0] * std::exp(t.value(v)[0] - result); });
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const auto [rows, d] = rows_and_last(x.shape());
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + " vs input " +
                         shape_str(x.shape()));
  }
  if (!(eps > 0.0)) throw ContractError("layer_norm: eps must be positive");
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out(xv.shape());
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t off = r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xv[off + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xv[off + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[off + j] = (xv[off + j] - mu) * inv;
      out[off + j] = gv[j] * xhat[off + j] + bv[j];
    }
  }
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, d](
          Tape& t, const Tensor& g) {
        const Tensor& gv = t.value(gain);
        const bool need_x = t.requires_grad(x.id());
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t off = r * d;
          with_grad(t, gain, [&](Tensor& gg) {
            for (std::size_t j = 0; j < d; ++j) gg[j] += g[off + j] * xhat[off + j];
          });
          with_grad(t, bias, [&](Tensor& gb) {
            for (std::size_t j = 0; j < d; ++j) gb[j] += g[off + j];
          });
          if (!need_x) continue;
          double sum_dx = 0.0, sum_dx_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = g[off + j] * gv[j];
            sum_dx += dxhat[j];
            sum_dx_xhat += dxhat[j] * xhat[off + j];
          }
          Tensor& gx = t.grad_buffer(x.id());
          const double dd = static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            gx[off + j] +=
                inv_std[r] / dd * (dd * dxhat[j] - sum_dx - xhat[off + j] * sum_dx_xhat);
          }
        }
      });
}

Var conv2d(const Var& x, const Var& kernels, std::size_t stride, std::size_t padding) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", kernels, 4);
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  const std::size_t cin = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t cout = kernels.shape()[0], kh = kernels.shape()[2], kw = kernels.shape()[3];
  if (kernels.shape()[1] != cin) {
    throw DimensionError("conv2d: kernel channels " + shape_str(kernels.shape()) +
                         " vs input " + shape_str(x.shape()));
  }
  if (kh > h + 2 * padding || kw > w + 2 * padding) {
    throw DimensionError("conv2d: kernel " + shape_str(kernels.shape()) +
                         " larger than padded input " + shape_str(x.shape()));
  }
  const std::size_t ho = (h + 2 * padding - kh) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kw) / stride + 1;
  Tensor out({cout, ho, wo}, 0.0);
  const Tensor& xv = x.value();
  const Tensor& kv = kernels.value();
  const auto ip = static_cast<std::ptrdiff_t>(padding);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t u = 0; u < kh; ++u) {
            const auto r = static_cast<std::ptrdiff_t>(i * stride + u) - ip;
            if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* xrow = &xv[(c * h + static_cast<std::size_t>(r)) * w];
            const double* krow = &kv[((o * cin + c) * kh + u) * kw];
            for (std::size_t v = 0; v < kw; ++v) {
              const auto col = static_cast<std::ptrdiff_t>(j * stride + v) - ip;
              if (col < 0 || col >= static_cast<std::ptrdiff_t>(w)) continue;
              s += xrow[col] * krow[v];
            }
          }
        }
        out[(o * ho + i) * wo + j] = s;
      }
    }
  }
  return x.tape().record(
      std::move(out), {x, kernels},
      [x, kernels, cin, h, w, cout, kh, kw, ho, wo, stride, ip](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        const Tensor& kv = t.value(kernels);
        Tensor* gx = t.requires_grad(x.id()) ? &t.grad_buffer(x.id()) : nullptr;
        Tensor* gk = t.requires_grad(kernels.id()) ? &t.grad_buffer(kernels.id()) : nullptr;
        for (std::size_t o = 0; o < cout; ++o) {
          for (std::size_t i = 0; i < ho; ++i) {
            for (std::size_t j = 0; j < wo; ++j) {
              const double go = g[(o * ho + i) * wo + j];
              if (go == 0.0) continue;
              for (std::size_t c = 0; c < cin; ++c) {
                for (std::size_t u = 0; u < kh; ++u) {
                  const auto r = static_cast<std::ptrdiff_t>(i * stride + u) - ip;
                  if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
                  const std::size_t xoff = (c * h + static_cast<std::size_t>(r)) * w;
                  const std::size_t koff = ((o * cin + c) * kh + u) * kw;
                  for (std::size_t v = 0; v < kw; ++v) {
                    const auto col = static_cast<std::ptrdiff_t>(j * stride + v) - ip;
                    if (col < 0 || col >= static_cast<std::ptrdiff_t>(w)) continue;
                    const auto xi = xoff + static_cast<std::size_t>(col);
                    if (gx) (*gx)[xi] += go * kv[koff + v];
                    if (gk) (*gk)[koff + v] += go * xv[xi];
                  }
                }
              }
            }
          }
        }
      });
}

Var max_pool2d(const Var& x, std::size_t window, std::size_t stride, bool ceil_mode) {
  require_rank("max_pool2d", x, 3);
  if (stride == 0 || window == 0) throw ContractError("max_pool2d: window/stride must be positive");
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  if (window > h || window > w) {
    throw DimensionError("max_pool2d: window " + std::to_string(window) +
                         " larger than input " + shape_str(x.shape()));
  }
  auto out_len = [&](std::size_t n) {
    const std::size_t span = n - window;
    return (ceil_mode ? (span + stride - 1) / stride : span / stride) + 1;
  };
  const std::size_t ho = out_len(h), wo = out_len(w);
  Tensor out({c, ho, wo});
  std::vector<std::size_t> argmax(out.size());
  const Tensor& xv = x.value();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        bool first = true;
        for (std::size_t u = 0; u < window && i * stride + u < h; ++u) {
          for (std::size_t v = 0; v < window && j * stride + v < w; ++v) {
            const std::size_t k = (ch * h + i * stride + u) * w + j * stride + v;
            if (first || xv[k] > best_v) {
              best = k;
              best_v = xv[k];
              first = false;
            }
          }
        }
        const std::size_t o = (ch * ho + i) * wo + j;
        out[o] = best_v;
        argmax[o] = best;
      }
    }
  }
  return x.tape().record(std::move(out), {x},
                         [x, argmax = std::move(argmax)](Tape& t, const Tensor& g) {
                           Tensor& gx = t.grad_buffer(x.id());
                           for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += g[o];
                         });
}

Var conv1d(const Var& x, const Var& kernels, std::size_t stride, std::size_t pad_left,
           std::size_t pad_right) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", kernels, 3);
  if (stride == 0) throw ContractError("conv1d: stride must be positive");
  const std::size_t cin = x.shape()[0], len = x.shape()[1];
  const std::size_t cout = kernels.shape()[0], k = kernels.shape()[2];
  if (kernels.shape()[1] != cin) {
    throw DimensionError("conv1d: kernel channels " + shape_str(kernels.shape()) +
                         " vs input " + shape_str(x.shape()));
  }
  if (k > len + pad_left + pad_right) {
    throw DimensionError("conv1d: kernel " + shape_str(kernels.shape()) +
                         " larger than padded input " + shape_str(x.shape()));
  }
  const std::size_t lo = (len + pad_left + pad_right - k) / stride + 1;
  Tensor out({cout, lo}, 0.0);
  const Tensor& xv = x.value();
  const Tensor& kv = kernels.value();
  const auto pl = static_cast<std::ptrdiff_t>(pad_left);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < lo; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t u = 0; u < k; ++u) {
          const auto p = static_cast<std::ptrdiff_t>(i * stride + u) - pl;
          if (p < 0 || p >= static_cast<std::ptrdiff_t>(len)) continue;
          s += xv[c * len + static_cast<std::size_t>(p)] * kv[(o * cin + c) * k + u];
        }
      }
      out[o * lo + i] = s;
    }
  }
  return x.tape().record(
      std::move(out), {x, kernels},
      [x, kernels, cin, len, cout, k, lo, stride, pl](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(x);
        const Tensor& kv = t.value(kernels);
        Tensor* gx = t.requires_grad(x.id()) ? &t.grad_buffer(x.id()) : nullptr;
        Tensor* gk = t.requires_grad(kernels.id()) ? &t.grad_buffer(kernels.id()) : nullptr;
        for (std::size_t o = 0; o < cout; ++o) {
          for (std::size_t i = 0; i < lo; ++i) {
            const double go = g[o * lo + i];
            for (std::size_t c = 0; c < cin; ++c) {
              for (std::size_t u = 0; u < k; ++u) {
                const auto p = static_cast<std::ptrdiff_t>(i * stride + u) - pl;
                if (p < 0 || p >= static_cast<std::ptrdiff_t>(len)) continue;
                const std::size_t xi = c * len + static_cast<std::size_t>(p);
                const std::size_t ki = (o * cin + c) * k + u;
                if (gx) (*gx)[xi] += go * kv[ki];
                if (gk) (*gk)[ki] += go * xv[xi];
              }
            }
          }
        }
      });
}

Var embedding(const Var& table, std::span<const int> ids) {
  require_rank("embedding", table, 2);
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  if (ids.empty()) throw DimensionError("embedding: empty id sequence");
  Tensor out({ids.size(), d});
  const Tensor& tv = table.value();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= vocab) {
      throw DimensionError("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                           std::to_string(vocab) + " rows");
    }
    std::copy_n(&tv[static_cast<std::size_t>(ids[r]) * d], d, &out[r * d]);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return table.tape().record(std::move(out), {table},
                             [table, saved = std::move(saved), d](Tape& t, const Tensor& g) {
                               Tensor& gt = t.grad_buffer(table.id());
                               for (std::size_t r = 0; r < saved.size(); ++r) {
                                 const std::size_t base = static_cast<std::size_t>(saved[r]) * d;
                                 for (std::size_t j = 0; j < d; ++j) gt[base + j] += g[r * d + j];
                               }
                             });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
  for (const Var& p : parts) require_rank("concat", p, 2);
  const std::size_t other = parts.front().shape()[1 - axis];
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.shape()[1 - axis] != other) {
      throw DimensionError("concat: incompatible shapes " + shape_str(parts.front().shape()) +
                           " and " + shape_str(p.shape()));
    }
    total += p.shape()[axis];
  }
  const Shape out_shape = axis == 0 ? Shape{total, other} : Shape{other, total};
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const std::size_t pr = pv.dim(0), pc = pv.dim(1);
    for (std::size_t i = 0; i < pr; ++i) {
      for (std::size_t j = 0; j < pc; ++j) {
        if (axis == 0) {
          out.at(offset + i, j) = pv.at(i, j);
        } else {
          out.at(i, offset + j) = pv.at(i, j);
        }
      }
    }
    offset += p.shape()[axis];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(
      std::move(out), inputs, [inputs, axis](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (const Var& p : inputs) {
          const std::size_t pr = t.value(p).dim(0), pc = t.value(p).dim(1);
          with_grad(t, p, [&](Tensor& gp) {
            for (std::size_t i = 0; i < pr; ++i) {
              for (std::size_t j = 0; j < pc; ++j) {
                gp.at(i, j) += axis == 0 ? g.at(offset + i, j) : g.at(i, offset + j);
              }
            }
          });
          offset += axis == 0 ? pr : pc;
        }
      });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  require_rank("slice_cols", x, 2);
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (count == 0 || begin + count > n) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_str(x.shape()));
  }
  Tensor out({m, count});
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(&xv[i * n + begin], count, &out[i * count]);
  }
  return x.tape().record(std::move(out), {x}, [x, m, n, begin, count](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < count; ++j) gx[i * n + begin + j] += g[i * count + j];
    }
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t count) {
  require_rank("slice_rows", x, 2);
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (count == 0 || begin + count > m) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_str(x.shape()));
  }
  const auto first = x.value().data().begin() + static_cast<std::ptrdiff_t>(begin * n);
  Tensor out({count, n}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * n)));
  return x.tape().record(std::move(out), {x}, [x, n, begin](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * n + i] += g[i];
  });
}

Var dropout(const Var& x, double p, Rng& rng, bool train) {
  if (!train || p <= 0.0) return x;
  if (p >= 1.0) throw ContractError("dropout: p must be < 1");
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = rng.uniform01() < p ? 0.0 : keep_scale;
  Tensor out = x.value();
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] *= mask[i];
  return x.tape().record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (double& v : gx.data()) v += g[0];
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var element(const Var& x, std::size_t flat_index) {
  if (flat_index >= x.value().size()) {
    throw DimensionError("element: index " + std::to_string(flat_index) + " outside " +
                         shape_str(x.shape()));
  }
  return x.tape().record(Tensor::scalar(x.value()[flat_index]), {x},
                         [x, flat_index](Tape& t, const Tensor& g) {
                           t.grad_buffer(x.id())[flat_index] += g[0];
                         });
}

Var pick(const Var& x, std::span<const int> cols) {
  require_rank("pick", x, 2);
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (cols.size() != m) {
    throw DimensionError("pick: " + std::to_string(cols.size()) + " indices for " +
                         shape_str(x.shape()));
  }
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    if (cols[i] < 0 || static_cast<std::size_t>(cols[i]) >= n) {
      throw DimensionError("pick: column " + std::to_string(cols[i]) + " outside " +
                           shape_str(x.shape()));
    }
    out[i] = x.value().at(i, static_cast<std::size_t>(cols[i]));
  }
  std::vector<int> saved(cols.begin(), cols.end());
  return x.tape().record(std::move(out), {x}, [x, saved = std::move(saved), n](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < saved.size(); ++i) {
      gx[i * n + static_cast<std::size_t>(saved[i])] += g[i];
    }
  });
}

}  // namespace semask::ops
