// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mom/kernels.hpp"

MOM_NS_BEGIN
namespace ops {

namespace {

std::size_t norm_axis(int axis, std::size_t rank, const char* op) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) fail(ErrorKind::Dimension, std::string(op) + ": axis out of range");
  return static_cast<std::size_t>(a);
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Dimension, std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                                   shape_str(b.shape()) + " differ");
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

void gemm_into(Tensor& c, const Tensor& a, const Tensor& b, std::size_t m, std::size_t n, std::size_t k,
               bool ta, bool tb, bool acc) {
  kernels::gemm({a.data(), b.data(), c.data(), m, n, k, ta, tb, acc});
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (parent(self, p).requires_grad) parent(self, p).accumulate_grad(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate_grad(self.grad);
    if (parent(self, 1).requires_grad) {
      Tensor& g = parent(self, 1).grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      Tensor& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = static_cast<real>(out[i] * c);
  return make_op(std::move(out), {a}, [c](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += static_cast<real>(self.grad[i] * c);
  });
}

Var add_bias(const Var& x, const Var& bias) {
  const std::size_t d = bias.numel();
  if (x.rank() == 0 || x.shape().back() != d || bias.rank() != 1) {
    fail(ErrorKind::Dimension, "add_bias: " + shape_str(x.shape()) + " + " + shape_str(bias.shape()));
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bias.value()[i % d];
  return make_op(std::move(out), {x, bias}, [d](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate_grad(self.grad);
    if (parent(self, 1).requires_grad) {
      Tensor& g = parent(self, 1).grad_buffer();
      std::vector<double> acc(d, 0.0);
      for (std::size_t i = 0; i < self.grad.numel(); ++i) acc[i % d] += self.grad[i];
      for (std::size_t j = 0; j < d; ++j) g[j] += static_cast<real>(acc[j]);
    }
  });
}

Var scale_rows(const Var& x, const Var& s) {
  const std::size_t rows = s.numel();
  if (x.rank() == 0 || x.dim(0) != rows || (s.rank() == 2 && s.dim(1) != 1) || s.rank() > 2) {
    fail(ErrorKind::Dimension, "scale_rows: " + shape_str(x.shape()) + " by " + shape_str(s.shape()));
  }
  const std::size_t inner = x.numel() / rows;
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] *= s.value()[r];
  return make_op(std::move(out), {x, s}, [rows, inner](Node& self) {
    Node& px = parent(self, 0);
    Node& ps = parent(self, 1);
    if (px.requires_grad) {
      Tensor& g = px.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < inner; ++i) g[r * inner + i] += self.grad[r * inner + i] * ps.value[r];
    }
    if (ps.requires_grad) {
      Tensor& g = ps.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0;
        for (std::size_t i = 0; i < inner; ++i)
          acc += double(self.grad[r * inner + i]) * double(px.value[r * inner + i]);
        g[r] += static_cast<real>(acc);
      }
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    fail(ErrorKind::Dimension, "matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  gemm_into(out, a.value(), b.value(), m, n, k, false, false, false);
  return make_op(std::move(out), {a, b}, [m, n, k](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) gemm_into(pa.grad_buffer(), self.grad, pb.value, m, k, n, false, true, true);
    if (pb.requires_grad) gemm_into(pb.grad_buffer(), pa.value, self.grad, k, n, m, true, false, true);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    fail(ErrorKind::Dimension, "matmul_nt: " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor out({m, n});
  gemm_into(out, a.value(), b.value(), m, n, k, false, true, false);
  return make_op(std::move(out), {a, b}, [m, n, k](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    // C = A B^T: dA = dC B, dB = dC^T A
    if (pa.requires_grad) gemm_into(pa.grad_buffer(), self.grad, pb.value, m, k, n, false, false, true);
    if (pb.requires_grad) gemm_into(pb.grad_buffer(), self.grad, pa.value, n, k, m, true, false, true);
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  if (w.rank() != 2 || x.rank() == 0 || x.shape().back() != w.dim(0)) {
    fail(ErrorKind::Dimension, "linear: input " + shape_str(x.shape()) + " with weight " + shape_str(w.shape()));
  }
  if (b.defined() && (b.rank() != 1 || b.dim(0) != w.dim(1))) {
    fail(ErrorKind::Dimension, "linear: bias " + shape_str(b.shape()) + " for weight " + shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0), outd = w.dim(1), rows = x.numel() / in;
  Shape oshape = x.shape();
  oshape.back() = outd;
  Tensor out(oshape);
  gemm_into(out, x.value(), w.value(), rows, outd, in, false, false, false);
  if (b.defined()) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < outd; ++j) out[r * outd + j] += b.value()[j];
  }
  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_op(std::move(out), std::move(inputs), [rows, in, outd](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    if (px.requires_grad) gemm_into(px.grad_buffer(), self.grad, pw.value, rows, in, outd, false, true, true);
    if (pw.requires_grad) gemm_into(pw.grad_buffer(), px.value, self.grad, in, outd, rows, true, false, true);
    if (self.parents.size() > 2 && parent(self, 2).requires_grad) {
      Tensor& g = parent(self, 2).grad_buffer();
      std::vector<double> acc(outd, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < outd; ++j) acc[j] += self.grad[r * outd + j];
      for (std::size_t j = 0; j < outd; ++j) g[j] += static_cast<real>(acc[j]);
    }
  });
}

Var softmax(const Var& x, int axis) {
  const std::size_t ax = norm_axis(axis, x.rank(), "softmax");
  const AxisSplit s = split_at(x.shape(), ax);
  const Tensor& in = x.value();
  Tensor out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double v = in[base + j * s.inner];
        if (std::isnan(v)) fail(ErrorKind::Numeric, "softmax: NaN input");
        mx = std::max(mx, v);
      }
      double z = 0;
      for (std::size_t j = 0; j < s.n; ++j) z += std::exp(double(in[base + j * s.inner]) - mx);
      for (std::size_t j = 0; j < s.n; ++j)
        out[base + j * s.inner] = std::max(static_cast<real>(std::exp(double(in[base + j * s.inner]) - mx) / z),
                                           std::numeric_limits<real>::min());
    }
  }
  return make_op(std::move(out), {x}, [s](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.n * s.inner + i;
        double dotp = 0;
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t at = base + j * s.inner;
          dotp += double(self.grad[at]) * self.value[at];
        }
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t at = base + j * s.inner;
          g[at] += static_cast<real>(self.value[at] * (self.grad[at] - dotp));
        }
      }
    }
  });
}

Var log_softmax(const Var& x, int axis) {
  const std::size_t ax = norm_axis(axis, x.rank(), "log_softmax");
  const AxisSplit s = split_at(x.shape(), ax);
  const Tensor& in = x.value();
  Tensor out(x.shape());
  Tensor probs(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double v = in[base + j * s.inner];
        if (std::isnan(v)) fail(ErrorKind::Numeric, "log_softmax: NaN input");
        mx = std::max(mx, v);
      }
      double z = 0;
      for (std::size_t j = 0; j < s.n; ++j) z += std::exp(double(in[base + j * s.inner]) - mx);
      const double lse = mx + std::log(z);
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t at = base + j * s.inner;
        out[at] = static_cast<real>(double(in[at]) - lse);
        probs[at] = static_cast<real>(std::exp(double(in[at]) - lse));
      }
    }
  }
  return make_op(std::move(out), {x}, [s, probs = std::move(probs)](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.n * s.inner + i;
        double total = 0;
        for (std::size_t j = 0; j < s.n; ++j) total += self.grad[base + j * s.inner];
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t at = base + j * s.inner;
          g[at] += static_cast<real>(self.grad[at] - probs[at] * total);
        }
      }
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  if (x.rank() == 0) fail(ErrorKind::Dimension, "layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) {
    fail(ErrorKind::Dimension, "layer_norm: gain/bias length must be " + std::to_string(d));
  }
  const std::size_t rows = x.numel() / d;
  const Tensor& in = x.value();
  Tensor out(x.shape());
  Tensor xhat(x.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += in[r * d + j];
    mu /= double(d);
    double var = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = in[r * d + j] - mu;
      var += c * c;
    }
    var /= double(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (in[r * d + j] - mu) * inv_std[r];
      xhat[r * d + j] = static_cast<real>(xh);
      out[r * d + j] = static_cast<real>(xh * gain.value()[j] + bias.value()[j]);
    }
  }
  return make_op(std::move(out), {x, gain, bias},
                 [rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    Node& px = parent(self, 0);
    Node& pg = parent(self, 1);
    Node& pb = parent(self, 2);
    if (px.requires_grad) {
      Tensor& g = px.grad_buffer();
      std::vector<double> dxh(d);
      for (std::size_t r = 0; r < rows; ++r) {
        double m1 = 0, m2 = 0;
        for (std::size_t j = 0; j < d; ++j) {
          dxh[j] = double(self.grad[r * d + j]) * pg.value[j];
          m1 += dxh[j];
          m2 += dxh[j] * xhat[r * d + j];
        }
        m1 /= double(d);
        m2 /= double(d);
        for (std::size_t j = 0; j < d; ++j)
          g[r * d + j] += static_cast<real>(inv_std[r] * (dxh[j] - m1 - xhat[r * d + j] * m2));
      }
    }
    if (pg.requires_grad || pb.requires_grad) {
      std::vector<double> gg(d, 0.0), gb(d, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) {
          gg[j] += double(self.grad[r * d + j]) * xhat[r * d + j];
          gb[j] += self.grad[r * d + j];
        }
      if (pg.requires_grad) {
        Tensor& g = pg.grad_buffer();
        for (std::size_t j = 0; j < d; ++j) g[j] += static_cast<real>(gg[j]);
      }
      if (pb.requires_grad) {
        Tensor& g = pb.grad_buffer();
        for (std::size_t j = 0; j < d; ++j) g[j] += static_cast<real>(gb[j]);
      }
    }
  });
}

Var gelu(const Var& x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double c = 0.044715;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double v = x.value()[i];
    out[i] = static_cast<real>(0.5 * v * (1.0 + std::tanh(k * (v + c * v * v * v))));
  }
  return make_op(std::move(out), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    Tensor& g = px.grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double v = px.value[i];
      const double t = std::tanh(k * (v + c * v * v * v));
      const double dv = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * k * (1.0 + 3.0 * c * v * v);
      g[i] += static_cast<real>(self.grad[i] * dv);
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = static_cast<real>(1.0 / (1.0 + std::exp(-double(x.value()[i]))));
  return make_op(std::move(out), {x}, [](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double y = self.value[i];
      g[i] += static_cast<real>(self.grad[i] * y * (1.0 - y));
    }
  });
}

Var l2_normalize(const Var& x, double eps) {
  if (x.rank() == 0) fail(ErrorKind::Dimension, "l2_normalize: scalar input");
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  Tensor out(x.shape());
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) s += double(x.value()[r * d + j]) * x.value()[r * d + j];
    norms[r] = std::max(std::sqrt(s), eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = static_cast<real>(x.value()[r * d + j] / norms[r]);
  }
  return make_op(std::move(out), {x}, [rows, d, eps, norms = std::move(norms)](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = norms[r];
      if (n <= eps) {
        for (std::size_t j = 0; j < d; ++j) g[r * d + j] += static_cast<real>(self.grad[r * d + j] / n);
        continue;
      }
      double yd = 0;
      for (std::size_t j = 0; j < d; ++j) yd += double(self.value[r * d + j]) * self.grad[r * d + j];
      for (std::size_t j = 0; j < d; ++j)
        g[r * d + j] += static_cast<real>((self.grad[r * d + j] - self.value[r * d + j] * yd) / n);
    }
  });
}

Var sum(const Var& x) {
  double s = 0;
  for (auto v : x.value().values()) s += v;
  return make_op(Tensor({1}, static_cast<real>(s)), {x}, [](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[0];
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.numel());
  double s = 0;
  for (auto v : x.value().values()) s += v;
  return make_op(Tensor({1}, static_cast<real>(s / n)), {x}, [n](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    const real share = static_cast<real>(self.grad[0] / n);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += share;
  });
}

Var mean_axis(const Var& x, int axis) {
  const std::size_t ax = norm_axis(axis, x.rank(), "mean_axis");
  const AxisSplit s = split_at(x.shape(), ax);
  Shape oshape = x.shape();
  oshape.erase(oshape.begin() + static_cast<std::ptrdiff_t>(ax));
  if (oshape.empty()) oshape.push_back(1);
  Tensor out(oshape);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      double acc = 0;
      for (std::size_t j = 0; j < s.n; ++j) acc += x.value()[(o * s.n + j) * s.inner + i];
      out[o * s.inner + i] = static_cast<real>(acc / double(s.n));
    }
  return make_op(std::move(out), {x}, [s](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const real share = static_cast<real>(self.grad[o * s.inner + i] / double(s.n));
        for (std::size_t j = 0; j < s.n; ++j) g[(o * s.n + j) * s.inner + i] += share;
      }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_op(std::move(out), {x}, [](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
  });
}

Var slice(const Var& x, int axis, std::size_t start, std::size_t length) {
  const std::size_t ax = norm_axis(axis, x.rank(), "slice");
  const AxisSplit s = split_at(x.shape(), ax);
  if (length == 0 || start + length > s.n) {
    fail(ErrorKind::Dimension, "slice: [" + std::to_string(start) + ", +" + std::to_string(length) +
                                   ") outside axis of length " + std::to_string(s.n));
  }
  Shape oshape = x.shape();
  oshape[ax] = length;
  Tensor out(oshape);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < length; ++j)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[(o * length + j) * s.inner + i] = x.value()[(o * s.n + start + j) * s.inner + i];
  return make_op(std::move(out), {x}, [s, start, length](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t j = 0; j < length; ++j)
        for (std::size_t i = 0; i < s.inner; ++i)
          g[(o * s.n + start + j) * s.inner + i] += self.grad[(o * length + j) * s.inner + i];
  });
}

Var concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) fail(ErrorKind::Dimension, "concat: no inputs");
  const std::size_t ax = norm_axis(axis, xs[0].rank(), "concat");
  Shape oshape = xs[0].shape();
  std::size_t total = 0;
  std::vector<std::size_t> lens;
  for (const auto& x : xs) {
    Shape probe = x.shape();
    if (probe.size() != oshape.size()) fail(ErrorKind::Dimension, "concat: rank mismatch");
    probe[ax] = oshape[ax];
    if (probe != oshape) fail(ErrorKind::Dimension, "concat: incompatible shape " + shape_str(x.shape()));
    lens.push_back(x.dim(ax));
    total += x.dim(ax);
  }
  oshape[ax] = total;
  const AxisSplit s = split_at(oshape, ax);
  Tensor out(oshape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t j = 0; j < lens[k]; ++j)
        for (std::size_t i = 0; i < s.inner; ++i)
          out[(o * total + offset + j) * s.inner + i] = xs[k].value()[(o * lens[k] + j) * s.inner + i];
    offset += lens[k];
  }
  return make_op(std::move(out), xs, [s, total, lens](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < lens.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        Tensor& g = p.grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t j = 0; j < lens[k]; ++j)
            for (std::size_t i = 0; i < s.inner; ++i)
              g[(o * lens[k] + j) * s.inner + i] += self.grad[(o * total + offset + j) * s.inner + i];
      }
      offset += lens[k];
    }
  });
}

Var expand(const Var& x, int axis, std::size_t n) {
  const int r = static_cast<int>(x.rank()) + 1;
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r || n == 0) fail(ErrorKind::Dimension, "expand: bad axis or size");
  const auto ax = static_cast<std::size_t>(a);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= x.dim(i);
  for (std::size_t i = ax; i < x.rank(); ++i) inner *= x.dim(i);
  Shape oshape = x.shape();
  oshape.insert(oshape.begin() + a, n);
  Tensor out(oshape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < inner; ++i) out[(o * n + j) * inner + i] = x.value()[o * inner + i];
  return make_op(std::move(out), {x}, [outer, inner, n](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += self.grad[(o * n + j) * inner + i];
        g[o * inner + i] += static_cast<real>(acc);
      }
  });
}

Var diagonal(const Var& x) {
  if (x.rank() != 2 || x.dim(0) != x.dim(1)) fail(ErrorKind::Dimension, "diagonal: needs a square matrix");
  const std::size_t n = x.dim(0);
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = x.value()[i * n + i];
  return make_op(std::move(out), {x}, [n](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < n; ++i) g[i * n + i] += self.grad[i];
  });
}

Var gather_rows(const Var& table, const std::vector<std::size_t>& indices) {
  if (table.rank() == 0 || indices.empty()) fail(ErrorKind::Dimension, "gather_rows: empty input");
  const std::size_t rows = table.dim(0);
  const std::size_t inner = table.numel() / rows;
  Shape oshape = table.shape();
  oshape[0] = indices.size();
  Tensor out(oshape);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) fail(ErrorKind::Dimension, "gather_rows: index out of range");
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] = table.value()[indices[r] * inner + i];
  }
  return make_op(std::move(out), {table}, [indices, inner](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t r = 0; r < indices.size(); ++r)
      for (std::size_t i = 0; i < inner; ++i) g[indices[r] * inner + i] += self.grad[r * inner + i];
  });
}

Var attention(const Var& q, const Var& k, const Var& v, std::size_t n_heads) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3 || q.dim(0) != k.dim(0) || k.dim(0) != v.dim(0) ||
      q.dim(2) != k.dim(2) || k.dim(1) != v.dim(1)) {
    fail(ErrorKind::Dimension, "attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) +
                                   ", v " + shape_str(v.shape()));
  }
  const std::size_t B = q.dim(0), Lq = q.dim(1), Lk = k.dim(1), da = q.dim(2), dv = v.dim(2);
  if (n_heads == 0 || da % n_heads || dv % n_heads) {
    fail(ErrorKind::Dimension, "attention: widths " + std::to_string(da) + "/" + std::to_string(dv) +
                                   " not divisible by " + std::to_string(n_heads) + " heads");
  }
  const std::size_t ha = da / n_heads, hv = dv / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(double(ha));
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  Tensor out({B, Lq, dv});
  // probs[b][h][i][j]
  std::vector<double> probs(B * n_heads * Lq * Lk);
  std::vector<double> row(Lk);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < n_heads; ++h)
      for (std::size_t i = 0; i < Lq; ++i) {
        const real* qi = Q.data() + (b * Lq + i) * da + h * ha;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < Lk; ++j) {
          const real* kj = K.data() + (b * Lk + j) * da + h * ha;
          double s = 0;
          for (std::size_t t = 0; t < ha; ++t) s += double(qi[t]) * kj[t];
          row[j] = s * inv_sqrt;
          mx = std::max(mx, row[j]);
        }
        if (std::isnan(mx)) fail(ErrorKind::Numeric, "attention: NaN score");
        double z = 0;
        for (std::size_t j = 0; j < Lk; ++j) {
          row[j] = std::exp(row[j] - mx);
          z += row[j];
        }
        double* p = probs.data() + ((b * n_heads + h) * Lq + i) * Lk;
        for (std::size_t j = 0; j < Lk; ++j) p[j] = row[j] / z;
        real* oi = out.data() + (b * Lq + i) * dv + h * hv;
        for (std::size_t t = 0; t < hv; ++t) {
          double acc = 0;
          for (std::size_t j = 0; j < Lk; ++j) acc += p[j] * V[(b * Lk + j) * dv + h * hv + t];
          oi[t] = static_cast<real>(acc);
        }
      }
  return make_op(std::move(out), {q, k, v},
                 [B, Lq, Lk, da, dv, ha, hv, n_heads, inv_sqrt, probs = std::move(probs)](Node& self) {
    Node& pq = parent(self, 0);
    Node& pk = parent(self, 1);
    Node& pv = parent(self, 2);
    const Tensor& Q = pq.value;
    const Tensor& K = pk.value;
    const Tensor& V = pv.value;
    std::vector<double> dq(B * Lq * da, 0.0), dk(B * Lk * da, 0.0), dvv(B * Lk * dv, 0.0);
    std::vector<double> dp(Lk), ds(Lk);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t h = 0; h < n_heads; ++h)
        for (std::size_t i = 0; i < Lq; ++i) {
          const double* p = probs.data() + ((b * n_heads + h) * Lq + i) * Lk;
          const real* go = self.grad.data() + (b * Lq + i) * dv + h * hv;
          double pdp = 0;
          for (std::size_t j = 0; j < Lk; ++j) {
            double acc = 0;
            for (std::size_t t = 0; t < hv; ++t) {
              acc += double(go[t]) * V[(b * Lk + j) * dv + h * hv + t];
              dvv[(b * Lk + j) * dv + h * hv + t] += p[j] * go[t];
            }
            dp[j] = acc;
            pdp += p[j] * acc;
          }
          for (std::size_t j = 0; j < Lk; ++j) ds[j] = p[j] * (dp[j] - pdp) * inv_sqrt;
          const std::size_t qoff = (b * Lq + i) * da + h * ha;
          for (std::size_t j = 0; j < Lk; ++j) {
            const std::size_t koff = (b * Lk + j) * da + h * ha;
            for (std::size_t t = 0; t < ha; ++t) {
              dq[qoff + t] += ds[j] * K[koff + t];
              dk[koff + t] += ds[j] * Q[qoff + t];
            }
          }
        }
    auto push = [](Node& p, const std::vector<double>& d) {
      if (!p.requires_grad) return;
      Tensor& g = p.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += static_cast<real>(d[i]);
    };
    push(pq, dq);
    push(pk, dk);
    push(pv, dvv);
  });
}

Var mse(const Var& a, const Var& b) {
  require_same(a, b, "mse");
  const double n = static_cast<double>(a.numel());
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = double(a.value()[i]) - b.value()[i];
    s += d * d;
  }
  return make_op(Tensor({1}, static_cast<real>(s / n)), {a, b}, [n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const double c = 2.0 * self.grad[0] / n;
    Tensor* ga = pa.requires_grad ? &pa.grad_buffer() : nullptr;
    Tensor* gb = pb.requires_grad ? &pb.grad_buffer() : nullptr;
    for (std::size_t i = 0; i < pa.value.numel(); ++i) {
      const double d = (double(pa.value[i]) - pb.value[i]) * c;
      if (ga) (*ga)[i] += static_cast<real>(d);
      if (gb) (*gb)[i] -= static_cast<real>(d);
    }
  });
}

Var sigmoid_focal_bce(const Var& logits, const Tensor& labels, double gamma, double focal_mix) {
  if (logits.shape() != labels.shape()) {
    fail(ErrorKind::Dimension, "cls loss: logits " + shape_str(logits.shape()) + " vs labels " +
                                   shape_str(labels.shape()));
  }
  for (auto y : labels.values()) {
    if (y != real(0) && y != real(1)) fail(ErrorKind::Label, "cls loss: labels must be 0 or 1");
  }
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  const std::size_t n = logits.numel();
  std::vector<double> dldx(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = logits.value()[i];
    const double y = labels[i];
    const double p_raw = 1.0 / (1.0 + std::exp(-x));
    const bool clamped = p_raw < lo || p_raw > hi;
    const double p = std::clamp(p_raw, lo, hi);
    const double lp = std::log(p), lq = std::log1p(-p);
    const double bce = -(y * lp + (1 - y) * lq);
    const double fl = -y * std::pow(1 - p, gamma) * lp - (1 - y) * std::pow(p, gamma) * lq;
    total += (1 - focal_mix) * bce + focal_mix * fl;
    if (clamped) {
      dldx[i] = 0.0;
      continue;
    }
    const double dbce = -y / p + (1 - y) / (1 - p);
    double dfl = 0.0;
    if (y > 0.5) {
      const double gpow = gamma == 0.0 ? 0.0 : gamma * std::pow(1 - p, gamma - 1) * lp;
      dfl = gpow - std::pow(1 - p, gamma) / p;
    } else {
      const double gpow = gamma == 0.0 ? 0.0 : -gamma * std::pow(p, gamma - 1) * lq;
      dfl = gpow + std::pow(p, gamma) / (1 - p);
    }
    dldx[i] = ((1 - focal_mix) * dbce + focal_mix * dfl) * p * (1 - p);
  }
  const double inv_n = 1.0 / double(n);
  return make_op(Tensor({1}, static_cast<real>(total * inv_n)), {logits},
                 [dldx = std::move(dldx), inv_n](Node& self) {
    Tensor& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += static_cast<real>(self.grad[0] * dldx[i] * inv_n);
  });
}

}  // namespace ops
MOM_NS_END
