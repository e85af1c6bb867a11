// Copyright 2026 The lpsnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lpsnet/ops.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include <Eigen/Core>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

thread_local OpObserver* g_observer = nullptr;

void notify(const OpEvent& e) {
  if (g_observer) g_observer->on_op(e);
}

using MatRM = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using ConstMapRM = Eigen::Map<const MatRM>;

// Reused im2col scratch; grows to the largest request seen on the thread.
Real* scratch(std::size_t n) {
  thread_local std::vector<Real> buf;
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

struct ConvGeom {
  int n, cin, h, w;
  int cout, k, stride, pad, groups;
  int ho, wo;
  int cin_g, cout_g;
  std::size_t kdim() const { return std::size_t(cin_g) * k * k; }
  std::size_t pixels() const { return std::size_t(ho) * wo; }
  bool pointwise() const { return k == 1 && stride == 1; }
  bool depthwise() const { return cin_g == 1 && cout_g == 1; }
};

ConvGeom conv_geometry(const Dims& x, const Dims& wt, int stride, int groups) {
  if (wt.h != wt.w || wt.h % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square and odd, got " + wt.to_string());
  }
  if (groups < 1 || x.c % groups != 0 || wt.n % groups != 0 || wt.c != x.c / groups) {
    throw ShapeError("conv2d: input " + x.to_string() + " incompatible with weight " +
                     wt.to_string() + " for groups=" + std::to_string(groups));
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  ConvGeom g{};
  g.n = x.n;
  g.cin = x.c;
  g.h = x.h;
  g.w = x.w;
  g.cout = wt.n;
  g.k = wt.h;
  g.stride = stride;
  g.pad = wt.h / 2;
  g.groups = groups;
  g.ho = (x.h + 2 * g.pad - g.k) / stride + 1;
  g.wo = (x.w + 2 * g.pad - g.k) / stride + 1;
  g.cin_g = x.c / groups;
  g.cout_g = wt.n / groups;
  if (g.ho < 1 || g.wo < 1) throw ShapeError("conv2d: empty output for input " + x.to_string());
  return g;
}

// Valid output-column range [lo, hi) for a stride-1 kernel tap.
inline void valid_range(int wo, int w, int pad, int kx, int& lo, int& hi) {
  lo = std::max(0, pad - kx);
  hi = std::min(wo, w + pad - kx);
  if (hi < lo) hi = lo;
}

void im2col(const Real* x, const ConvGeom& g, Real* col) {
  const std::size_t P = g.pixels();
  for (int c = 0; c < g.cin_g; ++c) {
    const Real* xc = x + std::size_t(c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        Real* row = col + (std::size_t(c * g.k + ky) * g.k + kx) * P;
        for (int oy = 0; oy < g.ho; ++oy) {
          Real* r = row + std::size_t(oy) * g.wo;
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) {
            std::fill(r, r + g.wo, Real(0));
            continue;
          }
          const Real* xr = xc + std::size_t(iy) * g.w;
          if (g.stride == 1) {
            int lo, hi;
            valid_range(g.wo, g.w, g.pad, kx, lo, hi);
            std::fill(r, r + lo, Real(0));
            std::memcpy(r + lo, xr + lo - g.pad + kx, sizeof(Real) * (hi - lo));
            std::fill(r + hi, r + g.wo, Real(0));
          } else {
            for (int ox = 0; ox < g.wo; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              r[ox] = (ix >= 0 && ix < g.w) ? xr[ix] : Real(0);
            }
          }
        }
      }
    }
  }
}

void col2im(const Real* col, const ConvGeom& g, Real* dx) {
  const std::size_t P = g.pixels();
  for (int c = 0; c < g.cin_g; ++c) {
    Real* xc = dx + std::size_t(c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const Real* row = col + (std::size_t(c * g.k + ky) * g.k + kx) * P;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const Real* r = row + std::size_t(oy) * g.wo;
          Real* xr = xc + std::size_t(iy) * g.w;
          if (g.stride == 1) {
            int lo, hi;
            valid_range(g.wo, g.w, g.pad, kx, lo, hi);
            Real* dst = xr + lo - g.pad + kx;
            for (int ox = lo; ox < hi; ++ox) dst[ox - lo] += r[ox];
          } else {
            for (int ox = 0; ox < g.wo; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix >= 0 && ix < g.w) xr[ix] += r[ox];
            }
          }
        }
      }
    }
  }
}

// Depthwise (one input and one output channel per group) direct kernels.
void depthwise_forward(const Real* x, const Real* wt, const ConvGeom& g, Real* y) {
  std::fill(y, y + g.pixels(), Real(0));
  for (int ky = 0; ky < g.k; ++ky) {
    for (int kx = 0; kx < g.k; ++kx) {
      const Real wv = wt[ky * g.k + kx];
      for (int oy = 0; oy < g.ho; ++oy) {
        const int iy = oy * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.h) continue;
        const Real* xr = x + std::size_t(iy) * g.w;
        Real* yr = y + std::size_t(oy) * g.wo;
        if (g.stride == 1) {
          int lo, hi;
          valid_range(g.wo, g.w, g.pad, kx, lo, hi);
          const Real* src = xr - g.pad + kx;
          for (int ox = lo; ox < hi; ++ox) yr[ox] += wv * src[ox];
        } else {
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) yr[ox] += wv * xr[ix];
          }
        }
      }
    }
  }
}

void depthwise_backward(const Real* x, const Real* wt, const Real* dy, const ConvGeom& g,
                        Real* dx, Real* dw) {
  for (int ky = 0; ky < g.k; ++ky) {
    for (int kx = 0; kx < g.k; ++kx) {
      const Real wv = wt[ky * g.k + kx];
      double acc = 0.0;
      for (int oy = 0; oy < g.ho; ++oy) {
        const int iy = oy * g.stride - g.pad + ky;
        if (iy < 0 || iy >= g.h) continue;
        const Real* xr = x + std::size_t(iy) * g.w;
        const Real* dyr = dy + std::size_t(oy) * g.wo;
        Real* dxr = dx ? dx + std::size_t(iy) * g.w : nullptr;
        for (int ox = 0; ox < g.wo; ++ox) {
          const int ix = ox * g.stride - g.pad + kx;
          if (ix < 0 || ix >= g.w) continue;
          acc += double(dyr[ox]) * xr[ix];
          if (dxr) dxr[ix] += wv * dyr[ox];
        }
      }
      if (dw) dw[ky * g.k + kx] += Real(acc);
    }
  }
}

void conv_forward(const Tensor& x, const Tensor& wt, const ConvGeom& g, Tensor& y) {
  const std::size_t P = g.pixels();
  const std::size_t K = g.kdim();
  for (int n = 0; n < g.n; ++n) {
    for (int gi = 0; gi < g.groups; ++gi) {
      const Real* xin = x.plane(n, gi * g.cin_g);
      const Real* wg = wt.data() + std::size_t(gi) * g.cout_g * K;
      Real* yout = y.plane(n, gi * g.cout_g);
      if (g.depthwise()) {
        depthwise_forward(xin, wg, g, yout);
        continue;
      }
      const Real* col = xin;
      if (!g.pointwise()) {
        Real* buf = scratch(K * P);
        im2col(xin, g, buf);
        col = buf;
      }
      MapRM(yout, g.cout_g, P).noalias() =
          ConstMapRM(wg, g.cout_g, K) * ConstMapRM(col, K, P);
    }
  }
}

void conv_backward(const Tensor& x, const Tensor& wt, const Tensor& dy, const ConvGeom& g,
                   Tensor* dx, Tensor* dw) {
  const std::size_t P = g.pixels();
  const std::size_t K = g.kdim();
  for (int n = 0; n < g.n; ++n) {
    for (int gi = 0; gi < g.groups; ++gi) {
      const Real* xin = x.plane(n, gi * g.cin_g);
      const Real* wg = wt.data() + std::size_t(gi) * g.cout_g * K;
      const Real* dyg = dy.plane(n, gi * g.cout_g);
      Real* dxg = dx ? dx->plane(n, gi * g.cin_g) : nullptr;
      Real* dwg = dw ? dw->data() + std::size_t(gi) * g.cout_g * K : nullptr;
      if (g.depthwise()) {
        depthwise_backward(xin, wg, dyg, g, dxg, dwg);
        continue;
      }
      ConstMapRM dY(dyg, g.cout_g, P);
      if (dwg) {
        const Real* col = xin;
        if (!g.pointwise()) {
          Real* buf = scratch(K * P);
          im2col(xin, g, buf);
          col = buf;
        }
        MapRM(dwg, g.cout_g, K).noalias() += dY * ConstMapRM(col, K, P).transpose();
      }
      if (dxg) {
        if (g.pointwise()) {
          MapRM(dxg, K, P).noalias() += ConstMapRM(wg, g.cout_g, K).transpose() * dY;
        } else {
          Real* buf = scratch(K * P);
          MapRM(buf, K, P).noalias() = ConstMapRM(wg, g.cout_g, K).transpose() * dY;
          col2im(buf, g, dxg);
        }
      }
    }
  }
}

// Source index pair and lerp weight per output coordinate.
struct AxisMap {
  std::vector<int> i0;
  std::vector<int> i1;
  std::vector<Real> t;
};

AxisMap axis_map(int in, int out) {
  AxisMap m;
  m.i0.resize(out);
  m.i1.resize(out);
  m.t.resize(out);
  const double scale = double(in) / double(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int a = std::min(static_cast<int>(src), in - 1);
    m.i0[o] = a;
    m.i1[o] = a < in - 1 ? a + 1 : a;
    m.t[o] = Real(src - a);
  }
  return m;
}

void resize_forward(const Tensor& x, Tensor& y) {
  const int H = x.h(), W = x.w(), Ho = y.h(), Wo = y.w();
  const AxisMap my = axis_map(H, Ho);
  const AxisMap mx = axis_map(W, Wo);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const Real* src = x.plane(n, c);
      Real* dst = y.plane(n, c);
      for (int oy = 0; oy < Ho; ++oy) {
        const Real* r0 = src + std::size_t(my.i0[oy]) * W;
        const Real* r1 = src + std::size_t(my.i1[oy]) * W;
        const Real ty = my.t[oy];
        Real* out = dst + std::size_t(oy) * Wo;
        for (int ox = 0; ox < Wo; ++ox) {
          const int a = mx.i0[ox], b = mx.i1[ox];
          const Real tx = mx.t[ox];
          const Real top = r0[a] + tx * (r0[b] - r0[a]);
          const Real bot = r1[a] + tx * (r1[b] - r1[a]);
          out[ox] = top + ty * (bot - top);
        }
      }
    }
  }
}

void resize_backward(const Tensor& dy, Tensor& dx) {
  const int H = dx.h(), W = dx.w(), Ho = dy.h(), Wo = dy.w();
  const AxisMap my = axis_map(H, Ho);
  const AxisMap mx = axis_map(W, Wo);
  for (int n = 0; n < dx.n(); ++n) {
    for (int c = 0; c < dx.c(); ++c) {
      const Real* g = dy.plane(n, c);
      Real* d = dx.plane(n, c);
      for (int oy = 0; oy < Ho; ++oy) {
        Real* r0 = d + std::size_t(my.i0[oy]) * W;
        Real* r1 = d + std::size_t(my.i1[oy]) * W;
        const Real ty = my.t[oy];
        const Real* gr = g + std::size_t(oy) * Wo;
        for (int ox = 0; ox < Wo; ++ox) {
          const int a = mx.i0[ox], b = mx.i1[ox];
          const Real tx = mx.t[ox];
          const Real v = gr[ox];
          const Real top = v * (Real(1) - ty);
          const Real bot = v * ty;
          r0[a] += top * (Real(1) - tx);
          r0[b] += top * tx;
          r1[a] += bot * (Real(1) - tx);
          r1[b] += bot * tx;
        }
      }
    }
  }
}

void require_same(const Dims& a, const Dims& b, const char* op) {
  if (!(a == b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.to_string() + " vs " +
                     b.to_string());
  }
}

}  // namespace

ScopedOpObserver::ScopedOpObserver(OpObserver* observer) : previous_(g_observer) {
  g_observer = observer;
}
ScopedOpObserver::~ScopedOpObserver() { g_observer = previous_; }

namespace ops {

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int groups) {
  const ConvGeom g = conv_geometry(x.dims(), weight.dims(), stride, groups);
  Tensor y(Dims{g.n, g.cout, g.ho, g.wo});
  conv_forward(x.value(), weight.value(), g, y);
  const bool has_bias = bias.defined();
  if (has_bias) {
    if (bias.value().size() != std::size_t(g.cout)) throw ShapeError("conv2d: bias size");
    const Real* b = bias.value().data();
    for (int n = 0; n < g.n; ++n) {
      for (int c = 0; c < g.cout; ++c) {
        Real* p = y.plane(n, c);
        for (std::size_t i = 0; i < g.pixels(); ++i) p[i] += b[c];
      }
    }
  }
  notify({"conv", x.dims(), y.dims(), weight.dims(), stride, groups});

  std::vector<Var> inputs = {x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result(std::move(y), std::move(inputs), [g, has_bias](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    Tensor* dx = xn.requires_grad ? &xn.ensure_grad() : nullptr;
    Tensor* dw = wn.requires_grad ? &wn.ensure_grad() : nullptr;
    if (dx || dw) conv_backward(xn.value, wn.value, self.grad, g, dx, dw);
    if (has_bias && self.inputs[2]->requires_grad) {
      Real* db = self.inputs[2]->ensure_grad().data();
      for (int n = 0; n < g.n; ++n) {
        for (int c = 0; c < g.cout; ++c) {
          const Real* p = self.grad.plane(n, c);
          double s = 0;
          for (std::size_t i = 0; i < g.pixels(); ++i) s += p[i];
          db[c] += Real(s);
        }
      }
    }
  });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, NormState state, bool training) {
  const Dims d = x.dims();
  const int C = d.c;
  if (gamma.value().size() != std::size_t(C) || beta.value().size() != std::size_t(C) ||
      state.running_mean->size() != std::size_t(C) || state.running_var->size() != std::size_t(C)) {
    throw ShapeError("batch_norm: parameter size does not match " + d.to_string());
  }
  const std::size_t P = d.plane();
  const std::size_t M = std::size_t(d.n) * P;

  // Per-channel mean and inverse std actually used for normalization.
  auto mean = std::make_shared<std::vector<Real>>(C);
  auto invstd = std::make_shared<std::vector<Real>>(C);
  const Tensor& xv = x.value();
  for (int c = 0; c < C; ++c) {
    if (training) {
      double s = 0, ss = 0;
      for (int n = 0; n < d.n; ++n) {
        const Real* p = xv.plane(n, c);
        for (std::size_t i = 0; i < P; ++i) s += p[i];
      }
      const double mu = s / double(M);
      for (int n = 0; n < d.n; ++n) {
        const Real* p = xv.plane(n, c);
        for (std::size_t i = 0; i < P; ++i) {
          const double t = p[i] - mu;
          ss += t * t;
        }
      }
      const double var = ss / double(M);
      (*mean)[c] = Real(mu);
      (*invstd)[c] = Real(1.0 / std::sqrt(var + state.eps));
      const double unbiased = M > 1 ? ss / double(M - 1) : var;
      Real& rm = (*state.running_mean)[c];
      Real& rv = (*state.running_var)[c];
      rm = Real((1 - state.momentum) * rm + state.momentum * mu);
      rv = Real((1 - state.momentum) * rv + state.momentum * unbiased);
    } else {
      (*mean)[c] = (*state.running_mean)[c];
      (*invstd)[c] = Real(1.0 / std::sqrt(double((*state.running_var)[c]) + state.eps));
    }
  }

  Tensor y(d);
  const Real* gm = gamma.value().data();
  const Real* bt = beta.value().data();
  for (int n = 0; n < d.n; ++n) {
    for (int c = 0; c < C; ++c) {
      const Real scale = gm[c] * (*invstd)[c];
      const Real shift = bt[c] - (*mean)[c] * scale;
      const Real* p = xv.plane(n, c);
      Real* q = y.plane(n, c);
      for (std::size_t i = 0; i < P; ++i) q[i] = p[i] * scale + shift;
    }
  }
  notify({"norm", d, d});

  return make_result(std::move(y), {x, gamma, beta}, [mean, invstd, training, d, P, M](Node& self) {
    Node& xn = *self.inputs[0];
    Node& gn = *self.inputs[1];
    Node& bn = *self.inputs[2];
    const Real* gm = gn.value.data();
    Real* dgamma = gn.requires_grad ? gn.ensure_grad().data() : nullptr;
    Real* dbeta = bn.requires_grad ? bn.ensure_grad().data() : nullptr;
    Tensor* dx = xn.requires_grad ? &xn.ensure_grad() : nullptr;
    for (int c = 0; c < d.c; ++c) {
      const Real mu = (*mean)[c];
      const Real is = (*invstd)[c];
      double sum_dy = 0, sum_dy_xhat = 0;
      for (int n = 0; n < d.n; ++n) {
        const Real* g = self.grad.plane(n, c);
        const Real* p = xn.value.plane(n, c);
        for (std::size_t i = 0; i < P; ++i) {
          sum_dy += g[i];
          sum_dy_xhat += double(g[i]) * (p[i] - mu) * is;
        }
      }
      if (dgamma) dgamma[c] += Real(sum_dy_xhat);
      if (dbeta) dbeta[c] += Real(sum_dy);
      if (!dx) continue;
      const Real k = gm[c] * is;
      if (training) {
        const Real mdy = Real(sum_dy / double(M));
        const Real mdyx = Real(sum_dy_xhat / double(M));
        for (int n = 0; n < d.n; ++n) {
          const Real* g = self.grad.plane(n, c);
          const Real* p = xn.value.plane(n, c);
          Real* q = dx->plane(n, c);
          for (std::size_t i = 0; i < P; ++i) {
            const Real xhat = (p[i] - mu) * is;
            q[i] += k * (g[i] - mdy - xhat * mdyx);
          }
        }
      } else {
        for (int n = 0; n < d.n; ++n) {
          const Real* g = self.grad.plane(n, c);
          Real* q = dx->plane(n, c);
          for (std::size_t i = 0; i < P; ++i) q[i] += k * g[i];
        }
      }
    }
  });
}

Var relu(const Var& x) {
  Tensor y(x.dims());
  const Real* p = x.value().data();
  Real* q = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) q[i] = p[i] > 0 ? p[i] : Real(0);
  notify({"relu", x.dims(), x.dims()});
  return make_result(std::move(y), {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Real* dx = xn.ensure_grad().data();
    const Real* p = xn.value.data();
    const Real* g = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (p[i] > 0) dx[i] += g[i];
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor y(x.dims());
  const Real* p = x.value().data();
  Real* q = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) q[i] = Real(1) / (Real(1) + std::exp(-p[i]));
  notify({"sigmoid", x.dims(), x.dims()});
  return make_result(std::move(y), {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Real* dx = xn.ensure_grad().data();
    const Real* s = self.value.data();
    const Real* g = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += g[i] * s[i] * (Real(1) - s[i]);
  });
}

Var one_minus(const Var& x) {
  Tensor y(x.dims());
  const Real* p = x.value().data();
  Real* q = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) q[i] = Real(1) - p[i];
  notify({"one_minus", x.dims(), x.dims()});
  return make_result(std::move(y), {x}, [](Node& self) {
    Real* dx = self.inputs[0]->ensure_grad().data();
    const Real* g = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] -= g[i];
  });
}

Var add(const Var& a, const Var& b) {
  require_same(a.dims(), b.dims(), "add");
  Tensor y(a.dims());
  const Real* p = a.value().data();
  const Real* q = b.value().data();
  Real* r = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = p[i] + q[i];
  notify({"add", a.dims(), a.dims()});
  return make_result(std::move(y), {a, b}, [](Node& self) {
    const Real* g = self.grad.data();
    for (int k = 0; k < 2; ++k) {
      Node& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      Real* d = in.ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += g[i];
    }
  });
}

Var mul_broadcast(const Var& x, const Var& gate) {
  const Dims d = x.dims();
  const Dims gd = gate.dims();
  if (gd.c != 1 || gd.n != d.n || gd.h != d.h || gd.w != d.w) {
    throw ShapeError("mul_broadcast: gate " + gd.to_string() + " vs input " + d.to_string());
  }
  Tensor y(d);
  const std::size_t P = d.plane();
  for (int n = 0; n < d.n; ++n) {
    const Real* a = gate.value().plane(n, 0);
    for (int c = 0; c < d.c; ++c) {
      const Real* p = x.value().plane(n, c);
      Real* q = y.plane(n, c);
      for (std::size_t i = 0; i < P; ++i) q[i] = p[i] * a[i];
    }
  }
  notify({"mul", d, d});
  return make_result(std::move(y), {x, gate}, [d, P](Node& self) {
    Node& xn = *self.inputs[0];
    Node& an = *self.inputs[1];
    for (int n = 0; n < d.n; ++n) {
      const Real* a = an.value.plane(n, 0);
      Real* da = an.requires_grad ? an.ensure_grad().plane(n, 0) : nullptr;
      for (int c = 0; c < d.c; ++c) {
        const Real* g = self.grad.plane(n, c);
        const Real* p = xn.value.plane(n, c);
        if (xn.requires_grad) {
          Real* dx = xn.ensure_grad().plane(n, c);
          for (std::size_t i = 0; i < P; ++i) dx[i] += g[i] * a[i];
        }
        if (da) {
          for (std::size_t i = 0; i < P; ++i) da[i] += g[i] * p[i];
        }
      }
    }
  });
}

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: empty target size");
  if (x.h() == out_h && x.w() == out_w) return x;
  Tensor y(Dims{x.n(), x.c(), out_h, out_w});
  resize_forward(x, y);
  return y;
}

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: empty target size");
  if (x.dims().h == out_h && x.dims().w == out_w) return x;
  Tensor y(Dims{x.dims().n, x.dims().c, out_h, out_w});
  resize_forward(x.value(), y);
  notify({"resize", x.dims(), y.dims()});
  return make_result(std::move(y), {x}, [](Node& self) {
    resize_backward(self.grad, self.inputs[0]->ensure_grad());
  });
}

Var concat_channels(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  Dims d = xs[0].dims();
  int total = 0;
  for (const auto& v : xs) {
    const Dims& e = v.dims();
    if (e.n != d.n || e.h != d.h || e.w != d.w) {
      throw ShapeError("concat_channels: " + e.to_string() + " vs " + d.to_string());
    }
    total += e.c;
  }
  Dims od{d.n, total, d.h, d.w};
  Tensor y(od);
  const std::size_t P = d.plane();
  std::vector<int> offsets;
  int off = 0;
  for (const auto& v : xs) {
    offsets.push_back(off);
    for (int n = 0; n < d.n; ++n) {
      std::memcpy(y.plane(n, off), v.value().plane(n, 0), sizeof(Real) * P * v.dims().c);
    }
    off += v.dims().c;
  }
  notify({"concat", d, od});
  return make_result(std::move(y), std::vector<Var>(xs.begin(), xs.end()),
                     [offsets, P](Node& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         Node& in = *self.inputs[k];
                         if (!in.requires_grad) continue;
                         Tensor& g = in.ensure_grad();
                         for (int n = 0; n < g.n(); ++n) {
                           const Real* src = self.grad.plane(n, offsets[k]);
                           Real* dst = g.plane(n, 0);
                           for (std::size_t i = 0; i < P * g.c(); ++i) dst[i] += src[i];
                         }
                       }
                     });
}

Var slice_channels(const Var& x, int start, int count) {
  const Dims d = x.dims();
  if (start < 0 || count < 1 || start + count > d.c) {
    throw ShapeError("slice_channels: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") out of " + d.to_string());
  }
  Dims od{d.n, count, d.h, d.w};
  Tensor y(od);
  const std::size_t P = d.plane();
  for (int n = 0; n < d.n; ++n) {
    std::memcpy(y.plane(n, 0), x.value().plane(n, start), sizeof(Real) * P * count);
  }
  notify({"slice", d, od});
  return make_result(std::move(y), {x}, [start, count, P](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (int n = 0; n < g.n(); ++n) {
      const Real* src = self.grad.plane(n, 0);
      Real* dst = g.plane(n, start);
      for (std::size_t i = 0; i < P * count; ++i) dst[i] += src[i];
    }
  });
}

Var channel_shuffle(const Var& x, int groups) {
  const Dims d = x.dims();
  if (groups < 1 || d.c % groups != 0) {
    throw ShapeError("channel_shuffle: " + std::to_string(d.c) + " channels, groups=" +
                     std::to_string(groups));
  }
  const int per = d.c / groups;
  const std::size_t P = d.plane();
  // Output channel (ci * groups + gi) takes input channel (gi * per + ci).
  auto source = [groups, per](int out) { return (out % groups) * per + out / groups; };
  Tensor y(d);
  for (int n = 0; n < d.n; ++n) {
    for (int c = 0; c < d.c; ++c) {
      std::memcpy(y.plane(n, c), x.value().plane(n, source(c)), sizeof(Real) * P);
    }
  }
  notify({"shuffle", d, d});
  return make_result(std::move(y), {x}, [source, P](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    for (int n = 0; n < g.n(); ++n) {
      for (int c = 0; c < g.c(); ++c) {
        const Real* src = self.grad.plane(n, c);
        Real* dst = g.plane(n, source(c));
        for (std::size_t i = 0; i < P; ++i) dst[i] += src[i];
      }
    }
  });
}

Var cross_entropy(const Var& logits, const LabelMap& labels) {
  const Dims d = logits.dims();
  if (labels.n != d.n || labels.h != d.h || labels.w != d.w) {
    throw ShapeError("cross_entropy: labels (" + std::to_string(labels.n) + "," +
                     std::to_string(labels.h) + "," + std::to_string(labels.w) +
                     ") vs logits " + d.to_string());
  }
  const std::size_t P = d.plane();
  const Tensor& z = logits.value();
  double total = 0;
  std::size_t valid = 0;
  for (int n = 0; n < d.n; ++n) {
    for (std::size_t i = 0; i < P; ++i) {
      const std::uint8_t lab = labels.data[std::size_t(n) * P + i];
      if (lab == kIgnoreLabel) continue;
      if (lab >= d.c) {
        throw InvalidArgument("cross_entropy: label " + std::to_string(lab) + " >= " +
                              std::to_string(d.c) + " classes");
      }
      double mx = -1e300;
      for (int c = 0; c < d.c; ++c) mx = std::max(mx, double(z.plane(n, c)[i]));
      double se = 0;
      for (int c = 0; c < d.c; ++c) se += std::exp(double(z.plane(n, c)[i]) - mx);
      total += std::log(se) + mx - double(z.plane(n, lab)[i]);
      ++valid;
    }
  }
  Tensor y(Dims{1, 1, 1, 1}, Real(valid ? total / double(valid) : 0.0));
  auto labs = std::make_shared<LabelMap>(labels);
  return make_result(std::move(y), {logits}, [labs, valid, d, P](Node& self) {
    if (valid == 0) return;
    Node& zn = *self.inputs[0];
    Tensor& dz = zn.ensure_grad();
    const double scale = double(self.grad[0]) / double(valid);
    std::vector<double> e(d.c);
    for (int n = 0; n < d.n; ++n) {
      for (std::size_t i = 0; i < P; ++i) {
        const std::uint8_t lab = labs->data[std::size_t(n) * P + i];
        if (lab == kIgnoreLabel) continue;
        double mx = -1e300;
        for (int c = 0; c < d.c; ++c) mx = std::max(mx, double(zn.value.plane(n, c)[i]));
        double se = 0;
        for (int c = 0; c < d.c; ++c) {
          e[c] = std::exp(double(zn.value.plane(n, c)[i]) - mx);
          se += e[c];
        }
        for (int c = 0; c < d.c; ++c) {
          const double p = e[c] / se - (c == lab ? 1.0 : 0.0);
          dz.plane(n, c)[i] += Real(p * scale);
        }
      }
    }
  });
}

LabelMap argmax_channels(const Tensor& scores) {
  LabelMap out(scores.n(), scores.h(), scores.w());
  const std::size_t P = scores.dims().plane();
  for (int n = 0; n < scores.n(); ++n) {
    for (std::size_t i = 0; i < P; ++i) {
      int best = 0;
      Real bv = scores.plane(n, 0)[i];
      for (int c = 1; c < scores.c(); ++c) {
        const Real v = scores.plane(n, c)[i];
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      out.data[std::size_t(n) * P + i] = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

}  // namespace ops
}  // namespace lpsnet
