// Copyright 2026 The TMO Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tmo/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace tmo::ad {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
void backward(const Var<T>& root) {
  if (!root.defined() || root.shape().numel() != 1) throw std::invalid_argument("backward: root must be a scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && n->grad.size() == n->value.size()) n->backward(*n);
  }
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedRowMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedRowMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

/// Gradient buffer of parent i, or nullptr when it needs none.
template <typename T>
Buffer<T>* parent_grad(Node<T>& self, std::size_t i) {
  if (i >= self.parents.size()) return nullptr;
  Node<T>* p = self.parents[i].get();
  if (!p || !p->requires_grad) return nullptr;
  return &p->grad_buffer();
}

template <typename T>
const Buffer<T>& parent_value(Node<T>& self, std::size_t i) {
  return self.parents[i]->value;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------- conv2d

struct ConvGeometry {
  int n, c, h, w;    // input
  int o, kh, kw;     // filters
  int ho, wo;        // output
  std::vector<int> rowmap;  // kh x ho, -1 = zero padding
  std::vector<int> colmap;  // kw x wo
  int tile_rows;

  Eigen::Index k() const { return static_cast<Eigen::Index>(c) * kh * kw; }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& wt, const ConvOptions& opt) {
  require(x.c == wt.c, "conv2d: channel mismatch between input and weight");
  require(opt.stride_h >= 1 && opt.stride_w >= 1, "conv2d: stride must be >= 1");
  ConvGeometry g{x.n, x.c, x.h, x.w, wt.n, wt.h, wt.w, 0, 0, {}, {}, 1};
  g.ho = (x.h + 2 * opt.pad_h - wt.h) / opt.stride_h + 1;
  g.wo = (x.w + 2 * opt.pad_w - wt.w) / opt.stride_w + 1;
  require(x.h + 2 * opt.pad_h >= wt.h && x.w + 2 * opt.pad_w >= wt.w, "conv2d: input smaller than kernel");
  auto map_axis = [&](int k, int out, int in, int stride, int pad) {
    std::vector<int> m(static_cast<std::size_t>(k) * out);
    for (int ki = 0; ki < k; ++ki) {
      for (int o = 0; o < out; ++o) {
        int i = o * stride - pad + ki;
        if (i < 0 || i >= in) i = opt.pad_mode == PadMode::kReflect ? reflect_index(i, in) : -1;
        m[static_cast<std::size_t>(ki) * out + o] = i;
      }
    }
    return m;
  };
  g.rowmap = map_axis(g.kh, g.ho, g.h, opt.stride_h, opt.pad_h);
  g.colmap = map_axis(g.kw, g.wo, g.w, opt.stride_w, opt.pad_w);
  constexpr Eigen::Index kTileBudget = Eigen::Index(1) << 22;
  g.tile_rows = static_cast<int>(std::clamp<Eigen::Index>(kTileBudget / std::max<Eigen::Index>(1, g.k() * g.wo), 1, g.ho));
  return g;
}

template <typename T>
void im2col(const T* img, const ConvGeometry& g, int r0, int r1, T* cols) {
  const Eigen::Index p = static_cast<Eigen::Index>(r1 - r0) * g.wo;
  for (int c = 0; c < g.c; ++c) {
    const T* plane = img + static_cast<Eigen::Index>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        T* dst = cols + ((static_cast<Eigen::Index>(c) * g.kh + ki) * g.kw + kj) * p;
        const int* cm = &g.colmap[static_cast<std::size_t>(kj) * g.wo];
        for (int oy = r0; oy < r1; ++oy) {
          T* d = dst + static_cast<Eigen::Index>(oy - r0) * g.wo;
          const int iy = g.rowmap[static_cast<std::size_t>(ki) * g.ho + oy];
          if (iy < 0) {
            std::fill_n(d, g.wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<Eigen::Index>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) d[ox] = cm[ox] < 0 ? T(0) : src[cm[ox]];
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, int r0, int r1, T* img) {
  const Eigen::Index p = static_cast<Eigen::Index>(r1 - r0) * g.wo;
  for (int c = 0; c < g.c; ++c) {
    T* plane = img + static_cast<Eigen::Index>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const T* src = cols + ((static_cast<Eigen::Index>(c) * g.kh + ki) * g.kw + kj) * p;
        const int* cm = &g.colmap[static_cast<std::size_t>(kj) * g.wo];
        for (int oy = r0; oy < r1; ++oy) {
          const int iy = g.rowmap[static_cast<std::size_t>(ki) * g.ho + oy];
          if (iy < 0) continue;
          const T* s = src + static_cast<Eigen::Index>(oy - r0) * g.wo;
          T* dst = plane + static_cast<Eigen::Index>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            if (cm[ox] >= 0) dst[cm[ox]] += s[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt) {
  const auto g = std::make_shared<const ConvGeometry>(conv_geometry(x.shape(), weight.shape(), opt));
  if (bias.defined()) require(bias.shape().numel() == g->o, "conv2d: bias size must equal output channels");
  const Shape out_shape{g->n, g->o, g->ho, g->wo};
  const Eigen::Index out_plane = static_cast<Eigen::Index>(g->ho) * g->wo;
  const Eigen::Index in_image = static_cast<Eigen::Index>(g->c) * g->h * g->w;
  const Eigen::Index k = g->k();

  Buffer<T> out(out_shape.numel());
  std::vector<T> cols(static_cast<std::size_t>(k * g->tile_rows * g->wo));
  ConstRowMap<T> wm(weight.value().data(), g->o, k);
  for (int n = 0; n < g->n; ++n) {
    for (int r0 = 0; r0 < g->ho; r0 += g->tile_rows) {
      const int r1 = std::min(g->ho, r0 + g->tile_rows);
      const Eigen::Index p = static_cast<Eigen::Index>(r1 - r0) * g->wo;
      im2col(x.value().data() + n * in_image, *g, r0, r1, cols.data());
      StridedRowMap<T> y(out.data() + (static_cast<Eigen::Index>(n) * g->o) * out_plane + r0 * g->wo, g->o, p,
                         Eigen::OuterStride<>(out_plane));
      y.noalias() = wm * ConstRowMap<T>(cols.data(), k, p);
    }
    if (bias.defined()) {
      for (int o = 0; o < g->o; ++o) {
        out.segment((static_cast<Eigen::Index>(n) * g->o + o) * out_plane, out_plane) += bias.value()[o];
      }
    }
  }

  return make_result<T>(out_shape, std::move(out), {x, weight, bias}, [g, out_plane, in_image, k](Node<T>& self) {
    Buffer<T>* gx = parent_grad(self, 0);
    Buffer<T>* gw = parent_grad(self, 1);
    Buffer<T>* gb = parent_grad(self, 2);
    const Buffer<T>& xv = parent_value(self, 0);
    ConstRowMap<T> wm(parent_value(self, 1).data(), g->o, k);
    std::vector<T> cols(static_cast<std::size_t>(k * g->tile_rows * g->wo));
    for (int n = 0; n < g->n; ++n) {
      for (int r0 = 0; r0 < g->ho; r0 += g->tile_rows) {
        const int r1 = std::min(g->ho, r0 + g->tile_rows);
        const Eigen::Index p = static_cast<Eigen::Index>(r1 - r0) * g->wo;
        ConstStridedRowMap<T> dy(self.grad.data() + (static_cast<Eigen::Index>(n) * g->o) * out_plane + r0 * g->wo,
                                 g->o, p, Eigen::OuterStride<>(out_plane));
        if (gw) {
          im2col(xv.data() + n * in_image, *g, r0, r1, cols.data());
          RowMap<T>(gw->data(), g->o, k).noalias() += dy * ConstRowMap<T>(cols.data(), k, p).transpose();
        }
        if (gx) {
          RowMap<T>(cols.data(), k, p).noalias() = wm.transpose() * dy;
          col2im_add(cols.data(), *g, r0, r1, gx->data() + n * in_image);
        }
      }
      if (gb) {
        for (int o = 0; o < g->o; ++o) {
          (*gb)[o] += self.grad.segment((static_cast<Eigen::Index>(n) * g->o + o) * out_plane, out_plane).sum();
        }
      }
    }
  });
}

template <typename T>
Var<T> conv_transpose2x2(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(ws.n == xs.c && ws.h == 2 && ws.w == 2, "conv_transpose2x2: weight must be C x O x 2 x 2");
  const int c = xs.c, o = ws.c, h = xs.h, w = xs.w;
  if (bias.defined()) require(bias.shape().numel() == o, "conv_transpose2x2: bias size must equal output channels");
  const Shape out_shape{xs.n, o, 2 * h, 2 * w};
  const Eigen::Index hw = xs.plane();
  const Eigen::Index ow = 2 * w;

  Buffer<T> out(out_shape.numel());
  RowMat<T> z(4 * o, hw);
  ConstRowMap<T> wm(weight.value().data(), c, 4 * o);
  for (int n = 0; n < xs.n; ++n) {
    z.noalias() = wm.transpose() * ConstRowMap<T>(x.value().data() + n * c * hw, c, hw);
    for (int oc = 0; oc < o; ++oc) {
      const T b = bias.defined() ? bias.value()[oc] : T(0);
      T* dst = out.data() + (static_cast<Eigen::Index>(n) * o + oc) * 4 * hw;
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          const T* src = z.data() + (oc * 4 + a * 2 + bb) * hw;
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) dst[(2 * i + a) * ow + 2 * j + bb] = src[i * w + j] + b;
        }
    }
  }

  return make_result<T>(out_shape, std::move(out), {x, weight, bias}, [=](Node<T>& self) {
    Buffer<T>* gx = parent_grad(self, 0);
    Buffer<T>* gw = parent_grad(self, 1);
    Buffer<T>* gb = parent_grad(self, 2);
    const Buffer<T>& xv = parent_value(self, 0);
    ConstRowMap<T> wm(parent_value(self, 1).data(), c, 4 * o);
    RowMat<T> dz(4 * o, hw);
    for (int n = 0; n < xs.n; ++n) {
      for (int oc = 0; oc < o; ++oc) {
        const T* src = self.grad.data() + (static_cast<Eigen::Index>(n) * o + oc) * 4 * hw;
        for (int a = 0; a < 2; ++a)
          for (int bb = 0; bb < 2; ++bb) {
            T* d = dz.data() + (oc * 4 + a * 2 + bb) * hw;
            for (int i = 0; i < h; ++i)
              for (int j = 0; j < w; ++j) d[i * w + j] = src[(2 * i + a) * ow + 2 * j + bb];
          }
        if (gb) (*gb)[oc] += Eigen::Map<const Buffer<T>>(src, 4 * hw).sum();
      }
      if (gx) RowMap<T>(gx->data() + n * c * hw, c, hw).noalias() += wm * dz;
      if (gw) {
        RowMap<T>(gw->data(), c, 4 * o).noalias() +=
            ConstRowMap<T>(xv.data() + n * c * hw, c, hw) * dz.transpose();
      }
    }
  });
}

// ---------------------------------------------------------------- pooling

template <typename T>
Var<T> max_pool2d(const Var<T>& x, int kernel, int stride) {
  const Shape s = x.shape();
  require(kernel >= 1 && stride >= 1, "max_pool2d: bad kernel/stride");
  require(s.h >= kernel && s.w >= kernel, "max_pool2d: input smaller than kernel");
  const int ho = (s.h - kernel) / stride + 1;
  const int wo = (s.w - kernel) / stride + 1;
  const Shape out_shape{s.n, s.c, ho, wo};
  Buffer<T> out(out_shape.numel());
  auto argmax = std::make_shared<std::vector<Eigen::Index>>(static_cast<std::size_t>(out_shape.numel()));
  const T* xv = x.value().data();
  Eigen::Index idx = 0;
  for (Eigen::Index pl = 0; pl < static_cast<Eigen::Index>(s.n) * s.c; ++pl) {
    const Eigen::Index base = pl * s.plane();
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox, ++idx) {
        Eigen::Index best = base + static_cast<Eigen::Index>(oy * stride) * s.w + ox * stride;
        for (int ky = 0; ky < kernel; ++ky)
          for (int kx = 0; kx < kernel; ++kx) {
            const Eigen::Index i = base + static_cast<Eigen::Index>(oy * stride + ky) * s.w + ox * stride + kx;
            if (xv[i] > xv[best]) best = i;
          }
        out[idx] = xv[best];
        (*argmax)[idx] = best;
      }
  }
  return make_result<T>(out_shape, std::move(out), {x}, [argmax](Node<T>& self) {
    Buffer<T>* gx = parent_grad(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < argmax->size(); ++i) (*gx)[(*argmax)[i]] += self.grad[static_cast<Eigen::Index>(i)];
  });
}

template <typename T>
Var<T> avg_pool2d(const Var<T>& x, int kernel, int stride, int pad) {
  const Shape s = x.shape();
  require(kernel >= 1 && stride >= 1 && pad >= 0, "avg_pool2d: bad kernel/stride/pad");
  require(s.h + 2 * pad >= kernel && s.w + 2 * pad >= kernel, "avg_pool2d: input smaller than kernel");
  const int ho = (s.h + 2 * pad - kernel) / stride + 1;
  const int wo = (s.w + 2 * pad - kernel) / stride + 1;
  const Shape out_shape{s.n, s.c, ho, wo};
  const T inv = T(1) / T(kernel * kernel);
  auto visit = [=](auto&& fn) {
    Eigen::Index idx = 0;
    for (Eigen::Index pl = 0; pl < static_cast<Eigen::Index>(s.n) * s.c; ++pl) {
      const Eigen::Index base = pl * s.plane();
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox, ++idx)
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= s.w) continue;
              fn(idx, base + static_cast<Eigen::Index>(iy) * s.w + ix);
            }
          }
    }
  };
  Buffer<T> out = Buffer<T>::Zero(out_shape.numel());
  const T* xv = x.value().data();
  visit([&](Eigen::Index o, Eigen::Index i) { out[o] += xv[i]; });
  out *= inv;
  return make_result<T>(out_shape, std::move(out), {x}, [visit, inv](Node<T>& self) {
    Buffer<T>* gx = parent_grad(self, 0);
    if (!gx) return;
    visit([&](Eigen::Index o, Eigen::Index i) { (*gx)[i] += inv * self.grad[o]; });
  });
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Shape s = x.shape();
  const Shape out_shape{s.n, s.c, 1, 1};
  const Eigen::Index pl = s.plane();
  Buffer<T> out(out_shape.numel());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = x.value().segment(i * pl, pl).mean();
  return make_result<T>(out_shape, std::move(out), {x}, [pl](Node<T>& self) {
    Buffer<T>* gx = parent_grad(self, 0);
    if (!gx) return;
    for (Eigen::Index i = 0; i < self.grad.size(); ++i) gx->segment(i * pl, pl) += self.grad[i] / T(pl);
  });
}

// ---------------------------------------------------------------- elementwise

template <typename T>
Var<T> relu(const Var<T>& x) {
  Buffer<T> out = x.value().max(T(0));
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += (self.value > T(0)).select(self.grad, T(0));
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  Buffer<T> out = (x.value() > T(0)).select(x.value(), slope * x.value());
  return make_result<T>(x.shape(), std::move(out), {x}, [slope](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) {
      *gx += (parent_value(self, 0) > T(0)).select(self.grad, slope * self.grad);
    }
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Buffer<T> out = x.value().unaryExpr([](T v) {
    // split by sign to avoid overflow in exp
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  });
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += self.grad * self.value * (T(1) - self.value);
  });
}

template <typename T>
Var<T> sqrt_guarded(const Var<T>& x, T delta) {
  require((x.value() + delta >= T(0)).all(), "sqrt_guarded: argument below -delta");
  Buffer<T> out = (x.value() + delta).sqrt();
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += self.grad * T(0.5) / self.value;
  });
}

template <typename T>
Var<T> square(const Var<T>& x) {
  Buffer<T> out = x.value().square();
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += T(2) * self.grad * parent_value(self, 0);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch");
  Buffer<T> out = a.value() + b.value();
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    if (Buffer<T>* ga = parent_grad(self, 0)) *ga += self.grad;
    if (Buffer<T>* gb = parent_grad(self, 1)) *gb += self.grad;
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(), "sub: shape mismatch");
  Buffer<T> out = a.value() - b.value();
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    if (Buffer<T>* ga = parent_grad(self, 0)) *ga += self.grad;
    if (Buffer<T>* gb = parent_grad(self, 1)) *gb -= self.grad;
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T s) {
  Buffer<T> out = x.value() * s;
  return make_result<T>(x.shape(), std::move(out), {x}, [s](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += s * self.grad;
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, T s) {
  Buffer<T> out = x.value() + s;
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += self.grad;
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  Buffer<T> out(1);
  out[0] = x.value().sum();
  return make_result<T>(Shape{1, 1, 1, 1}, std::move(out), {x}, [](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += self.grad[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  require(x.shape().numel() > 0, "mean: empty tensor");
  const T inv = T(1) / T(x.shape().numel());
  Buffer<T> out(1);
  out[0] = x.value().sum() * inv;
  return make_result<T>(Shape{1, 1, 1, 1}, std::move(out), {x}, [inv](Node<T>& self) {
    if (Buffer<T>* gx = parent_grad(self, 0)) *gx += self.grad[0] * inv;
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  require(!xs.empty(), "concat_channels: no inputs");
  const Shape s0 = xs.front().shape();
  int total_c = 0;
  for (const auto& x : xs) {
    require(x.shape().n == s0.n && x.shape().h == s0.h && x.shape().w == s0.w, "concat_channels: extent mismatch");
    total_c += x.shape().c;
  }
  const Shape out_shape{s0.n, total_c, s0.h, s0.w};
  const Eigen::Index pl = s0.plane();
  Buffer<T> out(out_shape.numel());
  std::vector<int> channels;
  for (int n = 0; n < s0.n; ++n) {
    Eigen::Index dst = static_cast<Eigen::Index>(n) * total_c * pl;
    for (const auto& x : xs) {
      const Eigen::Index len = x.shape().c * pl;
      out.segment(dst, len) = x.value().segment(n * len, len);
      dst += len;
    }
  }
  for (const auto& x : xs) channels.push_back(x.shape().c);
  return make_result<T>(out_shape, std::move(out), xs, [channels, pl, total_c, n_batch = s0.n](Node<T>& self) {
    for (int n = 0; n < n_batch; ++n) {
      Eigen::Index src = static_cast<Eigen::Index>(n) * total_c * pl;
      for (std::size_t i = 0; i < channels.size(); ++i) {
        const Eigen::Index len = channels[i] * pl;
        if (Buffer<T>* g = parent_grad(self, i)) g->segment(n * len, len) += self.grad.segment(src, len);
        src += len;
      }
    }
  });
}

// ---------------------------------------------------------------- resampling

template <typename T>
Var<T> resample(const Var<T>& x, const ResampleTaps& rows, const ResampleTaps& cols) {
  const Shape s = x.shape();
  require(rows.in_size == s.h && cols.in_size == s.w, "resample: taps do not match input extents");
  const int ho = rows.out_size, wo = cols.out_size;
  const Shape out_shape{s.n, s.c, ho, wo};
  const auto planes = static_cast<Eigen::Index>(s.n) * s.c;
  Buffer<T> out = Buffer<T>::Zero(out_shape.numel());
  std::vector<T> tmp(static_cast<std::size_t>(ho) * s.w);
  for (Eigen::Index p = 0; p < planes; ++p) {
    const T* src = x.value().data() + p * s.plane();
    std::fill(tmp.begin(), tmp.end(), T(0));
    for (int i = 0; i < ho; ++i)
      for (const auto& [j, wt] : rows.taps[i])
        for (int col = 0; col < s.w; ++col) tmp[i * s.w + col] += T(wt) * src[j * s.w + col];
    T* dst = out.data() + p * out_shape.plane();
    for (int r = 0; r < ho; ++r)
      for (int i = 0; i < wo; ++i)
        for (const auto& [j, wt] : cols.taps[i]) dst[r * wo + i] += T(wt) * tmp[r * s.w + j];
  }
  return make_result<T>(out_shape, std::move(out), {x}, [rows, cols, s, ho, wo, planes](Node<T>& self) {
    Buffer<T>* gx = parent_grad(self, 0);
    if (!gx) return;
    std::vector<T> tmp(static_cast<std::size_t>(ho) * s.w);
    for (Eigen::Index p = 0; p < planes; ++p) {
      const T* gy = self.grad.data() + p * static_cast<Eigen::Index>(ho) * wo;
      std::fill(tmp.begin(), tmp.end(), T(0));
      for (int r = 0; r < ho; ++r)
        for (int i = 0; i < wo; ++i)
          for (const auto& [j, wt] : cols.taps[i]) tmp[r * s.w + j] += T(wt) * gy[r * wo + i];
      T* g = gx->data() + p * s.plane();
      for (int i = 0; i < ho; ++i)
        for (const auto& [j, wt] : rows.taps[i])
          for (int col = 0; col < s.w; ++col) g[j * s.w + col] += T(wt) * tmp[i * s.w + col];
    }
  });
}

template <typename T>
Var<T> downscale(const Var<T>& x, int k) {
  require(k >= 0 && k <= 2, "downscale: level must be 0, 1 or 2");
  const int f = 1 << k;
  require(x.shape().h % f == 0 && x.shape().w % f == 0, "downscale: dimensions not divisible by 2^k");
  Var<T> out = x;
  for (int s = 0; s < k; ++s) {
    const int h = out.shape().h, w = out.shape().w;
    out = resample(out, bicubic_taps(h, h / 2), bicubic_taps(w, w / 2));
  }
  return out;
}

// ---------------------------------------------------------------- Pearson

namespace {

template <typename T>
struct PatchStats {
  T mean_a, mean_b, sigma_a, sigma_b, cov, r;
};

template <typename T>
PatchStats<T> patch_stats(const T* a, const T* b, int stride, int kh, int kw, T guard) {
  const int kN = kh * kw;
  T sa = 0, sb = 0;
  for (int y = 0; y < kh; ++y)
    for (int x = 0; x < kw; ++x) {
      sa += a[y * stride + x];
      sb += b[y * stride + x];
    }
  PatchStats<T> st{};
  st.mean_a = sa / T(kN);
  st.mean_b = sb / T(kN);
  T va = 0, vb = 0, cv = 0;
  for (int y = 0; y < kh; ++y)
    for (int x = 0; x < kw; ++x) {
      const T da = a[y * stride + x] - st.mean_a;
      const T db = b[y * stride + x] - st.mean_b;
      va += da * da;
      vb += db * db;
      cv += da * db;
    }
  st.sigma_a = std::sqrt(va / T(kN));
  st.sigma_b = std::sqrt(vb / T(kN));
  st.cov = cv / T(kN);
  st.r = st.cov / ((st.sigma_a + guard) * (st.sigma_b + guard));
  return st;
}

}  // namespace

template <typename T>
Var<T> patch_pearson(const Var<T>& a, const Var<T>& b, T guard) {
  const Shape s = a.shape();
  require(s == b.shape(), "patch_pearson: dimension mismatch");
  require(s.h >= 1 && s.w >= 1, "patch_pearson: empty map");
  const int kh = std::min(kPearsonPatch, s.h), kw = std::min(kPearsonPatch, s.w);
  const int py = s.h - kh + 1, px = s.w - kw + 1;
  const T inv_np = T(1) / T(static_cast<Eigen::Index>(py) * px);
  const Shape out_shape{s.n, s.c, 1, 1};
  const auto planes = static_cast<Eigen::Index>(s.n) * s.c;
  Buffer<T> out(planes);
  for (Eigen::Index p = 0; p < planes; ++p) {
    const T* av = a.value().data() + p * s.plane();
    const T* bv = b.value().data() + p * s.plane();
    T acc = 0;
    for (int y = 0; y < py; ++y)
      for (int x = 0; x < px; ++x) acc += patch_stats(av + y * s.w + x, bv + y * s.w + x, s.w, kh, kw, guard).r;
    out[p] = acc * inv_np;
  }
  return make_result<T>(out_shape, std::move(out), {a, b}, [=](Node<T>& self) {
    Buffer<T>* ga = parent_grad(self, 0);
    Buffer<T>* gb = parent_grad(self, 1);
    const int kN = kh * kw;
    for (Eigen::Index p = 0; p < planes; ++p) {
      const T* av = parent_value(self, 0).data() + p * s.plane();
      const T* bv = parent_value(self, 1).data() + p * s.plane();
      const T g = self.grad[p] * inv_np;
      for (int y = 0; y < py; ++y)
        for (int x = 0; x < px; ++x) {
          const auto st = patch_stats(av + y * s.w + x, bv + y * s.w + x, s.w, kh, kw, guard);
          const T denom = (st.sigma_a + guard) * (st.sigma_b + guard);
          const T cross = g / (T(kN) * denom);
          const T self_a = st.sigma_a > T(0) ? g * st.r / (T(kN) * st.sigma_a * (st.sigma_a + guard)) : T(0);
          const T self_b = st.sigma_b > T(0) ? g * st.r / (T(kN) * st.sigma_b * (st.sigma_b + guard)) : T(0);
          for (int yy = 0; yy < kh; ++yy)
            for (int xx = 0; xx < kw; ++xx) {
              const Eigen::Index i = p * s.plane() + static_cast<Eigen::Index>(y + yy) * s.w + x + xx;
              const T da = av[(y + yy) * s.w + x + xx] - st.mean_a;
              const T db = bv[(y + yy) * s.w + x + xx] - st.mean_b;
              if (ga) (*ga)[i] += cross * db - self_a * da;
              if (gb) (*gb)[i] += cross * da - self_b * db;
            }
        }
    }
  });
}

#define TMO_INSTANTIATE_OPS(T)                                                                  \
  template void backward(const Var<T>&);                                                        \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, const ConvOptions&);      \
  template Var<T> conv_transpose2x2(const Var<T>&, const Var<T>&, const Var<T>&);               \
  template Var<T> max_pool2d(const Var<T>&, int, int);                                          \
  template Var<T> avg_pool2d(const Var<T>&, int, int, int);                                     \
  template Var<T> global_avg_pool(const Var<T>&);                                               \
  template Var<T> relu(const Var<T>&);                                                          \
  template Var<T> leaky_relu(const Var<T>&, T);                                                 \
  template Var<T> sigmoid(const Var<T>&);                                                       \
  template Var<T> sqrt_guarded(const Var<T>&, T);                                               \
  template Var<T> square(const Var<T>&);                                                        \
  template Var<T> add(const Var<T>&, const Var<T>&);                                            \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                            \
  template Var<T> scale(const Var<T>&, T);                                                      \
  template Var<T> add_scalar(const Var<T>&, T);                                                 \
  template Var<T> mean(const Var<T>&);                                                          \
  template Var<T> sum(const Var<T>&);                                                           \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                                  \
  template Var<T> resample(const Var<T>&, const ResampleTaps&, const ResampleTaps&);            \
  template Var<T> downscale(const Var<T>&, int);                                                \
  template Var<T> patch_pearson(const Var<T>&, const Var<T>&, T);

TMO_INSTANTIATE_OPS(float)
TMO_INSTANTIATE_OPS(double)

#undef TMO_INSTANTIATE_OPS

}  // namespace tmo::ad
