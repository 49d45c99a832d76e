#include "ops.hpp"

#include <algorithm>
#include <cmath>

namespace srnet::ops {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) fail(ErrorCode::invalid_argument, msg);
}

inline int out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, int stride,
                 int pad) {
  require(x.ndim() == 3, "conv2d: input must be [H,W,Cin]");
  require(kernel.ndim() == 4, "conv2d: kernel must be [kh,kw,Cin,Cout]");
  const int h = x.extent(0), w = x.extent(1), cin = x.extent(2);
  const int kh = kernel.extent(0), kw = kernel.extent(1);
  const int kcin = kernel.extent(2), cout = kernel.extent(3);
  require(kh % 2 == 1 && kw % 2 == 1, "conv2d: kernel extents must be odd");
  require(kcin == cin, "conv2d: input channels do not match kernel Cin");
  require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const int oh = out_extent(h, kh, stride, pad);
  const int ow = out_extent(w, kw, stride, pad);
  require(oh >= 1 && ow >= 1, "conv2d: output would be empty");

  Tensor<T> y({oh, ow, cout});
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* yp = &y.at(oy, ox, 0);
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= w) continue;
          const T* xp = &x.at(iy, ix, 0);
          const T* kp = &kernel.at(ky, kx, 0, 0);
          for (int ci = 0; ci < cin; ++ci) {
            const T a = xp[ci];
            const T* kc = kp + static_cast<size_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) yp[co] += a * kc[co];
          }
        }
      }
    }
  }
  check_finite(y, "conv2d");
  return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel,
                     const Tensor<T>& dy, int stride, int pad, Tensor<T>& dx,
                     Tensor<T>& dkernel) {
  const int h = x.extent(0), w = x.extent(1), cin = x.extent(2);
  const int kh = kernel.extent(0), kw = kernel.extent(1);
  const int cout = kernel.extent(3);
  const int oh = dy.extent(0), ow = dy.extent(1);
  dx = Tensor<T>({h, w, cin});
  dkernel = Tensor<T>(kernel.shape());
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const T* gp = &dy.at(oy, ox, 0);
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= w) continue;
          const T* xp = &x.at(iy, ix, 0);
          T* dxp = &dx.at(iy, ix, 0);
          const T* kp = &kernel.at(ky, kx, 0, 0);
          T* dkp = &dkernel.at(ky, kx, 0, 0);
          for (int ci = 0; ci < cin; ++ci) {
            const T a = xp[ci];
            const T* kc = kp + static_cast<size_t>(ci) * cout;
            T* dkc = dkp + static_cast<size_t>(ci) * cout;
            T acc = 0;
            for (int co = 0; co < cout; ++co) {
              const T g = gp[co];
              acc += kc[co] * g;
              dkc[co] += a * g;
            }
            dxp[ci] += acc;
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& kernel,
                           int stride, int pad) {
  require(x.ndim() == 3, "depthwise_conv2d: input must be [H,W,C]");
  require(kernel.ndim() == 3, "depthwise_conv2d: kernel must be [kh,kw,C]");
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  const int kh = kernel.extent(0), kw = kernel.extent(1);
  require(kernel.extent(2) == c,
          "depthwise_conv2d: channel count does not match kernel");
  const int oh = out_extent(h, kh, stride, pad);
  const int ow = out_extent(w, kw, stride, pad);
  require(oh >= 1 && ow >= 1, "depthwise_conv2d: output would be empty");

  Tensor<T> y({oh, ow, c});
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* yp = &y.at(oy, ox, 0);
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= w) continue;
          const T* xp = &x.at(iy, ix, 0);
          const T* kp = &kernel.at(ky, kx, 0);
          for (int ci = 0; ci < c; ++ci) yp[ci] += xp[ci] * kp[ci];
        }
      }
    }
  }
  check_finite(y, "depthwise_conv2d");
  return y;
}

template <typename T>
void depthwise_conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel,
                               const Tensor<T>& dy, int stride, int pad,
                               Tensor<T>& dx, Tensor<T>& dkernel) {
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  const int kh = kernel.extent(0), kw = kernel.extent(1);
  const int oh = dy.extent(0), ow = dy.extent(1);
  dx = Tensor<T>({h, w, c});
  dkernel = Tensor<T>(kernel.shape());
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const T* gp = &dy.at(oy, ox, 0);
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= w) continue;
          const T* xp = &x.at(iy, ix, 0);
          T* dxp = &dx.at(iy, ix, 0);
          const T* kp = &kernel.at(ky, kx, 0);
          T* dkp = &dkernel.at(ky, kx, 0);
          for (int ci = 0; ci < c; ++ci) {
            dxp[ci] += kp[ci] * gp[ci];
            dkp[ci] += xp[ci] * gp[ci];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul: operands must be 2-d");
  const int m = a.extent(0), k = a.extent(1);
  require(b.extent(0) == k, "matmul: inner extents do not match");
  const int n = b.extent(1);
  Tensor<T> c({m, n});
  for (int i = 0; i < m; ++i) {
    const T* ap = &a.at(i, 0);
    T* cp = &c.at(i, 0);
    for (int kk = 0; kk < k; ++kk) {
      const T av = ap[kk];
      if (av == T(0)) continue;
      const T* bp = &b.at(kk, 0);
      for (int j = 0; j < n; ++j) cp[j] += av * bp[j];
    }
  }
  check_finite(c, "matmul");
  return c;
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  require(a.ndim() == 2, "transpose2d: operand must be 2-d");
  const int m = a.extent(0), n = a.extent(1);
  Tensor<T> t({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

namespace {

// Iteration helper: axis extent plus the outer repeat count and inner stride
// of the softmax axis for an arbitrary-rank tensor.
struct AxisIter {
  int64_t outer, extent, inner;
};

AxisIter axis_iter(const Shape& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size()))
    fail(ErrorCode::invalid_argument, "softmax: axis out of range");
  AxisIter it{1, shape[static_cast<size_t>(axis)], 1};
  for (int a = 0; a < axis; ++a) it.outer *= shape[static_cast<size_t>(a)];
  for (size_t a = static_cast<size_t>(axis) + 1; a < shape.size(); ++a)
    it.inner *= shape[a];
  return it;
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const AxisIter it = axis_iter(x.shape(), axis);
  Tensor<T> y(x.shape());
  for (int64_t o = 0; o < it.outer; ++o) {
    for (int64_t i = 0; i < it.inner; ++i) {
      const int64_t base = o * it.extent * it.inner + i;
      T mx = x[base];
      for (int64_t a = 1; a < it.extent; ++a)
        mx = std::max(mx, x[base + a * it.inner]);
      T sum = 0;
      for (int64_t a = 0; a < it.extent; ++a) {
        const T e = std::exp(x[base + a * it.inner] - mx);
        y[base + a * it.inner] = e;
        sum += e;
      }
      for (int64_t a = 0; a < it.extent; ++a) y[base + a * it.inner] /= sum;
    }
  }
  check_finite(y, "softmax");
  return y;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy, int axis) {
  const AxisIter it = axis_iter(y.shape(), axis);
  Tensor<T> dx(y.shape());
  for (int64_t o = 0; o < it.outer; ++o) {
    for (int64_t i = 0; i < it.inner; ++i) {
      const int64_t base = o * it.extent * it.inner + i;
      T dot = 0;
      for (int64_t a = 0; a < it.extent; ++a)
        dot += dy[base + a * it.inner] * y[base + a * it.inner];
      for (int64_t a = 0; a < it.extent; ++a) {
        const int64_t idx = base + a * it.inner;
        dx[idx] = y[idx] * (dy[idx] - dot);
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int g) {
  require(x.ndim() == 3, "avg_pool2d: input must be [H,W,C]");
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  require(g >= 1 && h % g == 0 && w % g == 0,
          "avg_pool2d: pool factor must divide both extents");
  const int oh = h / g, ow = w / g;
  Tensor<T> y({oh, ow, c});
  const T scale = T(1) / static_cast<T>(g * g);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      T* yp = &y.at(oy, ox, 0);
      for (int dy = 0; dy < g; ++dy)
        for (int dx = 0; dx < g; ++dx) {
          const T* xp = &x.at(oy * g + dy, ox * g + dx, 0);
          for (int ci = 0; ci < c; ++ci) yp[ci] += xp[ci];
        }
      for (int ci = 0; ci < c; ++ci) yp[ci] *= scale;
    }
  return y;
}

template <typename T>
Tensor<T> avg_pool2d_backward(const Tensor<T>& dy, int h, int w, int g) {
  const int oh = dy.extent(0), ow = dy.extent(1), c = dy.extent(2);
  Tensor<T> dx({h, w, c});
  const T scale = T(1) / static_cast<T>(g * g);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const T* gp = &dy.at(oy, ox, 0);
      for (int ddy = 0; ddy < g; ++ddy)
        for (int ddx = 0; ddx < g; ++ddx) {
          T* dxp = &dx.at(oy * g + ddy, ox * g + ddx, 0);
          for (int ci = 0; ci < c; ++ci) dxp[ci] += gp[ci] * scale;
        }
    }
  return dx;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require(x.ndim() == 3, "global_avg_pool: input must be [H,W,C]");
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  Tensor<T> y({1, 1, c});
  for (int yx = 0; yx < h * w; ++yx)
    for (int ci = 0; ci < c; ++ci) y[ci] += x[static_cast<int64_t>(yx) * c + ci];
  const T scale = T(1) / static_cast<T>(h * w);
  for (int ci = 0; ci < c; ++ci) y[ci] *= scale;
  return y;
}

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x) {
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  Tensor<T> y({h, w, 1});
  const T scale = T(1) / static_cast<T>(c);
  for (int yx = 0; yx < h * w; ++yx) {
    T s = 0;
    for (int ci = 0; ci < c; ++ci) s += x[static_cast<int64_t>(yx) * c + ci];
    y[yx] = s * scale;
  }
  return y;
}

template <typename T>
std::pair<Tensor<T>, std::vector<int>> channel_max(const Tensor<T>& x) {
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  Tensor<T> y({h, w, 1});
  std::vector<int> arg(static_cast<size_t>(h) * w);
  for (int yx = 0; yx < h * w; ++yx) {
    const T* xp = x.data() + static_cast<int64_t>(yx) * c;
    int best = 0;
    for (int ci = 1; ci < c; ++ci)
      if (xp[ci] > xp[best]) best = ci;
    y[yx] = xp[best];
    arg[static_cast<size_t>(yx)] = best;
  }
  return {std::move(y), std::move(arg)};
}

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, int h2, int w2) {
  require(x.ndim() == 3, "bilinear_upsample: input must be [H,W,C]");
  const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
  require(h2 >= 1 && w2 >= 1, "bilinear_upsample: bad target size");
  Tensor<T> y({h2, w2, c});
  const T sy = h2 > 1 ? static_cast<T>(h - 1) / static_cast<T>(h2 - 1) : T(0);
  const T sx = w2 > 1 ? static_cast<T>(w - 1) / static_cast<T>(w2 - 1) : T(0);
  for (int oy = 0; oy < h2; ++oy) {
    const T fy = sy * static_cast<T>(oy);
    int y0 = static_cast<int>(std::floor(fy));
    y0 = std::min(y0, h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const T wy = fy - static_cast<T>(y0);
    for (int ox = 0; ox < w2; ++ox) {
      const T fx = sx * static_cast<T>(ox);
      int x0 = static_cast<int>(std::floor(fx));
      x0 = std::min(x0, w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const T wx = fx - static_cast<T>(x0);
      const T* p00 = &x.at(y0, x0, 0);
      const T* p01 = &x.at(y0, x1, 0);
      const T* p10 = &x.at(y1, x0, 0);
      const T* p11 = &x.at(y1, x1, 0);
      T* yp = &y.at(oy, ox, 0);
      for (int ci = 0; ci < c; ++ci) {
        const T top = p00[ci] + (p01[ci] - p00[ci]) * wx;
        const T bot = p10[ci] + (p11[ci] - p10[ci]) * wx;
        yp[ci] = top + (bot - top) * wy;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> bilinear_upsample_backward(const Tensor<T>& dy, int h, int w) {
  const int h2 = dy.extent(0), w2 = dy.extent(1), c = dy.extent(2);
  Tensor<T> dx({h, w, c});
  const T sy = h2 > 1 ? static_cast<T>(h - 1) / static_cast<T>(h2 - 1) : T(0);
  const T sx = w2 > 1 ? static_cast<T>(w - 1) / static_cast<T>(w2 - 1) : T(0);
  for (int oy = 0; oy < h2; ++oy) {
    const T fy = sy * static_cast<T>(oy);
    int y0 = static_cast<int>(std::floor(fy));
    y0 = std::min(y0, h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const T wy = fy - static_cast<T>(y0);
    for (int ox = 0; ox < w2; ++ox) {
      const T fx = sx * static_cast<T>(ox);
      int x0 = static_cast<int>(std::floor(fx));
      x0 = std::min(x0, w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const T wx = fx - static_cast<T>(x0);
      const T* gp = &dy.at(oy, ox, 0);
      T* d00 = &dx.at(y0, x0, 0);
      T* d01 = &dx.at(y0, x1, 0);
      T* d10 = &dx.at(y1, x0, 0);
      T* d11 = &dx.at(y1, x1, 0);
      for (int ci = 0; ci < c; ++ci) {
        const T g = gp[ci];
        d00[ci] += g * (T(1) - wx) * (T(1) - wy);
        d01[ci] += g * wx * (T(1) - wy);
        d10[ci] += g * (T(1) - wx) * wy;
        d11[ci] += g * wx * wy;
      }
    }
  }
  return dx;
}

namespace {

// Shared four-tap accumulation for sampling at pixel-unit (fx,fy) with zero
// contribution outside the array.
template <typename T>
inline void sample_taps(const Tensor<T>& v, int h, int w, int c, T fx, T fy,
                        T* out) {
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const T wx = fx - static_cast<T>(x0);
  const T wy = fy - static_cast<T>(y0);
  const T w00 = (T(1) - wx) * (T(1) - wy);
  const T w01 = wx * (T(1) - wy);
  const T w10 = (T(1) - wx) * wy;
  const T w11 = wx * wy;
  const bool in00 = y0 >= 0 && y0 < h && x0 >= 0 && x0 < w;
  const bool in01 = y0 >= 0 && y0 < h && x0 + 1 >= 0 && x0 + 1 < w;
  const bool in10 = y0 + 1 >= 0 && y0 + 1 < h && x0 >= 0 && x0 < w;
  const bool in11 = y0 + 1 >= 0 && y0 + 1 < h && x0 + 1 >= 0 && x0 + 1 < w;
  for (int ci = 0; ci < c; ++ci) out[ci] = 0;
  if (in00) {
    const T* p = &v.at(y0, x0, 0);
    for (int ci = 0; ci < c; ++ci) out[ci] += w00 * p[ci];
  }
  if (in01) {
    const T* p = &v.at(y0, x0 + 1, 0);
    for (int ci = 0; ci < c; ++ci) out[ci] += w01 * p[ci];
  }
  if (in10) {
    const T* p = &v.at(y0 + 1, x0, 0);
    for (int ci = 0; ci < c; ++ci) out[ci] += w10 * p[ci];
  }
  if (in11) {
    const T* p = &v.at(y0 + 1, x0 + 1, 0);
    for (int ci = 0; ci < c; ++ci) out[ci] += w11 * p[ci];
  }
}

// Backward of sample_taps: scatters weight gradients into dv and returns the
// sampled-value derivatives wrt fx and fy via the difference form.
template <typename T>
inline void sample_taps_backward(const Tensor<T>& v, int h, int w, int c, T fx,
                                 T fy, const T* gvec, Tensor<T>* dv, T* dfx,
                                 T* dfy) {
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const T wx = fx - static_cast<T>(x0);
  const T wy = fy - static_cast<T>(y0);
  const bool in00 = y0 >= 0 && y0 < h && x0 >= 0 && x0 < w;
  const bool in01 = y0 >= 0 && y0 < h && x0 + 1 >= 0 && x0 + 1 < w;
  const bool in10 = y0 + 1 >= 0 && y0 + 1 < h && x0 >= 0 && x0 < w;
  const bool in11 = y0 + 1 >= 0 && y0 + 1 < h && x0 + 1 >= 0 && x0 + 1 < w;
  T gx = 0, gy = 0;
  for (int ci = 0; ci < c; ++ci) {
    const T g = gvec[ci];
    const T v00 = in00 ? v.at(y0, x0, ci) : T(0);
    const T v01 = in01 ? v.at(y0, x0 + 1, ci) : T(0);
    const T v10 = in10 ? v.at(y0 + 1, x0, ci) : T(0);
    const T v11 = in11 ? v.at(y0 + 1, x0 + 1, ci) : T(0);
    gx += g * ((v01 - v00) * (T(1) - wy) + (v11 - v10) * wy);
    gy += g * ((v10 - v00) * (T(1) - wx) + (v11 - v01) * wx);
    if (dv) {
      if (in00) dv->at(y0, x0, ci) += g * (T(1) - wx) * (T(1) - wy);
      if (in01) dv->at(y0, x0 + 1, ci) += g * wx * (T(1) - wy);
      if (in10) dv->at(y0 + 1, x0, ci) += g * (T(1) - wx) * wy;
      if (in11) dv->at(y0 + 1, x0 + 1, ci) += g * wx * wy;
    }
  }
  if (dfx) *dfx += gx;
  if (dfy) *dfy += gy;
}

}  // namespace

template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& v, const Tensor<T>& coords) {
  require(v.ndim() == 3, "bilinear_sample: value must be [H,W,C]");
  require(coords.ndim() == 3 && coords.extent(2) == 2,
          "bilinear_sample: coords must be [Ho,Wo,2]");
  check_finite(coords, "bilinear_sample coords");
  const int h = v.extent(0), w = v.extent(1), c = v.extent(2);
  const int oh = coords.extent(0), ow = coords.extent(1);
  const T hx = static_cast<T>(w - 1) / T(2);
  const T hy = static_cast<T>(h - 1) / T(2);
  Tensor<T> y({oh, ow, c});
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const T fx = (coords.at(oy, ox, 0) + T(1)) * hx;
      const T fy = (coords.at(oy, ox, 1) + T(1)) * hy;
      sample_taps(v, h, w, c, fx, fy, &y.at(oy, ox, 0));
    }
  check_finite(y, "bilinear_sample");
  return y;
}

template <typename T>
void bilinear_sample_backward(const Tensor<T>& v, const Tensor<T>& coords,
                              const Tensor<T>& dy, Tensor<T>& dv,
                              Tensor<T>& dcoords) {
  const int h = v.extent(0), w = v.extent(1), c = v.extent(2);
  const int oh = coords.extent(0), ow = coords.extent(1);
  const T hx = static_cast<T>(w - 1) / T(2);
  const T hy = static_cast<T>(h - 1) / T(2);
  dv = Tensor<T>(v.shape());
  dcoords = Tensor<T>(coords.shape());
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const T fx = (coords.at(oy, ox, 0) + T(1)) * hx;
      const T fy = (coords.at(oy, ox, 1) + T(1)) * hy;
      T dfx = 0, dfy = 0;
      sample_taps_backward(v, h, w, c, fx, fy, &dy.at(oy, ox, 0), &dv, &dfx,
                           &dfy);
      dcoords.at(oy, ox, 0) = dfx * hx;  // chain through denormalization
      dcoords.at(oy, ox, 1) = dfy * hy;
    }
}

template <typename T>
Tensor<T> deform_conv(const Tensor<T>& v, const Tensor<T>& offsets,
                      const Tensor<T>& modulation, const Tensor<T>& kernel) {
  require(v.ndim() == 3, "deform_conv: value must be [H,W,C]");
  const int h = v.extent(0), w = v.extent(1), c = v.extent(2);
  require(kernel.ndim() == 4 && kernel.extent(0) == 3 && kernel.extent(1) == 3,
          "deform_conv: kernel must be [3,3,C,Cout]");
  require(kernel.extent(2) == c, "deform_conv: kernel Cin mismatch");
  const int cout = kernel.extent(3);
  require(offsets.ndim() == 3 && offsets.extent(0) == h &&
              offsets.extent(1) == w && offsets.extent(2) == 18,
          "deform_conv: offsets must be [H,W,18]");
  require(modulation.ndim() == 3 && modulation.extent(0) == h &&
              modulation.extent(1) == w && modulation.extent(2) == 9,
          "deform_conv: modulation must be [H,W,9]");
  check_finite(offsets, "deform_conv offsets");

  Tensor<T> y({h, w, cout});
  std::vector<T> sample(static_cast<size_t>(c));
  for (int oy = 0; oy < h; ++oy) {
    for (int ox = 0; ox < w; ++ox) {
      T* yp = &y.at(oy, ox, 0);
      for (int k = 0; k < 9; ++k) {
        const int ky = k / 3, kx = k % 3;
        const T fx = static_cast<T>(ox + kx - 1) + offsets.at(oy, ox, 2 * k);
        const T fy =
            static_cast<T>(oy + ky - 1) + offsets.at(oy, ox, 2 * k + 1);
        sample_taps(v, h, w, c, fx, fy, sample.data());
        const T m = modulation.at(oy, ox, k);
        const T* kp = &kernel.at(ky, kx, 0, 0);
        for (int ci = 0; ci < c; ++ci) {
          const T a = m * sample[static_cast<size_t>(ci)];
          if (a == T(0)) continue;
          const T* kc = kp + static_cast<size_t>(ci) * cout;
          for (int co = 0; co < cout; ++co) yp[co] += a * kc[co];
        }
      }
    }
  }
  check_finite(y, "deform_conv");
  return y;
}

template <typename T>
void deform_conv_backward(const Tensor<T>& v, const Tensor<T>& offsets,
                          const Tensor<T>& modulation, const Tensor<T>& kernel,
                          const Tensor<T>& dy, Tensor<T>& dv, Tensor<T>& doff,
                          Tensor<T>& dmod, Tensor<T>& dkernel) {
  const int h = v.extent(0), w = v.extent(1), c = v.extent(2);
  const int cout = kernel.extent(3);
  dv = Tensor<T>(v.shape());
  doff = Tensor<T>(offsets.shape());
  dmod = Tensor<T>(modulation.shape());
  dkernel = Tensor<T>(kernel.shape());
  std::vector<T> sample(static_cast<size_t>(c));
  std::vector<T> gvec(static_cast<size_t>(c));
  for (int oy = 0; oy < h; ++oy) {
    for (int ox = 0; ox < w; ++ox) {
      const T* gp = &dy.at(oy, ox, 0);
      for (int k = 0; k < 9; ++k) {
        const int ky = k / 3, kx = k % 3;
        const T fx = static_cast<T>(ox + kx - 1) + offsets.at(oy, ox, 2 * k);
        const T fy =
            static_cast<T>(oy + ky - 1) + offsets.at(oy, ox, 2 * k + 1);
        sample_taps(v, h, w, c, fx, fy, sample.data());
        const T m = modulation.at(oy, ox, k);
        const T* kp = &kernel.at(ky, kx, 0, 0);
        T* dkp = &dkernel.at(ky, kx, 0, 0);
        T dm = 0;
        for (int ci = 0; ci < c; ++ci) {
          const T* kc = kp + static_cast<size_t>(ci) * cout;
          T* dkc = dkp + static_cast<size_t>(ci) * cout;
          const T s = sample[static_cast<size_t>(ci)];
          T acc = 0;
          for (int co = 0; co < cout; ++co) {
            const T g = gp[co];
            acc += kc[co] * g;
            dkc[co] += m * s * g;
          }
          gvec[static_cast<size_t>(ci)] = acc;  // d(out)/d(sample_ci)
          dm += acc * s;
        }
        dmod.at(oy, ox, k) += dm;
        for (int ci = 0; ci < c; ++ci) gvec[static_cast<size_t>(ci)] *= m;
        T dfx = 0, dfy = 0;
        sample_taps_backward(v, h, w, c, fx, fy, gvec.data(), &dv, &dfx, &dfy);
        doff.at(oy, ox, 2 * k) += dfx;
        doff.at(oy, ox, 2 * k + 1) += dfy;
      }
    }
  }
}

template <typename T>
Tensor<T> pairwise_neg_sqdist(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.ndim() == 2 && b.ndim() == 2,
          "pairwise_neg_sqdist: operands must be [M,C] and [N,C]");
  require(a.extent(1) == b.extent(1),
          "pairwise_neg_sqdist: key channel extents do not match");
  const int m = a.extent(0), n = b.extent(0), c = a.extent(1);
  Tensor<T> s({m, n});
  std::vector<T> bn(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    T acc = 0;
    const T* bp = &b.at(j, 0);
    for (int k = 0; k < c; ++k) acc += bp[k] * bp[k];
    bn[static_cast<size_t>(j)] = acc;
  }
  for (int i = 0; i < m; ++i) {
    const T* ap = &a.at(i, 0);
    T an = 0;
    for (int k = 0; k < c; ++k) an += ap[k] * ap[k];
    T* sp = &s.at(i, 0);
    for (int j = 0; j < n; ++j) sp[j] = -an - bn[static_cast<size_t>(j)];
    for (int k = 0; k < c; ++k) {
      const T av = T(2) * ap[k];
      if (av == T(0)) continue;
      const T* bp = b.data() + k;
      for (int j = 0; j < n; ++j) sp[j] += av * bp[static_cast<size_t>(j) * c];
    }
  }
  check_finite(s, "pairwise_neg_sqdist");
  return s;
}

template <typename T>
void pairwise_neg_sqdist_backward(const Tensor<T>& a, const Tensor<T>& b,
                                  const Tensor<T>& ds, Tensor<T>& da,
                                  Tensor<T>& db) {
  const int m = a.extent(0), n = b.extent(0), c = a.extent(1);
  da = Tensor<T>(a.shape());
  db = Tensor<T>(b.shape());
  // dS/da_m = -2 * sum_n ds[m,n] * (a_m - b_n), symmetric for b.
  for (int i = 0; i < m; ++i) {
    const T* ap = &a.at(i, 0);
    const T* dsp = &ds.at(i, 0);
    T* dap = &da.at(i, 0);
    for (int j = 0; j < n; ++j) {
      const T g = dsp[j];
      if (g == T(0)) continue;
      const T* bp = &b.at(j, 0);
      T* dbp = &db.at(j, 0);
      for (int k = 0; k < c; ++k) {
        const T diff = ap[k] - bp[k];
        dap[k] -= T(2) * g * diff;
        dbp[k] += T(2) * g * diff;
      }
    }
  }
}

#define SRNET_INSTANTIATE_OPS(T)                                               \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, int, int); \
  template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,        \
                                   const Tensor<T>&, int, int, Tensor<T>&,    \
                                   Tensor<T>&);                               \
  template Tensor<T> depthwise_conv2d<T>(const Tensor<T>&, const Tensor<T>&,  \
                                         int, int);                           \
  template void depthwise_conv2d_backward<T>(                                 \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int,         \
      Tensor<T>&, Tensor<T>&);                                                \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> transpose2d<T>(const Tensor<T>&);                        \
  template Tensor<T> softmax<T>(const Tensor<T>&, int);                       \
  template Tensor<T> softmax_backward<T>(const Tensor<T>&, const Tensor<T>&,  \
                                         int);                                \
  template Tensor<T> avg_pool2d<T>(const Tensor<T>&, int);                    \
  template Tensor<T> avg_pool2d_backward<T>(const Tensor<T>&, int, int, int); \
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                    \
  template Tensor<T> channel_mean<T>(const Tensor<T>&);                       \
  template std::pair<Tensor<T>, std::vector<int>> channel_max<T>(             \
      const Tensor<T>&);                                                      \
  template Tensor<T> bilinear_upsample<T>(const Tensor<T>&, int, int);        \
  template Tensor<T> bilinear_upsample_backward<T>(const Tensor<T>&, int,     \
                                                   int);                      \
  template Tensor<T> bilinear_sample<T>(const Tensor<T>&, const Tensor<T>&);  \
  template void bilinear_sample_backward<T>(const Tensor<T>&,                 \
                                            const Tensor<T>&,                 \
                                            const Tensor<T>&, Tensor<T>&,     \
                                            Tensor<T>&);                      \
  template Tensor<T> deform_conv<T>(const Tensor<T>&, const Tensor<T>&,       \
                                    const Tensor<T>&, const Tensor<T>&);      \
  template void deform_conv_backward<T>(                                      \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
      const Tensor<T>&, Tensor<T>&, Tensor<T>&, Tensor<T>&, Tensor<T>&);      \
  template Tensor<T> pairwise_neg_sqdist<T>(const Tensor<T>&,                 \
                                            const Tensor<T>&);               \
  template void pairwise_neg_sqdist_backward<T>(const Tensor<T>&,             \
                                                const Tensor<T>&,             \
                                                const Tensor<T>&, Tensor<T>&, \
                                                Tensor<T>&);

SRNET_INSTANTIATE_OPS(float)
SRNET_INSTANTIATE_OPS(double)

#undef SRNET_INSTANTIATE_OPS

}  // namespace srnet::ops
