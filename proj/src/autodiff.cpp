#include "autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace srnet::ad {

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad, std::string name) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && recording_;
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Tape<T>::make(Tensor<T> value, const std::vector<int>& parents,
                     BackFn back) {
  Node n;
  n.value = std::move(value);
  if (recording_) {
    for (int p : parents)
      if (nodes_[static_cast<size_t>(p)].requires_grad) {
        n.requires_grad = true;
        break;
      }
  }
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void Tape<T>::add_grad(int id, const Tensor<T>& g) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.has_grad) {
    n.grad = Tensor<T>(n.value.shape());
    n.has_grad = true;
  }
  if (!n.grad.same_shape(g))
    fail(ErrorCode::invalid_argument, "adjoint shape mismatch");
  for (int64_t i = 0; i < g.numel(); ++i) n.grad[i] += g[i];
}

template <typename T>
const Tensor<T>& Tape<T>::grad(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.has_grad) {
    static const Tensor<T> empty;
    return empty;
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!recording_)
    fail(ErrorCode::unsupported,
         "backward: tape was not recording; operation not differentiable here");
  if (loss.tape != this) fail(ErrorCode::invalid_argument, "backward: foreign var");
  const Node& ln = nodes_[static_cast<size_t>(loss.id)];
  if (ln.value.numel() != 1)
    fail(ErrorCode::invalid_argument, "backward: loss must be scalar");
  add_grad(loss.id, Tensor<T>::full(ln.value.shape(), T(1)));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.has_grad && n.requires_grad && n.back) n.back(*this, id);
  }
}

template <typename T>
std::map<std::string, Tensor<T>> Tape<T>::named_grads() const {
  std::map<std::string, Tensor<T>> out;
  for (const Node& n : nodes_) {
    if (n.name.empty() || !n.requires_grad) continue;
    if (n.has_grad)
      out[n.name] = n.grad;
    else
      out[n.name] = Tensor<T>(n.value.shape());
  }
  return out;
}

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b) {
  if (a.size() != b.size())
    fail(ErrorCode::invalid_argument,
         "broadcast: ranks differ, " + shape_to_string(a) + " vs " +
             shape_to_string(b));
  Shape out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i] || a[i] == 1 || b[i] == 1)
      out[i] = std::max(a[i], b[i]);
    else
      fail(ErrorCode::invalid_argument,
           "broadcast: incompatible shapes " + shape_to_string(a) + " vs " +
               shape_to_string(b));
  }
  return out;
}

// Element strides with zeros on broadcast axes.
std::vector<int64_t> broadcast_strides(const Shape& s, const Shape& out) {
  std::vector<int64_t> st(s.size());
  int64_t acc = 1;
  for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
    st[static_cast<size_t>(i)] = (s[static_cast<size_t>(i)] == 1) ? 0 : acc;
    acc *= s[static_cast<size_t>(i)];
  }
  for (size_t i = 0; i < s.size(); ++i)
    if (s[i] == 1 && out[i] != 1) st[i] = 0;
  return st;
}

template <typename T, typename F>
Tensor<T> broadcast_map(const Tensor<T>& a, const Tensor<T>& b, F f) {
  if (a.shape() == b.shape()) {
    Tensor<T> y(a.shape());
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = f(a[i], b[i]);
    return y;
  }
  const Shape out = broadcast_shape(a.shape(), b.shape());
  const auto sa = broadcast_strides(a.shape(), out);
  const auto sb = broadcast_strides(b.shape(), out);
  Tensor<T> y(out);
  const int rank = static_cast<int>(out.size());
  std::vector<int> idx(static_cast<size_t>(rank), 0);
  for (int64_t i = 0; i < y.numel(); ++i) {
    int64_t ia = 0, ib = 0;
    for (int d = 0; d < rank; ++d) {
      ia += idx[static_cast<size_t>(d)] * sa[static_cast<size_t>(d)];
      ib += idx[static_cast<size_t>(d)] * sb[static_cast<size_t>(d)];
    }
    y[i] = f(a[ia], b[ib]);
    for (int d = rank - 1; d >= 0; --d) {
      if (++idx[static_cast<size_t>(d)] < out[static_cast<size_t>(d)]) break;
      idx[static_cast<size_t>(d)] = 0;
    }
  }
  return y;
}

// Sum-reduce g over the axes where target has extent 1.
template <typename T>
Tensor<T> reduce_to(const Tensor<T>& g, const Shape& target) {
  if (g.shape() == target) return g;
  const auto st = broadcast_strides(target, g.shape());
  Tensor<T> out(target);
  const int rank = static_cast<int>(g.ndim());
  std::vector<int> idx(static_cast<size_t>(rank), 0);
  for (int64_t i = 0; i < g.numel(); ++i) {
    int64_t io = 0;
    for (int d = 0; d < rank; ++d)
      io += idx[static_cast<size_t>(d)] * st[static_cast<size_t>(d)];
    out[io] += g[i];
    for (int d = rank - 1; d >= 0; --d) {
      if (++idx[static_cast<size_t>(d)] < g.extent(d)) break;
      idx[static_cast<size_t>(d)] = 0;
    }
  }
  return out;
}

template <typename T>
void check_same_tape(Var<T> a, Var<T> b) {
  if (a.tape != b.tape)
    fail(ErrorCode::invalid_argument, "operands recorded on different tapes");
}

template <typename T>
T stable_logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T stable_softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  Tensor<T> y = broadcast_map(a.val(), b.val(), [](T u, T v) { return u + v; });
  const Shape as = a.val().shape(), bs = b.val().shape();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(y), {ia, ib}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ia)) t.add_grad(ia, reduce_to(g, as));
    if (t.requires_grad(ib)) t.add_grad(ib, reduce_to(g, bs));
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  Tensor<T> y = broadcast_map(a.val(), b.val(), [](T u, T v) { return u - v; });
  const Shape as = a.val().shape(), bs = b.val().shape();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(y), {ia, ib}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ia)) t.add_grad(ia, reduce_to(g, as));
    if (t.requires_grad(ib)) {
      Tensor<T> gn(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) gn[i] = -g[i];
      t.add_grad(ib, reduce_to(gn, bs));
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  Tensor<T> y = broadcast_map(a.val(), b.val(), [](T u, T v) { return u * v; });
  const Shape as = a.val().shape(), bs = b.val().shape();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(y), {ia, ib}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor<T> gb = broadcast_map(g, t.value(ib), [](T u, T v) { return u * v; });
      t.add_grad(ia, reduce_to(gb, as));
    }
    if (t.requires_grad(ib)) {
      Tensor<T> ga = broadcast_map(g, t.value(ia), [](T u, T v) { return u * v; });
      t.add_grad(ib, reduce_to(ga, bs));
    }
  });
}

template <typename T>
Var<T> neg(Var<T> a) {
  Tensor<T> y(a.val().shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = -a.val()[i];
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> d(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) d[i] = -g[i];
    t.add_grad(ia, d);
  });
}

template <typename T>
Var<T> scale(Var<T> a, double s) {
  const T sv = static_cast<T>(s);
  Tensor<T> y(a.val().shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = a.val()[i] * sv;
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> d(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) d[i] = g[i] * sv;
    t.add_grad(ia, d);
  });
}

template <typename T>
Var<T> relu(Var<T> a) {
  Tensor<T> y(a.val().shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = std::max(a.val()[i], T(0));
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(ia);
    Tensor<T> d(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) d[i] = x[i] > T(0) ? g[i] : T(0);
    t.add_grad(ia, d);
  });
}

template <typename T>
Var<T> logistic(Var<T> a) {
  Tensor<T> y(a.val().shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = stable_logistic(a.val()[i]);
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& s = t.value(self);
    Tensor<T> d(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) d[i] = g[i] * s[i] * (T(1) - s[i]);
    t.add_grad(ia, d);
  });
}

template <typename T>
Var<T> softplus(Var<T> a) {
  Tensor<T> y(a.val().shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = stable_softplus(a.val()[i]);
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(ia);
    Tensor<T> d(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) d[i] = g[i] * stable_logistic(x[i]);
    t.add_grad(ia, d);
  });
}

template <typename T>
Var<T> reciprocal(Var<T> a) {
  Tensor<T> y(a.val().shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = T(1) / a.val()[i];
  check_finite(y, "reciprocal");
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& s = t.value(self);
    Tensor<T> d(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) d[i] = -g[i] * s[i] * s[i];
    t.add_grad(ia, d);
  });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  Tensor<T> y = srnet::reshape(a.val(), shape);
  const Shape orig = a.val().shape();
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    t.add_grad(ia, srnet::reshape(t.grad(self), orig));
  });
}

template <typename T>
Var<T> concat_ch(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  const Tensor<T>& av = a.val();
  const Tensor<T>& bv = b.val();
  if (av.ndim() != bv.ndim())
    fail(ErrorCode::invalid_argument, "concat_ch: rank mismatch");
  Shape out = av.shape();
  const int last = av.ndim() - 1;
  for (int d = 0; d < last; ++d)
    if (av.extent(d) != bv.extent(d))
      fail(ErrorCode::invalid_argument, "concat_ch: leading extents differ");
  const int ca = av.extent(last), cb = bv.extent(last);
  out[static_cast<size_t>(last)] = ca + cb;
  const int64_t rows = av.numel() / ca;
  Tensor<T> y(out);
  for (int64_t r = 0; r < rows; ++r) {
    for (int i = 0; i < ca; ++i) y[r * (ca + cb) + i] = av[r * ca + i];
    for (int i = 0; i < cb; ++i) y[r * (ca + cb) + ca + i] = bv[r * cb + i];
  }
  const int ia = a.id, ib = b.id;
  const Shape as = av.shape(), bs = bv.shape();
  return a.tape->make(std::move(y), {ia, ib}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor<T> da(as);
      for (int64_t r = 0; r < rows; ++r)
        for (int i = 0; i < ca; ++i) da[r * ca + i] = g[r * (ca + cb) + i];
      t.add_grad(ia, da);
    }
    if (t.requires_grad(ib)) {
      Tensor<T> db(bs);
      for (int64_t r = 0; r < rows; ++r)
        for (int i = 0; i < cb; ++i) db[r * cb + i] = g[r * (ca + cb) + ca + i];
      t.add_grad(ib, db);
    }
  });
}

template <typename T>
Var<T> stack0(const std::vector<Var<T>>& parts) {
  if (parts.empty())
    fail(ErrorCode::invalid_argument, "stack0: nothing to stack");
  Tape<T>* tape = parts[0].tape;
  const Shape inner = parts[0].val().shape();
  if (inner.size() >= 4)
    fail(ErrorCode::invalid_argument, "stack0: parts must have rank <= 3");
  Shape out;
  out.push_back(static_cast<int>(parts.size()));
  for (int e : inner) out.push_back(e);
  const int64_t block = parts[0].val().numel();
  Tensor<T> y(out);
  std::vector<int> ids;
  for (size_t p = 0; p < parts.size(); ++p) {
    if (parts[p].tape != tape)
      fail(ErrorCode::invalid_argument, "stack0: operands on different tapes");
    if (parts[p].val().shape() != inner)
      fail(ErrorCode::invalid_argument, "stack0: part shapes differ");
    for (int64_t i = 0; i < block; ++i)
      y[static_cast<int64_t>(p) * block + i] = parts[p].val()[i];
    ids.push_back(parts[p].id);
  }
  return tape->make(std::move(y), ids, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    for (size_t p = 0; p < ids.size(); ++p) {
      if (!t.requires_grad(ids[p])) continue;
      Tensor<T> dp(inner);
      for (int64_t i = 0; i < block; ++i)
        dp[i] = g[static_cast<int64_t>(p) * block + i];
      t.add_grad(ids[p], dp);
    }
  });
}

template <typename T>
Var<T> sum_all(Var<T> a) {
  T s = 0;
  for (int64_t i = 0; i < a.val().numel(); ++i) s += a.val()[i];
  const int ia = a.id;
  const Shape as = a.val().shape();
  return a.tape->make(Tensor<T>({1}, {s}), {ia}, [=](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    t.add_grad(ia, Tensor<T>::full(as, g));
  });
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  Tensor<T> y = ops::matmul(a.val(), b.val());
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(y), {ia, ib}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(ia))
      t.add_grad(ia, ops::matmul(g, ops::transpose2d(t.value(ib))));
    if (t.requires_grad(ib))
      t.add_grad(ib, ops::matmul(ops::transpose2d(t.value(ia)), g));
  });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  Tensor<T> y = ops::transpose2d(a.val());
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    t.add_grad(ia, ops::transpose2d(t.grad(self)));
  });
}

template <typename T>
Var<T> softmax(Var<T> a, int axis) {
  Tensor<T> y = ops::softmax(a.val(), axis);
  const int ia = a.id;
  return a.tape->make(std::move(y), {ia}, [=](Tape<T>& t, int self) {
    t.add_grad(ia, ops::softmax_backward(t.value(self), t.grad(self), axis));
  });
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, int stride, int pad) {
  check_same_tape(x, kernel);
  Tensor<T> y = ops::conv2d(x.val(), kernel.val(), stride, pad);
  const int ix = x.id, ik = kernel.id;
  return x.tape->make(std::move(y), {ix, ik}, [=](Tape<T>& t, int self) {
    Tensor<T> dx, dk;
    ops::conv2d_backward(t.value(ix), t.value(ik), t.grad(self), stride, pad,
                         dx, dk);
    if (t.requires_grad(ix)) t.add_grad(ix, dx);
    if (t.requires_grad(ik)) t.add_grad(ik, dk);
  });
}

template <typename T>
Var<T> depthwise_conv2d(Var<T> x, Var<T> kernel, int stride, int pad) {
  check_same_tape(x, kernel);
  Tensor<T> y = ops::depthwise_conv2d(x.val(), kernel.val(), stride, pad);
  const int ix = x.id, ik = kernel.id;
  return x.tape->make(std::move(y), {ix, ik}, [=](Tape<T>& t, int self) {
    Tensor<T> dx, dk;
    ops::depthwise_conv2d_backward(t.value(ix), t.value(ik), t.grad(self),
                                   stride, pad, dx, dk);
    if (t.requires_grad(ix)) t.add_grad(ix, dx);
    if (t.requires_grad(ik)) t.add_grad(ik, dk);
  });
}

template <typename T>
Var<T> avg_pool2d(Var<T> x, int g) {
  Tensor<T> y = ops::avg_pool2d(x.val(), g);
  const int ix = x.id;
  const int h = x.val().extent(0), w = x.val().extent(1);
  return x.tape->make(std::move(y), {ix}, [=](Tape<T>& t, int self) {
    t.add_grad(ix, ops::avg_pool2d_backward(t.grad(self), h, w, g));
  });
}

template <typename T>
Var<T> global_avg_pool(Var<T> x) {
  Tensor<T> y = ops::global_avg_pool(x.val());
  const int ix = x.id;
  const int h = x.val().extent(0), w = x.val().extent(1), c = x.val().extent(2);
  return x.tape->make(std::move(y), {ix}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> dx({h, w, c});
    const T sc = T(1) / static_cast<T>(h * w);
    for (int yx = 0; yx < h * w; ++yx)
      for (int ci = 0; ci < c; ++ci)
        dx[static_cast<int64_t>(yx) * c + ci] = g[ci] * sc;
    t.add_grad(ix, dx);
  });
}

template <typename T>
Var<T> channel_mean(Var<T> x) {
  Tensor<T> y = ops::channel_mean(x.val());
  const int ix = x.id;
  const int h = x.val().extent(0), w = x.val().extent(1), c = x.val().extent(2);
  return x.tape->make(std::move(y), {ix}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> dx({h, w, c});
    const T sc = T(1) / static_cast<T>(c);
    for (int yx = 0; yx < h * w; ++yx)
      for (int ci = 0; ci < c; ++ci)
        dx[static_cast<int64_t>(yx) * c + ci] = g[yx] * sc;
    t.add_grad(ix, dx);
  });
}

template <typename T>
Var<T> channel_max(Var<T> x) {
  auto [y, arg] = ops::channel_max(x.val());
  const int ix = x.id;
  const int h = x.val().extent(0), w = x.val().extent(1), c = x.val().extent(2);
  const std::vector<int> argmax = std::move(arg);
  return x.tape->make(std::move(y), {ix}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> dx({h, w, c});
    for (int yx = 0; yx < h * w; ++yx)
      dx[static_cast<int64_t>(yx) * c + argmax[static_cast<size_t>(yx)]] = g[yx];
    t.add_grad(ix, dx);
  });
}

template <typename T>
Var<T> bilinear_upsample(Var<T> x, int h2, int w2) {
  Tensor<T> y = ops::bilinear_upsample(x.val(), h2, w2);
  const int ix = x.id;
  const int h = x.val().extent(0), w = x.val().extent(1);
  return x.tape->make(std::move(y), {ix}, [=](Tape<T>& t, int self) {
    t.add_grad(ix, ops::bilinear_upsample_backward(t.grad(self), h, w));
  });
}

template <typename T>
Var<T> bilinear_sample(Var<T> v, Var<T> coords) {
  check_same_tape(v, coords);
  Tensor<T> y = ops::bilinear_sample(v.val(), coords.val());
  const int iv = v.id, ic = coords.id;
  return v.tape->make(std::move(y), {iv, ic}, [=](Tape<T>& t, int self) {
    Tensor<T> dv, dc;
    ops::bilinear_sample_backward(t.value(iv), t.value(ic), t.grad(self), dv,
                                  dc);
    if (t.requires_grad(iv)) t.add_grad(iv, dv);
    if (t.requires_grad(ic)) t.add_grad(ic, dc);
  });
}

template <typename T>
Var<T> deform_conv(Var<T> v, Var<T> offsets, Var<T> modulation, Var<T> kernel) {
  check_same_tape(v, offsets);
  check_same_tape(v, modulation);
  check_same_tape(v, kernel);
  Tensor<T> y =
      ops::deform_conv(v.val(), offsets.val(), modulation.val(), kernel.val());
  const int iv = v.id, io = offsets.id, im = modulation.id, ik = kernel.id;
  return v.tape->make(std::move(y), {iv, io, im, ik}, [=](Tape<T>& t, int self) {
    Tensor<T> dv, doff, dmod, dk;
    ops::deform_conv_backward(t.value(iv), t.value(io), t.value(im),
                              t.value(ik), t.grad(self), dv, doff, dmod, dk);
    if (t.requires_grad(iv)) t.add_grad(iv, dv);
    if (t.requires_grad(io)) t.add_grad(io, doff);
    if (t.requires_grad(im)) t.add_grad(im, dmod);
    if (t.requires_grad(ik)) t.add_grad(ik, dk);
  });
}

template <typename T>
Var<T> pairwise_neg_sqdist(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  Tensor<T> y = ops::pairwise_neg_sqdist(a.val(), b.val());
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(y), {ia, ib}, [=](Tape<T>& t, int self) {
    Tensor<T> da, db;
    ops::pairwise_neg_sqdist_backward(t.value(ia), t.value(ib), t.grad(self),
                                      da, db);
    if (t.requires_grad(ia)) t.add_grad(ia, da);
    if (t.requires_grad(ib)) t.add_grad(ib, db);
  });
}

template <typename T>
Var<T> logsumexp_ch(Var<T> x) {
  const Tensor<T>& xv = x.val();
  if (xv.ndim() != 3) fail(ErrorCode::invalid_argument, "logsumexp_ch: [H,W,K]");
  const int h = xv.extent(0), w = xv.extent(1), k = xv.extent(2);
  Tensor<T> y({h, w, 1});
  for (int yx = 0; yx < h * w; ++yx) {
    const T* p = xv.data() + static_cast<int64_t>(yx) * k;
    T mx = p[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, p[i]);
    T s = 0;
    for (int i = 0; i < k; ++i) s += std::exp(p[i] - mx);
    y[yx] = mx + std::log(s);
  }
  const int ix = x.id;
  return x.tape->make(std::move(y), {ix}, [=](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& xin = t.value(ix);
    const Tensor<T>& lse = t.value(self);
    Tensor<T> dx(xin.shape());
    for (int yx = 0; yx < h * w; ++yx)
      for (int i = 0; i < k; ++i)
        dx[static_cast<int64_t>(yx) * k + i] =
            g[yx] * std::exp(xin[static_cast<int64_t>(yx) * k + i] - lse[yx]);
    t.add_grad(ix, dx);
  });
}

template <typename T>
Var<T> nll_gather(Var<T> logp, const std::vector<int>& labels) {
  const Tensor<T>& lp = logp.val();
  if (lp.ndim() != 3) fail(ErrorCode::invalid_argument, "nll_gather: [H,W,K]");
  const int h = lp.extent(0), w = lp.extent(1), k = lp.extent(2);
  if (static_cast<int64_t>(labels.size()) != static_cast<int64_t>(h) * w)
    fail(ErrorCode::invalid_argument, "nll_gather: label count mismatch");
  T acc = 0;
  for (int yx = 0; yx < h * w; ++yx) {
    const int lab = labels[static_cast<size_t>(yx)];
    if (lab < 0 || lab >= k)
      fail(ErrorCode::invalid_argument, "nll_gather: label out of range");
    acc -= lp[static_cast<int64_t>(yx) * k + lab];
  }
  acc /= static_cast<T>(h * w);
  const int ix = logp.id;
  const std::vector<int> labs = labels;
  return logp.tape->make(Tensor<T>({1}, {acc}), {ix}, [=](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    Tensor<T> dx({h, w, k});
    const T sc = g / static_cast<T>(h * w);
    for (int yx = 0; yx < h * w; ++yx)
      dx[static_cast<int64_t>(yx) * k + labs[static_cast<size_t>(yx)]] = -sc;
    t.add_grad(ix, dx);
  });
}

#define SRNET_INSTANTIATE_AD(T)                                              \
  template class Tape<T>;                                                    \
  template Var<T> add<T>(Var<T>, Var<T>);                                    \
  template Var<T> sub<T>(Var<T>, Var<T>);                                    \
  template Var<T> mul<T>(Var<T>, Var<T>);                                    \
  template Var<T> neg<T>(Var<T>);                                           \
  template Var<T> scale<T>(Var<T>, double);                                 \
  template Var<T> relu<T>(Var<T>);                                          \
  template Var<T> logistic<T>(Var<T>);                                      \
  template Var<T> softplus<T>(Var<T>);                                      \
  template Var<T> reciprocal<T>(Var<T>);                                    \
  template Var<T> reshape<T>(Var<T>, Shape);                                \
  template Var<T> concat_ch<T>(Var<T>, Var<T>);                             \
  template Var<T> stack0<T>(const std::vector<Var<T>>&);                    \
  template Var<T> sum_all<T>(Var<T>);                                       \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                \
  template Var<T> transpose<T>(Var<T>);                                     \
  template Var<T> softmax<T>(Var<T>, int);                                  \
  template Var<T> conv2d<T>(Var<T>, Var<T>, int, int);                      \
  template Var<T> depthwise_conv2d<T>(Var<T>, Var<T>, int, int);            \
  template Var<T> avg_pool2d<T>(Var<T>, int);                               \
  template Var<T> global_avg_pool<T>(Var<T>);                               \
  template Var<T> channel_mean<T>(Var<T>);                                  \
  template Var<T> channel_max<T>(Var<T>);                                   \
  template Var<T> bilinear_upsample<T>(Var<T>, int, int);                   \
  template Var<T> bilinear_sample<T>(Var<T>, Var<T>);                       \
  template Var<T> deform_conv<T>(Var<T>, Var<T>, Var<T>, Var<T>);           \
  template Var<T> pairwise_neg_sqdist<T>(Var<T>, Var<T>);                   \
  template Var<T> logsumexp_ch<T>(Var<T>);                                  \
  template Var<T> nll_gather<T>(Var<T>, const std::vector<int>&);

SRNET_INSTANTIATE_AD(float)
SRNET_INSTANTIATE_AD(double)

#undef SRNET_INSTANTIATE_AD

}  // namespace srnet::ad
