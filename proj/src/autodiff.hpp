#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ops.hpp"
#include "tensor.hpp"

// Reverse-mode tape over whole-tensor operations. Each primitive records one
// node whose backward closure pulls the node's adjoint and accumulates into
// its parents. Nodes are append-only, so reverse id order is a topological
// order of the graph.
namespace srnet::ad {

template <typename T>
class Tape;

template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Tensor<T>& val() const;
  bool valid() const { return tape != nullptr && id >= 0; }
};

template <typename T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  Var<T> leaf(Tensor<T> value, bool requires_grad = false,
              std::string name = {});

  // Records an interior node. `back` is dropped when no parent needs a
  // gradient (or when the tape is not recording).
  Var<T> make(Tensor<T> value, const std::vector<int>& parents, BackFn back);

  const Tensor<T>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Adjoint accumulation, used by backward closures.
  void add_grad(int id, const Tensor<T>& g);
  bool has_grad(int id) const { return nodes_[static_cast<size_t>(id)].has_grad; }
  const Tensor<T>& grad(int id) const;
  const Tensor<T>& grad(const Var<T>& v) const { return grad(v.id); }

  // Reverse sweep from a scalar loss node.
  void backward(const Var<T>& loss);

  // Gradients of named leaves, keyed by leaf name.
  std::map<std::string, Tensor<T>> named_grads() const;

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::string name;
    BackFn back;
  };

  std::vector<Node> nodes_;
  bool recording_;
};

template <typename T>
const Tensor<T>& Var<T>::val() const {
  return tape->value(id);
}

// ---- primitives -----------------------------------------------------------

// Elementwise with numpy-style broadcasting (equal rank; each extent equal or
// one). Gradients are sum-reduced over broadcast axes.
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> neg(Var<T> a);
template <typename T>
Var<T> scale(Var<T> a, double s);
template <typename T>
Var<T> relu(Var<T> a);
template <typename T>
Var<T> logistic(Var<T> a);
template <typename T>
Var<T> softplus(Var<T> a);
template <typename T>
Var<T> reciprocal(Var<T> a);

template <typename T>
Var<T> reshape(Var<T> a, Shape shape);

// Last-axis concatenation of two tensors of equal rank and leading extents.
template <typename T>
Var<T> concat_ch(Var<T> a, Var<T> b);

// Stacks equal-shape [.,..] tensors into a new leading axis.
template <typename T>
Var<T> stack0(const std::vector<Var<T>>& parts);

template <typename T>
Var<T> sum_all(Var<T> a);  // -> [1]

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
template <typename T>
Var<T> transpose(Var<T> a);
template <typename T>
Var<T> softmax(Var<T> a, int axis);

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, int stride, int pad);
template <typename T>
Var<T> depthwise_conv2d(Var<T> x, Var<T> kernel, int stride, int pad);

template <typename T>
Var<T> avg_pool2d(Var<T> x, int g);
template <typename T>
Var<T> global_avg_pool(Var<T> x);
template <typename T>
Var<T> channel_mean(Var<T> x);
template <typename T>
Var<T> channel_max(Var<T> x);

template <typename T>
Var<T> bilinear_upsample(Var<T> x, int h2, int w2);

template <typename T>
Var<T> bilinear_sample(Var<T> v, Var<T> coords);

template <typename T>
Var<T> deform_conv(Var<T> v, Var<T> offsets, Var<T> modulation, Var<T> kernel);

template <typename T>
Var<T> pairwise_neg_sqdist(Var<T> a, Var<T> b);

// [H,W,K] -> [H,W,1], stable log-sum-exp over channels.
template <typename T>
Var<T> logsumexp_ch(Var<T> x);

// Mean negative log-likelihood of per-pixel labels under logP: [H,W,K] with
// labels in 0..K-1.
template <typename T>
Var<T> nll_gather(Var<T> logp, const std::vector<int>& labels);

}  // namespace srnet::ad
