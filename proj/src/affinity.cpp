#include "affinity.hpp"

#include "ops.hpp"

namespace srnet {

template <typename T>
Tensor<T> flatten_pixels(const Tensor<T>& t) {
  if (t.ndim() == 2) return t;
  const int c = t.extent(t.ndim() - 1);
  return reshape(t, {static_cast<int>(t.numel() / c), c});
}

template <typename T>
ad::Var<T> flatten_pixels(ad::Var<T> t) {
  if (t.val().ndim() == 2) return t;
  const int c = t.val().extent(t.val().ndim() - 1);
  return ad::reshape(t, {static_cast<int>(t.val().numel() / c), c});
}

template <typename T>
Tensor<T> similarity(const Tensor<T>& kg, const Tensor<T>& kq) {
  const Tensor<T> a = flatten_pixels(kg);
  const Tensor<T> b = flatten_pixels(kq);
  if (a.extent(1) != b.extent(1))
    fail(ErrorCode::invalid_argument,
         "similarity: key channel extents differ (" +
             std::to_string(a.extent(1)) + " vs " + std::to_string(b.extent(1)) +
             ")");
  return ops::pairwise_neg_sqdist(a, b);
}

template <typename T>
AffinityMatrix<T> affinity(const Tensor<T>& kg, const Tensor<T>& kq) {
  Tensor<T> s = similarity(kg, kq);
  // normalize over the memory axis (rows) for each query column
  return AffinityMatrix<T>{ops::softmax(s, 0)};
}

template <typename T>
Tensor<T> readout(const AffinityMatrix<T>& w, const Tensor<T>& vg, int h,
                  int w_out) {
  const Tensor<T> values = flatten_pixels(vg);
  if (values.extent(0) != w.weights.extent(0))
    fail(ErrorCode::invalid_argument,
         "readout: affinity rows do not match memory pixel count");
  Tensor<T> f = ops::matmul(ops::transpose2d(w.weights), values);  // [N,Cv]
  if (h > 0 && w_out > 0) return reshape(f, {h, w_out, f.extent(1)});
  return f;
}

template <typename T>
ad::Var<T> affinity_readout(ad::Var<T> kg_flat, ad::Var<T> kq_flat,
                            ad::Var<T> vg_flat) {
  ad::Var<T> s = ad::pairwise_neg_sqdist(kg_flat, kq_flat);
  ad::Var<T> w = ad::softmax(s, 0);
  return ad::matmul(ad::transpose(w), vg_flat);
}

#define SRNET_INSTANTIATE_AFFINITY(T)                                          \
  template Tensor<T> flatten_pixels<T>(const Tensor<T>&);                      \
  template ad::Var<T> flatten_pixels<T>(ad::Var<T>);                           \
  template Tensor<T> similarity<T>(const Tensor<T>&, const Tensor<T>&);        \
  template AffinityMatrix<T> affinity<T>(const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> readout<T>(const AffinityMatrix<T>&, const Tensor<T>&,    \
                                int, int);                                     \
  template ad::Var<T> affinity_readout<T>(ad::Var<T>, ad::Var<T>, ad::Var<T>);

SRNET_INSTANTIATE_AFFINITY(float)
SRNET_INSTANTIATE_AFFINITY(double)

#undef SRNET_INSTANTIATE_AFFINITY

}  // namespace srnet
