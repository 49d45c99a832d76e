#pragma once

#include "autodiff.hpp"
#include "tensor.hpp"

// Space-time correspondence matching: negative squared L2 similarity between
// memory and query keys, a column-wise softmax over the memory axis, and the
// weighted readout of memory values.
namespace srnet {

// Column j is a distribution over the (T-1)*H*W memory pixels.
template <typename T>
struct AffinityMatrix {
  Tensor<T> weights;  // [(T-1)*H*W, H*W]
};

// kg: [T-1,H,W,Ck] or [M,Ck]; kq: [H,W,Ck] or [N,Ck]. Result [M,N].
template <typename T>
Tensor<T> similarity(const Tensor<T>& kg, const Tensor<T>& kq);

template <typename T>
AffinityMatrix<T> affinity(const Tensor<T>& kg, const Tensor<T>& kq);

// F_mem[j] = sum_i W(i,j) * vg[i]; vg: [T-1,H,W,Cv] or [M,Cv].
// Returns [H,W,Cv] when vg carries spatial extents, else [N,Cv].
template <typename T>
Tensor<T> readout(const AffinityMatrix<T>& w, const Tensor<T>& vg, int h,
                  int w_out);

// Taped composition of the full path; kg/vg flat [M,C], kq [N,Ck].
template <typename T>
ad::Var<T> affinity_readout(ad::Var<T> kg_flat, ad::Var<T> kq_flat,
                            ad::Var<T> vg_flat);

// [T,H,W,C] or [H,W,C] -> [T*H*W, C]
template <typename T>
Tensor<T> flatten_pixels(const Tensor<T>& t);

template <typename T>
ad::Var<T> flatten_pixels(ad::Var<T> t);

}  // namespace srnet
