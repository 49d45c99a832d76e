#pragma once

#include <utility>
#include <vector>

#include "tensor.hpp"

// Plain dense kernels on row-major tensors. Forward kernels are the single
// source of truth for the math; the *_backward kernels implement the matching
// vector-Jacobian products and are wired into the tape by the autodiff layer.
namespace srnet::ops {

// x: [H,W,Cin], kernel: [kh,kw,Cin,Cout], cross-correlation, zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, int stride,
                 int pad);

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel,
                     const Tensor<T>& dy, int stride, int pad, Tensor<T>& dx,
                     Tensor<T>& dkernel);

// x: [H,W,C], kernel: [kh,kw,C], one filter per channel.
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& kernel,
                           int stride, int pad);

template <typename T>
void depthwise_conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel,
                               const Tensor<T>& dy, int stride, int pad,
                               Tensor<T>& dx, Tensor<T>& dkernel);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);  // [M,K]x[K,N]

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a);

// Numerically stable (max-subtracted) softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy, int axis);

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int g);  // [H,W,C] -> [H/g,W/g,C]

template <typename T>
Tensor<T> avg_pool2d_backward(const Tensor<T>& dy, int h, int w, int g);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);  // [H,W,C] -> [1,1,C]

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x);  // [H,W,C] -> [H,W,1]

// Returns the per-pixel max over channels and the argmax channel per pixel.
template <typename T>
std::pair<Tensor<T>, std::vector<int>> channel_max(const Tensor<T>& x);

// align-corners bilinear resize, [H,W,C] -> [h2,w2,C]. Preserves constants.
template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, int h2, int w2);

template <typename T>
Tensor<T> bilinear_upsample_backward(const Tensor<T>& dy, int h, int w);

// coords: [Ho,Wo,2] normalized (x,y) with (-1,-1) the top-left corner and
// (+1,+1) the bottom-right. Out-of-range taps contribute zero.
template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& v, const Tensor<T>& coords);

template <typename T>
void bilinear_sample_backward(const Tensor<T>& v, const Tensor<T>& coords,
                              const Tensor<T>& dy, Tensor<T>& dv,
                              Tensor<T>& dcoords);

// Modulated deformable 3x3 convolution (DCNv2 semantics), stride 1, pad 1.
// offsets: [H,W,2K] pixel-unit displacements interleaved (dx_k, dy_k) for the
// K=9 kernel points in raster order over base displacements {-1,0,1}^2.
// modulation: [H,W,K]. kernel: [3,3,C,Cout]. Bias-free.
template <typename T>
Tensor<T> deform_conv(const Tensor<T>& v, const Tensor<T>& offsets,
                      const Tensor<T>& modulation, const Tensor<T>& kernel);

template <typename T>
void deform_conv_backward(const Tensor<T>& v, const Tensor<T>& offsets,
                          const Tensor<T>& modulation, const Tensor<T>& kernel,
                          const Tensor<T>& dy, Tensor<T>& dv, Tensor<T>& doff,
                          Tensor<T>& dmod, Tensor<T>& dkernel);

// S[m,n] = -|a_m - b_n|^2, computed in the expanded 2ab - a^2 - b^2 form.
template <typename T>
Tensor<T> pairwise_neg_sqdist(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
void pairwise_neg_sqdist_backward(const Tensor<T>& a, const Tensor<T>& b,
                                  const Tensor<T>& ds, Tensor<T>& da,
                                  Tensor<T>& db);

}  // namespace srnet::ops
