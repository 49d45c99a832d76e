#pragma once

#include <string>

#include "autodiff.hpp"
#include "params.hpp"

// Small trainable blocks shared by the modules: per-position MLP, biased
// convolutions, residual blocks, channel and spatial attention. Each block
// has a register_* companion that declares its parameters with their init
// specs; parameter names are "<prefix>.<leaf>".
namespace srnet::nn {

template <typename T>
using Var = ad::Var<T>;

// Two affine layers with a ReLU between, applied at every position of
// x[...,Cin]. Parameters: w1 [Cin,H], b1 [H], w2 [H,Cout], b2 [Cout].
template <typename T>
void register_mlp(ParamSet<T>& set, const std::string& prefix, int cin,
                  int hidden, int cout, bool zero_init = false);

template <typename T>
Var<T> mlp(Var<T> x, ParamVars<T>& pv, const std::string& prefix);

// kh x kw convolution with bias. Parameters: w [kh,kw,Cin,Cout], b [Cout].
template <typename T>
void register_conv(ParamSet<T>& set, const std::string& prefix, int kh, int kw,
                   int cin, int cout, bool zero_init = false);

template <typename T>
Var<T> conv_bias(Var<T> x, ParamVars<T>& pv, const std::string& prefix,
                 int stride, int pad);

// conv-ReLU-conv with identity skip, 3x3 kernels. Parameters: c1.*, c2.*.
template <typename T>
void register_resblock(ParamSet<T>& set, const std::string& prefix, int c);

template <typename T>
Var<T> resblock(Var<T> x, ParamVars<T>& pv, const std::string& prefix);

// Per-channel gate in (0,1) from the global-average-pooled descriptor through
// a 2-layer MLP and a logistic squash; zero weights give gate 0.5.
template <typename T>
void register_channel_attention(ParamSet<T>& set, const std::string& prefix,
                                int c);

template <typename T>
Var<T> channel_attention(Var<T> x, ParamVars<T>& pv, const std::string& prefix);

// Per-pixel gate from a 7x7 conv over the [max,mean] channel pools.
template <typename T>
void register_spatial_attention(ParamSet<T>& set, const std::string& prefix);

template <typename T>
Var<T> spatial_attention(Var<T> x, ParamVars<T>& pv, const std::string& prefix);

// Depthwise 3x3 followed by a pointwise 1x1 projection. Parameters:
// dw [3,3,Cin], pw [1,1,Cin,Cout], pb [Cout].
template <typename T>
void register_separable_conv(ParamSet<T>& set, const std::string& prefix,
                             int cin, int cout, bool zero_init = false);

template <typename T>
Var<T> separable_conv(Var<T> x, ParamVars<T>& pv, const std::string& prefix);

}  // namespace srnet::nn
