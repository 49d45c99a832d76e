#pragma once

#include <utility>

#include "nn.hpp"

// Feature alignment: offsets predicted from the query/local keys drive a
// bilinear resample of the local memory value into an auxiliary-frame value,
// which a modulated deformable convolution then refines into the local
// feature.
namespace srnet::fam {

template <typename T>
using Var = ad::Var<T>;

// Normalized sampling positions, (-1,-1) top-left to (+1,+1) bottom-right,
// linearly spaced on the g-times downsampled grid.
template <typename T>
struct SamplingGrid {
  Tensor<T> points;  // [H/g, W/g, 2] as (x,y)
  int g = 1;
};

template <typename T>
SamplingGrid<T> make_grid(int h, int w, int g);

struct FamConfig {
  int grid_g = 1;
};

template <typename T>
void register_fam(ParamSet<T>& set, int ck, int cv);

// Offset field on the downsampled grid, zero at init.
template <typename T>
Var<T> predict_offsets(Var<T> kq, Var<T> kl, ParamVars<T>& pv, int g);

// Deformable-convolution parameters from the aligned value and query value:
// raw offsets [H,W,18] and logistic-squashed modulation [H,W,9].
template <typename T>
std::pair<Var<T>, Var<T>> estimate_deform(Var<T> v_aligned, Var<T> vq,
                                          ParamVars<T>& pv);

// Full module: returns F_loc [H,W,Cv].
template <typename T>
Var<T> fam_forward(Var<T> kq, Var<T> kl, Var<T> vl, Var<T> vq,
                   ParamVars<T>& pv, const FamConfig& cfg);

// Intermediate aligned value, exposed for tests and ablation probes.
template <typename T>
Var<T> align_local_value(Var<T> kq, Var<T> kl, Var<T> vl, ParamVars<T>& pv,
                         const FamConfig& cfg);

}  // namespace srnet::fam
