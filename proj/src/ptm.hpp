#pragma once

#include <vector>

#include "nn.hpp"

// Prototype-level matching: a per-object prototype summarized from global
// memory values, fused pixel features, and alternating prototype/pixel
// refinement through single-query cross-attention.
namespace srnet::ptm {

template <typename T>
using Var = ad::Var<T>;

struct PtmConfig {
  int rounds = 3;
  // Gate and query with the initial prototype G_0 instead of the latest one
  // (the literal one-shot reading of the update equations).
  bool gate_with_initial = false;
};

// hw is the fixed feature resolution the position embedding is trained at.
template <typename T>
void register_ptm(ParamSet<T>& set, int cv, int hw);

// Weighted mean of MLP-transformed memory values over all memory pixels.
// vg_flat: [M,Cv], M >= 1. The 1-dim weight head is squashed through
// softplus + 1e-6 so the combination stays convex. Returns [1,Cv].
template <typename T>
Var<T> init_prototype(Var<T> vg_flat, ParamVars<T>& pv);

// Eq-level fusion of memory and local features: 1x1 projection of the
// concatenation, two residual blocks, then channel and spatial attention.
template <typename T>
Var<T> fuse(Var<T> f_mem, Var<T> f_loc, ParamVars<T>& pv);

template <typename T>
struct PrototypeUpdate {
  Var<T> next;       // [1,Cv]
  Var<T> attention;  // [1,H*W], rows sum to 1
};

// Single-query cross-attention of the prototype over all pixels; the
// attended vector is gated by the prototype and passed through a 2-layer MLP.
template <typename T>
PrototypeUpdate<T> update_prototype(Var<T> g_cur, Var<T> g_init,
                                    Var<T> f_flat, ParamVars<T>& pv,
                                    const PtmConfig& cfg);

// Pixel activation: broadcast the prototype over the map, gate, then a
// two-conv + channel-attention activation network.
template <typename T>
Var<T> activate_pixels(Var<T> g, Var<T> f, ParamVars<T>& pv);

template <typename T>
struct PtmResult {
  Var<T> f_pro;
  std::vector<Var<T>> attentions;  // one [1,H*W] row per round
};

// Full module: init, fuse, then `rounds` update/activate alternations.
// vg_flat holds the prototype source pixels (global memory values, or the
// reference frame's values before any global memory exists).
template <typename T>
PtmResult<T> run_ptm(Var<T> f_mem, Var<T> f_loc, Var<T> vg_flat,
                     ParamVars<T>& pv, const PtmConfig& cfg);

}  // namespace srnet::ptm
