#pragma once

#include <vector>

#include "nn.hpp"

// Desk-scale encoders and decoder: a strided conv trunk producing per-pixel
// key/value descriptors, and a mirror decoder that upsamples the prototype
// feature back to a full-resolution object logit.
namespace srnet::codec {

template <typename T>
using Var = ad::Var<T>;

struct CodecConfig {
  int stride = 4;  // power of two >= 2
  int ck = 64;
  int cv = 256;
};

int trunk_stages(const CodecConfig& cfg);  // log2(stride), validated

template <typename T>
void register_codec(ParamSet<T>& set, const CodecConfig& cfg);

template <typename T>
struct QueryFeatures {
  Var<T> key;    // [H,W,Ck]
  Var<T> value;  // [H,W,Cv]
  Var<T> skip;   // stride-2 trunk feature for the decoder
};

template <typename T>
QueryFeatures<T> encode_query(Var<T> frame, ParamVars<T>& pv,
                              const CodecConfig& cfg);

// frame plus one object's binary mask channel, early-fused at the input.
template <typename T>
std::pair<Var<T>, Var<T>> encode_memory(Var<T> frame, Var<T> mask,
                                        ParamVars<T>& pv,
                                        const CodecConfig& cfg);

// [H,W,Cv] -> full-resolution single-channel logits.
template <typename T>
Var<T> decode(Var<T> f_pro, Var<T> skip, ParamVars<T>& pv,
              const CodecConfig& cfg);

// Per-object logits -> per-pixel log-probabilities [H0,W0,N+1] with the
// background as channel 0: p_bg ~ prod(1 - sigma(l_o)), normalized.
template <typename T>
Var<T> soft_aggregate_logp(const std::vector<Var<T>>& object_logits);

// argmax labels from aggregated log-probabilities.
template <typename T>
std::vector<int> logp_to_labels(const Tensor<T>& logp);

}  // namespace srnet::codec
