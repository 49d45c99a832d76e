#include "ptm.hpp"

#include <cmath>

namespace srnet::ptm {

namespace {
constexpr double kWeightEps = 1e-6;
}

template <typename T>
void register_ptm(ParamSet<T>& set, int cv, int hw) {
  nn::register_mlp(set, "ptm.init.f", cv, cv, cv);
  nn::register_mlp(set, "ptm.init.w", cv, cv, 1);
  nn::register_conv(set, "ptm.fuse.proj", 1, 1, 2 * cv, cv);
  nn::register_resblock(set, "ptm.fuse.res1", cv);
  nn::register_resblock(set, "ptm.fuse.res2", cv);
  nn::register_channel_attention(set, "ptm.fuse.ca", cv);
  nn::register_spatial_attention(set, "ptm.fuse.sa");
  set.add("ptm.attn.wq", {cv, cv}, Init::kaiming(cv));
  set.add("ptm.attn.wk", {cv, cv}, Init::kaiming(cv));
  set.add("ptm.attn.wv", {cv, cv}, Init::kaiming(cv));
  set.add("ptm.attn.pk", {hw, cv}, Init::zeros());
  nn::register_mlp(set, "ptm.attn.mlp", cv, cv, cv);
  nn::register_conv(set, "ptm.act.c1", 3, 3, cv, cv);
  nn::register_conv(set, "ptm.act.c2", 3, 3, cv, cv);
  nn::register_channel_attention(set, "ptm.act.ca", cv);
}

template <typename T>
Var<T> init_prototype(Var<T> vg_flat, ParamVars<T>& pv) {
  if (vg_flat.val().ndim() != 2)
    fail(ErrorCode::invalid_argument, "init_prototype: values must be [M,Cv]");
  const int m = vg_flat.val().extent(0);
  if (m < 1)
    fail(ErrorCode::invalid_argument,
         "init_prototype: needs at least one memory pixel");
  Var<T> transformed = nn::mlp(vg_flat, pv, "ptm.init.f");  // [M,Cv]
  Var<T> w_raw = nn::mlp(vg_flat, pv, "ptm.init.w");        // [M,1]
  Var<T> w = ad::softplus(w_raw);
  Var<T> eps = vg_flat.tape->leaf(
      Tensor<T>::full({1, 1}, static_cast<T>(kWeightEps)));
  w = ad::add(w, eps);
  Var<T> num = ad::matmul(ad::transpose(w), transformed);  // [1,Cv]
  Var<T> den = ad::reshape(ad::sum_all(w), {1, 1});
  return ad::mul(num, ad::reciprocal(den));
}

template <typename T>
Var<T> fuse(Var<T> f_mem, Var<T> f_loc, ParamVars<T>& pv) {
  if (!(f_mem.val().shape() == f_loc.val().shape()))
    fail(ErrorCode::invalid_argument, "fuse: feature shapes differ");
  Var<T> x = ad::concat_ch(f_mem, f_loc);
  x = nn::conv_bias(x, pv, "ptm.fuse.proj", 1, 0);
  x = nn::resblock(x, pv, "ptm.fuse.res1");
  x = nn::resblock(x, pv, "ptm.fuse.res2");
  x = nn::channel_attention(x, pv, "ptm.fuse.ca");
  x = nn::spatial_attention(x, pv, "ptm.fuse.sa");
  return x;
}

template <typename T>
PrototypeUpdate<T> update_prototype(Var<T> g_cur, Var<T> g_init,
                                    Var<T> f_flat, ParamVars<T>& pv,
                                    const PtmConfig& cfg) {
  const int cv = g_cur.val().extent(1);
  Var<T> pk = pv["ptm.attn.pk"];
  if (pk.val().extent(0) != f_flat.val().extent(0))
    fail(ErrorCode::invalid_argument,
         "update_prototype: position embedding is bound to " +
             std::to_string(pk.val().extent(0)) + " pixels, got " +
             std::to_string(f_flat.val().extent(0)));
  Var<T> g_src = cfg.gate_with_initial ? g_init : g_cur;
  Var<T> q = ad::matmul(g_src, pv["ptm.attn.wq"]);    // [1,Cv]
  Var<T> k = ad::matmul(f_flat, pv["ptm.attn.wk"]);   // [HW,Cv]
  Var<T> v = ad::matmul(f_flat, pv["ptm.attn.wv"]);   // [HW,Cv]
  k = ad::add(k, pk);
  Var<T> scores = ad::matmul(q, ad::transpose(k));    // [1,HW]
  scores = ad::scale(scores, 1.0 / std::sqrt(static_cast<double>(cv)));
  Var<T> attn = ad::softmax(scores, 1);
  Var<T> attended = ad::matmul(attn, v);              // [1,Cv]
  Var<T> gated = ad::mul(attended, g_src);
  Var<T> next = nn::mlp(gated, pv, "ptm.attn.mlp");
  return {next, attn};
}

template <typename T>
Var<T> activate_pixels(Var<T> g, Var<T> f, ParamVars<T>& pv) {
  const int cv = f.val().extent(2);
  Var<T> gate = ad::reshape(g, {1, 1, cv});
  Var<T> x = ad::mul(f, gate);
  x = nn::conv_bias(x, pv, "ptm.act.c1", 1, 1);
  x = ad::relu(x);
  x = nn::conv_bias(x, pv, "ptm.act.c2", 1, 1);
  x = nn::channel_attention(x, pv, "ptm.act.ca");
  return x;
}

template <typename T>
PtmResult<T> run_ptm(Var<T> f_mem, Var<T> f_loc, Var<T> vg_flat,
                     ParamVars<T>& pv, const PtmConfig& cfg) {
  if (cfg.rounds < 1)
    fail(ErrorCode::invalid_argument, "run_ptm: rounds must be >= 1");
  const int h = f_mem.val().extent(0), w = f_mem.val().extent(1);
  const int cv = f_mem.val().extent(2);
  Var<T> g0 = init_prototype(vg_flat, pv);
  Var<T> f = fuse(f_mem, f_loc, pv);
  Var<T> g = g0;
  PtmResult<T> result;
  for (int n = 0; n < cfg.rounds; ++n) {
    Var<T> f_flat = ad::reshape(f, {h * w, cv});
    PrototypeUpdate<T> up = update_prototype(g, g0, f_flat, pv, cfg);
    g = up.next;
    result.attentions.push_back(up.attention);
    f = activate_pixels(cfg.gate_with_initial ? g0 : g, f, pv);
  }
  result.f_pro = f;
  return result;
}

#define SRNET_INSTANTIATE_PTM(T)                                             \
  template void register_ptm<T>(ParamSet<T>&, int, int);                     \
  template Var<T> init_prototype<T>(Var<T>, ParamVars<T>&);                  \
  template Var<T> fuse<T>(Var<T>, Var<T>, ParamVars<T>&);                    \
  template PrototypeUpdate<T> update_prototype<T>(Var<T>, Var<T>, Var<T>,    \
                                                  ParamVars<T>&,             \
                                                  const PtmConfig&);         \
  template Var<T> activate_pixels<T>(Var<T>, Var<T>, ParamVars<T>&);         \
  template PtmResult<T> run_ptm<T>(Var<T>, Var<T>, Var<T>, ParamVars<T>&,    \
                                   const PtmConfig&);

SRNET_INSTANTIATE_PTM(float)
SRNET_INSTANTIATE_PTM(double)

#undef SRNET_INSTANTIATE_PTM

}  // namespace srnet::ptm
