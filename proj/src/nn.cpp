#include "nn.hpp"

namespace srnet::nn {

using ad::Var;

template <typename T>
void register_mlp(ParamSet<T>& set, const std::string& prefix, int cin,
                  int hidden, int cout, bool zero_init) {
  const Init w1 = zero_init ? Init::zeros() : Init::kaiming(cin);
  const Init w2 = zero_init ? Init::zeros() : Init::kaiming(hidden);
  set.add(prefix + ".w1", {cin, hidden}, w1);
  set.add(prefix + ".b1", {hidden}, Init::zeros());
  set.add(prefix + ".w2", {hidden, cout}, w2);
  set.add(prefix + ".b2", {cout}, Init::zeros());
}

template <typename T>
Var<T> mlp(Var<T> x, ParamVars<T>& pv, const std::string& prefix) {
  const Shape in_shape = x.val().shape();
  const int cin = in_shape.back();
  const int64_t positions = x.val().numel() / cin;
  Var<T> flat = ad::reshape(x, {static_cast<int>(positions), cin});
  Var<T> w1 = pv[prefix + ".w1"];
  const int hidden = w1.val().extent(1);
  Var<T> h = ad::matmul(flat, w1);
  h = ad::add(h, ad::reshape(pv[prefix + ".b1"], {1, hidden}));
  h = ad::relu(h);
  Var<T> w2 = pv[prefix + ".w2"];
  const int cout = w2.val().extent(1);
  Var<T> y = ad::matmul(h, w2);
  y = ad::add(y, ad::reshape(pv[prefix + ".b2"], {1, cout}));
  Shape out_shape = in_shape;
  out_shape.back() = cout;
  return ad::reshape(y, out_shape);
}

template <typename T>
void register_conv(ParamSet<T>& set, const std::string& prefix, int kh, int kw,
                   int cin, int cout, bool zero_init) {
  const Init w = zero_init ? Init::zeros() : Init::kaiming(kh * kw * cin);
  set.add(prefix + ".w", {kh, kw, cin, cout}, w);
  set.add(prefix + ".b", {cout}, Init::zeros());
}

template <typename T>
Var<T> conv_bias(Var<T> x, ParamVars<T>& pv, const std::string& prefix,
                 int stride, int pad) {
  Var<T> w = pv[prefix + ".w"];
  const int cout = w.val().extent(3);
  Var<T> y = ad::conv2d(x, w, stride, pad);
  return ad::add(y, ad::reshape(pv[prefix + ".b"], {1, 1, cout}));
}

template <typename T>
void register_resblock(ParamSet<T>& set, const std::string& prefix, int c) {
  register_conv(set, prefix + ".c1", 3, 3, c, c);
  register_conv(set, prefix + ".c2", 3, 3, c, c);
}

template <typename T>
Var<T> resblock(Var<T> x, ParamVars<T>& pv, const std::string& prefix) {
  Var<T> h = conv_bias(x, pv, prefix + ".c1", 1, 1);
  h = ad::relu(h);
  h = conv_bias(h, pv, prefix + ".c2", 1, 1);
  return ad::add(x, h);
}

template <typename T>
void register_channel_attention(ParamSet<T>& set, const std::string& prefix,
                                int c) {
  const int hidden = std::max(c / 4, 1);
  register_mlp(set, prefix, c, hidden, c);
}

template <typename T>
Var<T> channel_attention(Var<T> x, ParamVars<T>& pv,
                         const std::string& prefix) {
  const int c = x.val().extent(2);
  Var<T> desc = ad::global_avg_pool(x);  // [1,1,C]
  Var<T> gate = mlp(desc, pv, prefix);
  gate = ad::logistic(gate);
  return ad::mul(x, ad::reshape(gate, {1, 1, c}));
}

template <typename T>
void register_spatial_attention(ParamSet<T>& set, const std::string& prefix) {
  register_conv(set, prefix, 7, 7, 2, 1);
}

template <typename T>
Var<T> spatial_attention(Var<T> x, ParamVars<T>& pv,
                         const std::string& prefix) {
  Var<T> pools = ad::concat_ch(ad::channel_max(x), ad::channel_mean(x));
  Var<T> gate = conv_bias(pools, pv, prefix, 1, 3);
  gate = ad::logistic(gate);  // [H,W,1]
  return ad::mul(x, gate);
}

template <typename T>
void register_separable_conv(ParamSet<T>& set, const std::string& prefix,
                             int cin, int cout, bool zero_init) {
  const Init dw = zero_init ? Init::zeros() : Init::kaiming(9);
  const Init pw = zero_init ? Init::zeros() : Init::kaiming(cin);
  set.add(prefix + ".dw", {3, 3, cin}, dw);
  set.add(prefix + ".pw", {1, 1, cin, cout}, pw);
  set.add(prefix + ".pb", {cout}, Init::zeros());
}

template <typename T>
Var<T> separable_conv(Var<T> x, ParamVars<T>& pv, const std::string& prefix) {
  Var<T> h = ad::depthwise_conv2d(x, pv[prefix + ".dw"], 1, 1);
  Var<T> pw = pv[prefix + ".pw"];
  const int cout = pw.val().extent(3);
  Var<T> y = ad::conv2d(h, pw, 1, 0);
  return ad::add(y, ad::reshape(pv[prefix + ".pb"], {1, 1, cout}));
}

#define SRNET_INSTANTIATE_NN(T)                                                \
  template void register_mlp<T>(ParamSet<T>&, const std::string&, int, int,   \
                                int, bool);                                    \
  template Var<T> mlp<T>(Var<T>, ParamVars<T>&, const std::string&);           \
  template void register_conv<T>(ParamSet<T>&, const std::string&, int, int,  \
                                 int, int, bool);                              \
  template Var<T> conv_bias<T>(Var<T>, ParamVars<T>&, const std::string&, int, \
                               int);                                           \
  template void register_resblock<T>(ParamSet<T>&, const std::string&, int);   \
  template Var<T> resblock<T>(Var<T>, ParamVars<T>&, const std::string&);      \
  template void register_channel_attention<T>(ParamSet<T>&,                    \
                                              const std::string&, int);        \
  template Var<T> channel_attention<T>(Var<T>, ParamVars<T>&,                  \
                                       const std::string&);                    \
  template void register_spatial_attention<T>(ParamSet<T>&,                    \
                                              const std::string&);             \
  template Var<T> spatial_attention<T>(Var<T>, ParamVars<T>&,                  \
                                       const std::string&);                    \
  template void register_separable_conv<T>(ParamSet<T>&, const std::string&,   \
                                           int, int, bool);                    \
  template Var<T> separable_conv<T>(Var<T>, ParamVars<T>&, const std::string&);

SRNET_INSTANTIATE_NN(float)
SRNET_INSTANTIATE_NN(double)

#undef SRNET_INSTANTIATE_NN

}  // namespace srnet::nn
