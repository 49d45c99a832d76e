#include "codec.hpp"

namespace srnet::codec {

namespace {

std::vector<int> trunk_widths(const CodecConfig& cfg) {
  const int stages = trunk_stages(cfg);
  std::vector<int> w(static_cast<size_t>(stages));
  for (int i = 0; i < stages; ++i)
    w[static_cast<size_t>(i)] = std::max(cfg.cv >> (stages - 1 - i), 4);
  return w;
}

template <typename T>
Var<T> run_trunk(Var<T> x, ParamVars<T>& pv, const std::string& prefix,
                 int stages, Var<T>* skip_out) {
  for (int i = 0; i < stages; ++i) {
    x = nn::conv_bias(x, pv, prefix + ".s" + std::to_string(i), 2, 1);
    x = ad::relu(x);
    if (i == 0 && skip_out) *skip_out = x;
  }
  return x;
}

template <typename T>
void register_trunk(ParamSet<T>& set, const std::string& prefix, int cin,
                    const CodecConfig& cfg) {
  const std::vector<int> widths = trunk_widths(cfg);
  int prev = cin;
  for (size_t i = 0; i < widths.size(); ++i) {
    nn::register_conv(set, prefix + ".s" + std::to_string(i), 3, 3, prev,
                      widths[i]);
    prev = widths[i];
  }
  nn::register_conv(set, prefix + ".key", 1, 1, prev, cfg.ck);
  nn::register_conv(set, prefix + ".val", 1, 1, prev, cfg.cv);
}

}  // namespace

int trunk_stages(const CodecConfig& cfg) {
  int s = cfg.stride, stages = 0;
  while (s > 1 && s % 2 == 0) {
    s /= 2;
    ++stages;
  }
  if (s != 1 || stages < 1)
    fail(ErrorCode::invalid_argument,
         "codec stride must be a power of two >= 2, got " +
             std::to_string(cfg.stride));
  return stages;
}

template <typename T>
void register_codec(ParamSet<T>& set, const CodecConfig& cfg) {
  register_trunk(set, "enc.q", 3, cfg);
  register_trunk(set, "enc.m", 4, cfg);

  const int stages = trunk_stages(cfg);
  const int skipw = trunk_widths(cfg)[0];
  int prev = cfg.cv;
  int cur_stride = cfg.stride;
  for (int i = 0; i < stages; ++i) {
    int cin = prev;
    if (cur_stride == 2) cin += skipw;
    const int cout = std::max(prev / 2, 4);
    nn::register_conv(set, "dec.u" + std::to_string(i), 3, 3, cin, cout);
    prev = cout;
    cur_stride /= 2;
  }
  nn::register_conv(set, "dec.head", 1, 1, prev, 1);
}

template <typename T>
QueryFeatures<T> encode_query(Var<T> frame, ParamVars<T>& pv,
                              const CodecConfig& cfg) {
  const Tensor<T>& f = frame.val();
  if (f.ndim() != 3 || f.extent(2) != 3)
    fail(ErrorCode::invalid_argument, "encode_query: frame must be [H,W,3]");
  if (f.extent(0) % cfg.stride != 0 || f.extent(1) % cfg.stride != 0)
    fail(ErrorCode::invalid_argument,
         "encode_query: frame extents must be divisible by stride " +
             std::to_string(cfg.stride));
  QueryFeatures<T> out;
  Var<T> x = run_trunk(frame, pv, "enc.q", trunk_stages(cfg), &out.skip);
  out.key = nn::conv_bias(x, pv, "enc.q.key", 1, 0);
  out.value = nn::conv_bias(x, pv, "enc.q.val", 1, 0);
  return out;
}

template <typename T>
std::pair<Var<T>, Var<T>> encode_memory(Var<T> frame, Var<T> mask,
                                        ParamVars<T>& pv,
                                        const CodecConfig& cfg) {
  const Tensor<T>& f = frame.val();
  const Tensor<T>& m = mask.val();
  if (m.ndim() != 3 || m.extent(2) != 1)
    fail(ErrorCode::invalid_argument, "encode_memory: mask must be [H,W,1]");
  if (m.extent(0) != f.extent(0) || m.extent(1) != f.extent(1))
    fail(ErrorCode::invalid_argument,
         "encode_memory: mask extents do not match frame");
  if (f.extent(0) % cfg.stride != 0 || f.extent(1) % cfg.stride != 0)
    fail(ErrorCode::invalid_argument,
         "encode_memory: frame extents must be divisible by stride " +
             std::to_string(cfg.stride));
  Var<T> x = ad::concat_ch(frame, mask);
  x = run_trunk(x, pv, "enc.m", trunk_stages(cfg), static_cast<Var<T>*>(nullptr));
  Var<T> key = nn::conv_bias(x, pv, "enc.m.key", 1, 0);
  Var<T> value = nn::conv_bias(x, pv, "enc.m.val", 1, 0);
  return {key, value};
}

template <typename T>
Var<T> decode(Var<T> f_pro, Var<T> skip, ParamVars<T>& pv,
              const CodecConfig& cfg) {
  const int stages = trunk_stages(cfg);
  Var<T> x = f_pro;
  int cur_stride = cfg.stride;
  for (int i = 0; i < stages; ++i) {
    if (cur_stride == 2) x = ad::concat_ch(x, skip);
    x = ad::bilinear_upsample(x, x.val().extent(0) * 2, x.val().extent(1) * 2);
    x = nn::conv_bias(x, pv, "dec.u" + std::to_string(i), 1, 1);
    x = ad::relu(x);
    cur_stride /= 2;
  }
  return nn::conv_bias(x, pv, "dec.head", 1, 0);
}

template <typename T>
Var<T> soft_aggregate_logp(const std::vector<Var<T>>& object_logits) {
  if (object_logits.empty())
    fail(ErrorCode::invalid_argument, "soft_aggregate: no object logits");
  // log p_o = log sigma(l_o) = -softplus(-l_o)
  // log p_bg = sum_o log(1 - sigma(l_o)) = sum_o -softplus(l_o)
  Var<T> log_bg = ad::neg(ad::softplus(object_logits[0]));
  for (size_t o = 1; o < object_logits.size(); ++o)
    log_bg = ad::add(log_bg, ad::neg(ad::softplus(object_logits[o])));
  Var<T> cat = log_bg;
  for (size_t o = 0; o < object_logits.size(); ++o)
    cat = ad::concat_ch(cat, ad::neg(ad::softplus(ad::neg(object_logits[o]))));
  Var<T> log_z = ad::logsumexp_ch(cat);
  return ad::sub(cat, log_z);
}

template <typename T>
std::vector<int> logp_to_labels(const Tensor<T>& logp) {
  const int h = logp.extent(0), w = logp.extent(1), k = logp.extent(2);
  std::vector<int> labels(static_cast<size_t>(h) * w);
  for (int yx = 0; yx < h * w; ++yx) {
    const T* p = logp.data() + static_cast<int64_t>(yx) * k;
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (p[c] > p[best]) best = c;
    labels[static_cast<size_t>(yx)] = best;
  }
  return labels;
}

#define SRNET_INSTANTIATE_CODEC(T)                                            \
  template void register_codec<T>(ParamSet<T>&, const CodecConfig&);          \
  template QueryFeatures<T> encode_query<T>(Var<T>, ParamVars<T>&,            \
                                            const CodecConfig&);              \
  template std::pair<Var<T>, Var<T>> encode_memory<T>(Var<T>, Var<T>,         \
                                                      ParamVars<T>&,          \
                                                      const CodecConfig&);    \
  template Var<T> decode<T>(Var<T>, Var<T>, ParamVars<T>&,                    \
                            const CodecConfig&);                              \
  template Var<T> soft_aggregate_logp<T>(const std::vector<Var<T>>&);         \
  template std::vector<int> logp_to_labels<T>(const Tensor<T>&);

SRNET_INSTANTIATE_CODEC(float)
SRNET_INSTANTIATE_CODEC(double)

#undef SRNET_INSTANTIATE_CODEC

}  // namespace srnet::codec
