#include "fam.hpp"

namespace srnet::fam {

template <typename T>
SamplingGrid<T> make_grid(int h, int w, int g) {
  if (g < 1 || h % g != 0 || w % g != 0)
    fail(ErrorCode::invalid_argument,
         "make_grid: factor " + std::to_string(g) + " must divide " +
             std::to_string(h) + "x" + std::to_string(w));
  const int hg = h / g, wg = w / g;
  Tensor<T> pts({hg, wg, 2});
  for (int r = 0; r < hg; ++r) {
    const T y = hg > 1 ? T(-1) + T(2) * static_cast<T>(r) / static_cast<T>(hg - 1)
                       : T(0);
    for (int c = 0; c < wg; ++c) {
      const T x = wg > 1
                      ? T(-1) + T(2) * static_cast<T>(c) / static_cast<T>(wg - 1)
                      : T(0);
      pts.at(r, c, 0) = x;
      pts.at(r, c, 1) = y;
    }
  }
  return SamplingGrid<T>{std::move(pts), g};
}

template <typename T>
void register_fam(ParamSet<T>& set, int ck, int cv) {
  // offset-predicting layers start at zero so the module begins as an
  // identity resample
  nn::register_separable_conv(set, "fam.off", 2 * ck, 2, /*zero_init=*/true);
  nn::register_conv(set, "fam.deform.off", 3, 3, 2 * cv, 18, /*zero_init=*/true);
  nn::register_conv(set, "fam.deform.mod", 3, 3, 2 * cv, 9, /*zero_init=*/true);
  set.add("fam.deform.kernel", {3, 3, cv, cv}, Init::kaiming(9 * cv));
}

template <typename T>
Var<T> predict_offsets(Var<T> kq, Var<T> kl, ParamVars<T>& pv, int g) {
  if (!(kq.val().shape() == kl.val().shape()))
    fail(ErrorCode::invalid_argument,
         "predict_offsets: query/local key shapes differ");
  Var<T> field = nn::separable_conv(ad::concat_ch(kq, kl), pv, "fam.off");
  if (g > 1) field = ad::avg_pool2d(field, g);
  return field;  // [H/g, W/g, 2]
}

template <typename T>
Var<T> align_local_value(Var<T> kq, Var<T> kl, Var<T> vl, ParamVars<T>& pv,
                         const FamConfig& cfg) {
  const int h = vl.val().extent(0), w = vl.val().extent(1);
  Var<T> offsets = predict_offsets(kq, kl, pv, cfg.grid_g);
  SamplingGrid<T> grid = make_grid<T>(h, w, cfg.grid_g);
  Var<T> coords =
      ad::add(kq.tape->leaf(std::move(grid.points)), offsets);  // p + dp
  if (cfg.grid_g > 1) coords = ad::bilinear_upsample(coords, h, w);
  return ad::bilinear_sample(vl, coords);
}

template <typename T>
std::pair<Var<T>, Var<T>> estimate_deform(Var<T> v_aligned, Var<T> vq,
                                          ParamVars<T>& pv) {
  if (!(v_aligned.val().shape() == vq.val().shape()))
    fail(ErrorCode::invalid_argument,
         "estimate_deform: value shapes differ");
  Var<T> joint = ad::concat_ch(v_aligned, vq);
  Var<T> off = nn::conv_bias(joint, pv, "fam.deform.off", 1, 1);
  Var<T> mod = ad::logistic(nn::conv_bias(joint, pv, "fam.deform.mod", 1, 1));
  return {off, mod};
}

template <typename T>
Var<T> fam_forward(Var<T> kq, Var<T> kl, Var<T> vl, Var<T> vq,
                   ParamVars<T>& pv, const FamConfig& cfg) {
  Var<T> aligned = align_local_value(kq, kl, vl, pv, cfg);
  auto [off, mod] = estimate_deform(aligned, vq, pv);
  return ad::deform_conv(aligned, off, mod, pv["fam.deform.kernel"]);
}

#define SRNET_INSTANTIATE_FAM(T)                                               \
  template SamplingGrid<T> make_grid<T>(int, int, int);                        \
  template void register_fam<T>(ParamSet<T>&, int, int);                       \
  template Var<T> predict_offsets<T>(Var<T>, Var<T>, ParamVars<T>&, int);      \
  template Var<T> align_local_value<T>(Var<T>, Var<T>, Var<T>, ParamVars<T>&,  \
                                       const FamConfig&);                      \
  template std::pair<Var<T>, Var<T>> estimate_deform<T>(Var<T>, Var<T>,        \
                                                        ParamVars<T>&);        \
  template Var<T> fam_forward<T>(Var<T>, Var<T>, Var<T>, Var<T>,               \
                                 ParamVars<T>&, const FamConfig&);

SRNET_INSTANTIATE_FAM(float)
SRNET_INSTANTIATE_FAM(double)

#undef SRNET_INSTANTIATE_FAM

}  // namespace srnet::fam
