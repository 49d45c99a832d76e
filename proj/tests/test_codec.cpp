#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "codec.hpp"
#include "image_io.hpp"
#include "oracles.hpp"

using namespace srnet;

namespace {

codec::CodecConfig tiny_codec() {
  codec::CodecConfig cfg;
  cfg.stride = 4;
  cfg.ck = 8;
  cfg.cv = 32;
  return cfg;
}

}  // namespace

TEST_CASE("encode_query shapes: stride 4 turns 64x64 into 16x16") {
  auto cfg = tiny_codec();
  ParamSet<float> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(71);
  ad::Tape<float> tape(false);
  ParamVars<float> pv(tape, ps, false);
  Rng rng(72);
  ad::Var<float> frame =
      tape.leaf(random_uniform<float>({64, 64, 3}, rng, 0.f, 1.f));
  auto q = codec::encode_query(frame, pv, cfg);
  CHECK(q.key.val().shape() == Shape{16, 16, 8});
  CHECK(q.value.val().shape() == Shape{16, 16, 32});
  CHECK(q.skip.val().extent(0) == 32);  // stride-2 trunk feature
}

TEST_CASE("encoders reject extents not divisible by the stride") {
  auto cfg = tiny_codec();
  ParamSet<float> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(73);
  ad::Tape<float> tape(false);
  ParamVars<float> pv(tape, ps, false);
  ad::Var<float> bad = tape.leaf(Tensor<float>({30, 64, 3}));
  CHECK_THROWS_AS(codec::encode_query(bad, pv, cfg), Error);
}

TEST_CASE("zero encoder weights give zero features") {
  auto cfg = tiny_codec();
  ParamSet<float> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(74);
  for (const auto& name : ps.names())
    if (name.rfind("enc.q", 0) == 0)
      for (int64_t i = 0; i < ps.get(name).numel(); ++i) ps.get(name)[i] = 0.f;
  ad::Tape<float> tape(false);
  ParamVars<float> pv(tape, ps, false);
  Rng rng(75);
  ad::Var<float> frame =
      tape.leaf(random_uniform<float>({16, 16, 3}, rng, 0.f, 1.f));
  auto q = codec::encode_query(frame, pv, cfg);
  for (int64_t i = 0; i < q.key.val().numel(); ++i) CHECK(q.key.val()[i] == 0.f);
  for (int64_t i = 0; i < q.value.val().numel(); ++i)
    CHECK(q.value.val()[i] == 0.f);
}

TEST_CASE("encode_query matches a conv composition oracle") {
  codec::CodecConfig cfg;
  cfg.stride = 4;
  cfg.ck = 3;
  cfg.cv = 8;
  ParamSet<double> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(76);
  Rng rng(77);
  Tensor<double> frame = random_uniform<double>({8, 8, 3}, rng, 0., 1.);
  ad::Tape<double> tape(false);
  ParamVars<double> pv(tape, ps, false);
  auto q = codec::encode_query(tape.leaf(frame), pv, cfg);

  auto conv_relu = [&](const Tensor<double>& x, const std::string& prefix,
                       int stride) {
    Tensor<double> y = oracle::naive_conv2d(x, ps.get(prefix + ".w"), stride, 1);
    for (int yy = 0; yy < y.extent(0); ++yy)
      for (int xx = 0; xx < y.extent(1); ++xx)
        for (int c = 0; c < y.extent(2); ++c)
          y.at(yy, xx, c) = std::max(
              0.0, y.at(yy, xx, c) + ps.get(prefix + ".b").at(c));
    return y;
  };
  Tensor<double> s0 = conv_relu(frame, "enc.q.s0", 2);
  Tensor<double> s1 = conv_relu(s0, "enc.q.s1", 2);
  Tensor<double> key = oracle::naive_conv2d(s1, ps.get("enc.q.key.w"), 1, 0);
  for (int yy = 0; yy < key.extent(0); ++yy)
    for (int xx = 0; xx < key.extent(1); ++xx)
      for (int c = 0; c < key.extent(2); ++c)
        key.at(yy, xx, c) += ps.get("enc.q.key.b").at(c);
  CHECK(oracle::rel_diff(q.key.val(), key) <= 1e-12);
  CHECK(oracle::rel_diff(q.skip.val(), s0) <= 1e-12);
}

TEST_CASE("encode_memory fuses the mask at the input") {
  auto cfg = tiny_codec();
  cfg.cv = 16;
  cfg.ck = 4;
  ParamSet<float> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(78);
  ad::Tape<float> tape(false);
  ParamVars<float> pv(tape, ps, false);
  Rng rng(79);
  Tensor<float> frame = random_uniform<float>({16, 16, 3}, rng, 0.f, 1.f);
  ad::Var<float> fv = tape.leaf(frame);

  // all-zero vs all-one mask must change the features (mask channel is live)
  auto [k0, v0] =
      codec::encode_memory(fv, tape.leaf(Tensor<float>({16, 16, 1})), pv, cfg);
  auto [k1, v1] = codec::encode_memory(
      fv, tape.leaf(Tensor<float>::full({16, 16, 1}, 1.f)), pv, cfg);
  CHECK(oracle::rel_diff(k0.val(), k1.val()) > 1e-4);

  // mask extents must match the frame
  CHECK_THROWS_AS(
      codec::encode_memory(fv, tape.leaf(Tensor<float>({8, 8, 1})), pv, cfg),
      Error);
}

TEST_CASE("decode: zero prototype feature with bias-free head gives p=0.5") {
  auto cfg = tiny_codec();
  cfg.cv = 8;
  cfg.ck = 4;
  ParamSet<float> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(80);
  ad::Tape<float> tape(false);
  ParamVars<float> pv(tape, ps, false);
  ad::Var<float> f_pro = tape.leaf(Tensor<float>({4, 4, 8}));
  ad::Var<float> skip = tape.leaf(Tensor<float>({8, 8, 4}));
  ad::Var<float> logits = codec::decode(f_pro, skip, pv, cfg);
  CHECK(logits.val().shape() == Shape{16, 16, 1});
  for (int64_t i = 0; i < logits.val().numel(); ++i) {
    CHECK(logits.val()[i] == 0.f);
    const float p = 1.f / (1.f + std::exp(-logits.val()[i]));
    CHECK(p == doctest::Approx(0.5f));
  }
}

TEST_CASE("bilinear upsampling of a constant map is constant") {
  Tensor<float> x = Tensor<float>::full({3, 5, 2}, 0.73f);
  Tensor<float> y = ops::bilinear_upsample(x, 9, 15);
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(y[i] == doctest::Approx(0.73f));
}

TEST_CASE("decode output extents scale by the stride") {
  auto cfg = tiny_codec();
  cfg.cv = 8;
  cfg.ck = 4;
  ParamSet<float> ps;
  codec::register_codec(ps, cfg);
  ps.init_all(81);
  ad::Tape<float> tape(false);
  ParamVars<float> pv(tape, ps, false);
  Rng rng(82);
  ad::Var<float> f_pro =
      tape.leaf(random_uniform<float>({16, 16, 8}, rng, -1.f, 1.f));
  ad::Var<float> skip =
      tape.leaf(random_uniform<float>({32, 32, 4}, rng, -1.f, 1.f));
  ad::Var<float> logits = codec::decode(f_pro, skip, pv, cfg);
  CHECK(logits.val().shape() == Shape{64, 64, 1});
}

TEST_CASE("soft aggregation: probabilities normalize and argmax labels") {
  Rng rng(83);
  const int h = 6, w = 5, n = 3;
  ad::Tape<float> tape(false);
  std::vector<ad::Var<float>> logits;
  for (int o = 0; o < n; ++o)
    logits.push_back(
        tape.leaf(random_uniform<float>({h, w, 1}, rng, -3.f, 3.f)));
  ad::Var<float> logp = codec::soft_aggregate_logp(logits);
  CHECK(logp.val().shape() == Shape{h, w, n + 1});
  for (int yx = 0; yx < h * w; ++yx) {
    double sum = 0;
    for (int c = 0; c <= n; ++c)
      sum += std::exp(double(logp.val()[yx * (n + 1) + c]));
    CHECK(std::abs(sum - 1.0) <= 1e-5);
  }
  const std::vector<int> labels = codec::logp_to_labels(logp.val());
  for (int yx = 0; yx < h * w; ++yx) {
    CHECK(labels[size_t(yx)] >= 0);
    CHECK(labels[size_t(yx)] <= n);
  }

  // strongly positive single-object logit wins against the background
  ad::Tape<float> tape2(false);
  std::vector<ad::Var<float>> one = {
      tape2.leaf(Tensor<float>::full({2, 2, 1}, 8.f))};
  ad::Var<float> lp2 = codec::soft_aggregate_logp(one);
  for (int lab : codec::logp_to_labels(lp2.val())) CHECK(lab == 1);
}

TEST_CASE("ppm/pgm round trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "imgio_test";
  fs::create_directories(dir);
  Rng rng(84);
  Tensor<float> rgb({5, 7, 3});
  for (int64_t i = 0; i < rgb.numel(); ++i)
    rgb[i] = float(rng.uniform_int(256)) / 255.f;  // exactly representable
  write_ppm((dir / "a.ppm").string(), rgb);
  Tensor<float> back = read_ppm((dir / "a.ppm").string());
  REQUIRE(back.shape() == rgb.shape());
  for (int64_t i = 0; i < rgb.numel(); ++i)
    CHECK(back[i] == doctest::Approx(rgb[i]).epsilon(1e-6));

  GrayImage g;
  g.h = 3;
  g.w = 4;
  g.pix = {0, 1, 2, 0, 1, 1, 2, 2, 0, 0, 2, 1};
  write_pgm((dir / "m.pgm").string(), g);
  GrayImage g2 = read_pgm((dir / "m.pgm").string());
  CHECK(g2.h == 3);
  CHECK(g2.w == 4);
  CHECK(g2.pix == g.pix);

  // binary {0,255} masks collapse to label 1
  GrayImage b;
  b.h = 1;
  b.w = 4;
  b.pix = {0, 255, 255, 0};
  const std::vector<int> labels = labels_from_gray(b);
  CHECK(labels == std::vector<int>{0, 1, 1, 0});

  fs::remove_all(dir);
}
