#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "affinity.hpp"
#include "codec.hpp"
#include "fam.hpp"
#include "nn.hpp"
#include "pipeline.hpp"
#include "ptm.hpp"

namespace srnet::gradcheck {

namespace {

using ad::Tape;
using DVar = ad::Var<double>;

double eval_loss(const LossFn& f, const Tensor<double>& x) {
  Tape<double> tape(false);
  DVar leaf = tape.leaf(x);
  DVar loss = f(tape, leaf);
  return loss.val()[0];
}

}  // namespace

FdResult fd_check(const LossFn& f, const Tensor<double>& x, double h,
                  int max_coords) {
  Tape<double> tape(true);
  DVar leaf = tape.leaf(x, /*requires_grad=*/true, "x");
  DVar loss = f(tape, leaf);
  if (loss.val().numel() != 1)
    fail(ErrorCode::invalid_argument, "fd_check: loss must be scalar");
  if (!std::isfinite(loss.val()[0]))
    fail(ErrorCode::numeric, "fd_check: loss is not finite");
  tape.backward(loss);
  Tensor<double> analytic = tape.grad(leaf.id).empty()
                                ? Tensor<double>(x.shape())
                                : tape.grad(leaf.id);

  std::vector<int64_t> coords;
  const int64_t n = x.numel();
  if (max_coords <= 0 || n <= max_coords) {
    coords.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
  } else {
    // deterministic spread over the tensor
    for (int i = 0; i < max_coords; ++i)
      coords.push_back((n * i) / max_coords + (n * i) % max_coords % n);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    for (auto& c : coords) c = std::min(c, n - 1);
  }

  FdResult result;
  Tensor<double> probe = x;
  for (int64_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = eval_loss(f, probe);
    probe[i] = orig - h;
    const double fm = eval_loss(f, probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      fail(ErrorCode::numeric, "fd_check: probe evaluation not finite");
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel =
        std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
    result.max_rel_err = std::max(result.max_rel_err, rel);
    ++result.coords_checked;
  }
  return result;
}

namespace {

Tensor<double> rnd(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return random_uniform<double>(std::move(shape), rng, lo, hi);
}

// Fixed random projection to a scalar so every output coordinate carries a
// distinct weight in the loss.
DVar proj(Tape<double>& tape, DVar out, uint64_t seed) {
  Rng rng(seed);
  DVar w = tape.leaf(rnd(out.val().shape(), rng));
  return ad::sum_all(ad::mul(out, w));
}

// Normalized coords whose pixel-space fractional parts stay in [0.25, 0.75],
// at least 0.25 px from the bilinear lattice kinks.
Tensor<double> lattice_safe_coords(int oh, int ow, int h, int w, Rng& rng) {
  Tensor<double> coords({oh, ow, 2});
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double fx = rng.uniform_int(w - 1) + rng.uniform(0.25, 0.75);
      const double fy = rng.uniform_int(h - 1) + rng.uniform(0.25, 0.75);
      coords.at(y, x, 0) = 2.0 * fx / (w - 1) - 1.0;
      coords.at(y, x, 1) = 2.0 * fy / (h - 1) - 1.0;
    }
  return coords;
}

// Pixel-unit deformable offsets with magnitude in [0.15, 0.35], safe on both
// sides of every kernel point.
Tensor<double> lattice_safe_offsets(int h, int w, Rng& rng) {
  Tensor<double> off({h, w, 18});
  for (int64_t i = 0; i < off.numel(); ++i) {
    const double mag = rng.uniform(0.15, 0.35);
    off[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return off;
}

struct Case {
  std::string name;
  double threshold;
  std::function<double()> run;  // returns max relative error
};

double check_many(const std::vector<std::pair<LossFn, Tensor<double>>>& runs,
                  double h = 1e-4, int max_coords = -1) {
  double worst = 0.0;
  for (const auto& [f, x] : runs)
    worst = std::max(worst, fd_check(f, x, h, max_coords).max_rel_err);
  return worst;
}

std::vector<Case> build_cases() {
  std::vector<Case> cases;

  cases.push_back({"fd.quadratic", 1e-9, [] {
    Rng rng(11);
    Tensor<double> x = rnd({4, 3}, rng, -2.0, 2.0);
    LossFn f = [](Tape<double>& t, DVar v) { return ad::sum_all(ad::mul(v, v)); };
    return fd_check(f, x).max_rel_err;
  }});

  cases.push_back({"softmax", 1e-6, [] {
    Rng rng(12);
    Tensor<double> x = rnd({3, 5}, rng, -2.0, 2.0);
    LossFn f = [](Tape<double>& t, DVar v) {
      return proj(t, ad::softmax(v, 1), 120);
    };
    return fd_check(f, x).max_rel_err;
  }});

  cases.push_back({"conv2d", 1e-6, [] {
    Rng rng(13);
    const Tensor<double> x = rnd({5, 6, 3}, rng);
    const Tensor<double> k = rnd({3, 3, 3, 2}, rng);
    LossFn fx = [&](Tape<double>& t, DVar v) {
      return proj(t, ad::conv2d(v, t.leaf(k), 1, 1), 130);
    };
    LossFn fk = [&](Tape<double>& t, DVar v) {
      return proj(t, ad::conv2d(t.leaf(x), v, 2, 1), 131);
    };
    return check_many({{fx, x}, {fk, k}});
  }});

  cases.push_back({"separable_conv", 1e-6, [] {
    Rng rng(14);
    const Tensor<double> x = rnd({5, 5, 3}, rng);
    const Tensor<double> dw = rnd({3, 3, 3}, rng);
    const Tensor<double> pw = rnd({1, 1, 3, 2}, rng);
    auto net = [&](Tape<double>& t, DVar xi, DVar dwi, DVar pwi) {
      return proj(t, ad::conv2d(ad::depthwise_conv2d(xi, dwi, 1, 1), pwi, 1, 0),
                  140);
    };
    LossFn fx = [&](Tape<double>& t, DVar v) {
      return net(t, v, t.leaf(dw), t.leaf(pw));
    };
    LossFn fd = [&](Tape<double>& t, DVar v) {
      return net(t, t.leaf(x), v, t.leaf(pw));
    };
    LossFn fp = [&](Tape<double>& t, DVar v) {
      return net(t, t.leaf(x), t.leaf(dw), v);
    };
    return check_many({{fx, x}, {fd, dw}, {fp, pw}});
  }});

  cases.push_back({"mlp", 1e-5, [] {
    Rng rng(15);
    ParamSet<double> ps;
    nn::register_mlp(ps, "m", 4, 5, 3);
    ps.init_all(150);
    const Tensor<double> x = rnd({2, 3, 4}, rng);
    LossFn fx = [&](Tape<double>& t, DVar v) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, nn::mlp(v, pv, "m"), 151);
    };
    LossFn fw = [&](Tape<double>& t, DVar v) {
      ParamVars<double> pv(t, ps, false);
      pv.bind("m.w1", v);
      return proj(t, nn::mlp(t.leaf(x), pv, "m"), 151);
    };
    return check_many({{fx, x}, {fw, ps.get("m.w1")}});
  }});

  cases.push_back({"channel_attention", 1e-5, [] {
    Rng rng(16);
    ParamSet<double> ps;
    nn::register_channel_attention(ps, "ca", 4);
    ps.init_all(160);
    const Tensor<double> x = rnd({3, 3, 4}, rng);
    LossFn fx = [&](Tape<double>& t, DVar v) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, nn::channel_attention(v, pv, "ca"), 161);
    };
    LossFn fw = [&](Tape<double>& t, DVar v) {
      ParamVars<double> pv(t, ps, false);
      pv.bind("ca.w2", v);
      return proj(t, nn::channel_attention(t.leaf(x), pv, "ca"), 161);
    };
    return check_many({{fx, x}, {fw, ps.get("ca.w2")}});
  }});

  cases.push_back({"spatial_attention", 1e-5, [] {
    Rng rng(17);
    ParamSet<double> ps;
    nn::register_spatial_attention(ps, "sa");
    ps.init_all(170);
    const Tensor<double> x = rnd({8, 8, 3}, rng);
    LossFn fx = [&](Tape<double>& t, DVar v) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, nn::spatial_attention(v, pv, "sa"), 171);
    };
    LossFn fw = [&](Tape<double>& t, DVar v) {
      ParamVars<double> pv(t, ps, false);
      pv.bind("sa.w", v);
      return proj(t, nn::spatial_attention(t.leaf(x), pv, "sa"), 171);
    };
    return check_many({{fx, x}, {fw, ps.get("sa.w")}});
  }});

  cases.push_back({"bilinear_sample", 1e-6, [] {
    Rng rng(18);
    const Tensor<double> v = rnd({6, 7, 3}, rng);
    const Tensor<double> coords = lattice_safe_coords(5, 5, 6, 7, rng);
    LossFn fv = [&](Tape<double>& t, DVar vi) {
      return proj(t, ad::bilinear_sample(vi, t.leaf(coords)), 180);
    };
    LossFn fc = [&](Tape<double>& t, DVar ci) {
      return proj(t, ad::bilinear_sample(t.leaf(v), ci), 180);
    };
    return check_many({{fv, v}, {fc, coords}});
  }});

  cases.push_back({"deform_conv", 1e-6, [] {
    Rng rng(19);
    const Tensor<double> v = rnd({5, 5, 2}, rng);
    const Tensor<double> off = lattice_safe_offsets(5, 5, rng);
    Rng rng2(190);
    const Tensor<double> mod = rnd({5, 5, 9}, rng2, 0.2, 0.8);
    const Tensor<double> k = rnd({3, 3, 2, 2}, rng2);
    auto net = [&](Tape<double>& t, DVar vv, DVar oo, DVar mm, DVar kk) {
      return proj(t, ad::deform_conv(vv, oo, mm, kk), 191);
    };
    LossFn fv = [&](Tape<double>& t, DVar x) {
      return net(t, x, t.leaf(off), t.leaf(mod), t.leaf(k));
    };
    LossFn fo = [&](Tape<double>& t, DVar x) {
      return net(t, t.leaf(v), x, t.leaf(mod), t.leaf(k));
    };
    LossFn fm = [&](Tape<double>& t, DVar x) {
      return net(t, t.leaf(v), t.leaf(off), x, t.leaf(k));
    };
    LossFn fk = [&](Tape<double>& t, DVar x) {
      return net(t, t.leaf(v), t.leaf(off), t.leaf(mod), x);
    };
    return check_many({{fv, v}, {fo, off}, {fm, mod}, {fk, k}});
  }});

  cases.push_back({"affinity_readout", 1e-5, [] {
    Rng rng(20);
    const Tensor<double> kg = rnd({12, 4}, rng);
    const Tensor<double> kq = rnd({6, 4}, rng);
    const Tensor<double> vg = rnd({12, 3}, rng);
    auto net = [&](Tape<double>& t, DVar a, DVar b, DVar c) {
      return proj(t, affinity_readout(a, b, c), 200);
    };
    LossFn fg = [&](Tape<double>& t, DVar x) {
      return net(t, x, t.leaf(kq), t.leaf(vg));
    };
    LossFn fq = [&](Tape<double>& t, DVar x) {
      return net(t, t.leaf(kg), x, t.leaf(vg));
    };
    LossFn fv = [&](Tape<double>& t, DVar x) {
      return net(t, t.leaf(kg), t.leaf(kq), x);
    };
    return check_many({{fg, kg}, {fq, kq}, {fv, vg}});
  }});

  cases.push_back({"ptm.init_prototype", 1e-5, [] {
    Rng rng(21);
    ParamSet<double> ps;
    nn::register_mlp(ps, "ptm.init.f", 4, 4, 4);
    nn::register_mlp(ps, "ptm.init.w", 4, 4, 1);
    ps.init_all(210);
    const Tensor<double> vg = rnd({10, 4}, rng);
    LossFn fv = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, ptm::init_prototype(x, pv), 211);
    };
    LossFn fw = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      pv.bind("ptm.init.w.w1", x);
      return proj(t, ptm::init_prototype(t.leaf(vg), pv), 211);
    };
    return check_many({{fv, vg}, {fw, ps.get("ptm.init.w.w1")}});
  }});

  cases.push_back({"ptm.update_prototype", 1e-5, [] {
    Rng rng(22);
    const int cv = 4, hw = 9;
    ParamSet<double> ps;
    ps.add("ptm.attn.wq", {cv, cv}, Init::kaiming(cv));
    ps.add("ptm.attn.wk", {cv, cv}, Init::kaiming(cv));
    ps.add("ptm.attn.wv", {cv, cv}, Init::kaiming(cv));
    ps.add("ptm.attn.pk", {hw, cv}, Init::kaiming(cv));
    nn::register_mlp(ps, "ptm.attn.mlp", cv, cv, cv);
    ps.init_all(220);
    const Tensor<double> f = rnd({hw, cv}, rng);
    const Tensor<double> g = rnd({1, cv}, rng);
    const ptm::PtmConfig cfg;
    LossFn ff = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      DVar gv = t.leaf(g);
      return proj(t, ptm::update_prototype(gv, gv, x, pv, cfg).next, 221);
    };
    LossFn fg = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, ptm::update_prototype(x, x, t.leaf(f), pv, cfg).next, 221);
    };
    LossFn fw = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      pv.bind("ptm.attn.wq", x);
      DVar gv = t.leaf(g);
      return proj(t, ptm::update_prototype(gv, gv, t.leaf(f), pv, cfg).next,
                  221);
    };
    return check_many({{ff, f}, {fg, g}, {fw, ps.get("ptm.attn.wq")}});
  }});

  cases.push_back({"ptm.activate_pixels", 1e-5, [] {
    Rng rng(23);
    const int cv = 4;
    ParamSet<double> ps;
    nn::register_conv(ps, "ptm.act.c1", 3, 3, cv, cv);
    nn::register_conv(ps, "ptm.act.c2", 3, 3, cv, cv);
    nn::register_channel_attention(ps, "ptm.act.ca", cv);
    ps.init_all(230);
    const Tensor<double> f = rnd({4, 4, cv}, rng);
    const Tensor<double> g = rnd({1, cv}, rng, 0.3, 1.0);
    LossFn ff = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, ptm::activate_pixels(t.leaf(g), x, pv), 231);
    };
    LossFn fw = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      pv.bind("ptm.act.c1.w", x);
      return proj(t, ptm::activate_pixels(t.leaf(g), t.leaf(f), pv), 231);
    };
    return check_many({{ff, f}, {fw, ps.get("ptm.act.c1.w")}});
  }});

  cases.push_back({"ptm.fuse", 1e-5, [] {
    Rng rng(24);
    const int cv = 4;
    ParamSet<double> ps;
    nn::register_conv(ps, "ptm.fuse.proj", 1, 1, 2 * cv, cv);
    nn::register_resblock(ps, "ptm.fuse.res1", cv);
    nn::register_resblock(ps, "ptm.fuse.res2", cv);
    nn::register_channel_attention(ps, "ptm.fuse.ca", cv);
    nn::register_spatial_attention(ps, "ptm.fuse.sa");
    ps.init_all(240);
    const Tensor<double> fm = rnd({4, 4, cv}, rng);
    const Tensor<double> fl = rnd({4, 4, cv}, rng);
    LossFn f = [&](Tape<double>& t, DVar x) {
      ParamVars<double> pv(t, ps, false);
      return proj(t, ptm::fuse(x, t.leaf(fl), pv), 241);
    };
    return check_many({{f, fm}});
  }});

  // Full pipeline loss at initialization. The offset-predicting heads are
  // excluded here: at init their gradient path sits exactly on the bilinear
  // lattice kink where central differences are invalid; the companion case
  // below covers them from a perturbed starting point.
  cases.push_back({"pipeline.loss", 1e-4, [] {
    synth::SequenceSpec spec;
    spec.frames = 3;
    spec.height = 16;
    spec.width = 16;
    spec.seed = 5;
    synth::ObjectSpec obj;
    obj.x = 5;
    obj.y = 8;
    obj.size = 7;
    obj.vx = 1.5;
    obj.vy = 0.5;
    spec.objects = {obj};
    const synth::SyntheticSequence seq = synth::generate(spec);

    pipeline::RunConfig cfg;
    cfg.codec.stride = 4;
    cfg.codec.ck = 4;
    cfg.codec.cv = 8;
    cfg.ptm.rounds = 2;
    cfg.seed = 7;
    auto model = pipeline::Model<double>::create(cfg, 16, 16);

    const std::vector<std::string> probe_params = {
        "enc.q.s0.w",       "enc.m.s0.w",      "enc.q.key.w",
        "enc.m.val.w",      "fam.deform.kernel", "fam.deform.mod.w",
        "ptm.init.f.w1",    "ptm.init.w.w2",   "ptm.fuse.proj.w",
        "ptm.attn.wq",      "ptm.attn.pk",     "ptm.attn.mlp.w1",
        "ptm.act.c1.w",     "ptm.fuse.sa.w",   "dec.u0.w",
        "dec.head.w"};
    double worst = 0.0;
    for (const std::string& pname : probe_params) {
      LossFn f = [&](Tape<double>& t, DVar x) {
        ParamVars<double> pv(t, model.params, false);
        pv.bind(pname, x);
        return pipeline::build_training_loss(t, pv, model, seq, 2);
      };
      worst = std::max(worst, fd_check(f, model.params.get(pname), 1e-5, 6)
                                  .max_rel_err);
    }
    return worst;
  }});

  cases.push_back({"pipeline.offset-heads", 1e-4, [] {
    synth::SequenceSpec spec;
    spec.frames = 3;
    spec.height = 16;
    spec.width = 16;
    spec.seed = 5;
    synth::ObjectSpec obj;
    obj.x = 5;
    obj.y = 8;
    obj.size = 7;
    obj.vx = 1.5;
    obj.vy = 0.5;
    spec.objects = {obj};
    const synth::SyntheticSequence seq = synth::generate(spec);

    pipeline::RunConfig cfg;
    cfg.codec.stride = 4;
    cfg.codec.ck = 4;
    cfg.codec.cv = 8;
    cfg.ptm.rounds = 2;
    cfg.seed = 7;
    auto model = pipeline::Model<double>::create(cfg, 16, 16);
    // move the predicted sampling positions off the lattice: a constant
    // ~0.3 px bias plus small weight noise
    Rng rng(77);
    auto nudge = [&](const std::string& name, double lo, double hi) {
      Tensor<double>& t = model.params.get(name);
      for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    };
    nudge("fam.off.dw", -0.01, 0.01);
    nudge("fam.off.pw", -0.01, 0.01);
    model.params.get("fam.off.pb")[0] = 0.18;  // x, normalized units
    model.params.get("fam.off.pb")[1] = -0.14;
    nudge("fam.deform.off.w", -0.002, 0.002);
    Tensor<double>& ob = model.params.get("fam.deform.off.b");
    for (int64_t i = 0; i < ob.numel(); ++i)
      ob[i] = (i % 2 == 0 ? 0.31 : -0.27);

    const std::vector<std::string> probe_params = {
        "fam.off.dw", "fam.off.pw", "fam.off.pb", "fam.deform.off.w",
        "fam.deform.off.b"};
    double worst = 0.0;
    for (const std::string& pname : probe_params) {
      LossFn f = [&](Tape<double>& t, DVar x) {
        ParamVars<double> pv(t, model.params, false);
        pv.bind(pname, x);
        return pipeline::build_training_loss(t, pv, model, seq, 2);
      };
      worst = std::max(worst, fd_check(f, model.params.get(pname), 1e-5, 6)
                                  .max_rel_err);
    }
    return worst;
  }});

  return cases;
}

}  // namespace

std::vector<CheckRow> run_checks(const std::string& filter) {
  std::vector<CheckRow> rows;
  for (const Case& c : build_cases()) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    CheckRow row;
    row.name = c.name;
    row.threshold = c.threshold;
    row.max_rel_err = c.run();
    row.pass = row.max_rel_err <= c.threshold;
    rows.push_back(row);
  }
  if (rows.empty())
    fail(ErrorCode::invalid_argument, "no gradient check matches: " + filter);
  return rows;
}

std::string format_table(const std::vector<CheckRow>& rows) {
  std::ostringstream os;
  os << "op                        max_rel_err   threshold   status\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-25s %-13.3e %-11.0e %s\n",
                  r.name.c_str(), r.max_rel_err, r.threshold,
                  r.pass ? "pass" : "FAIL");
    os << buf;
  }
  return os.str();
}

}  // namespace srnet::gradcheck
