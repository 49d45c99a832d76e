// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "affinity.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using namespace srnet;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string name;
  std::function<bool(std::string&)> run;  // fills a detail string
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---- 1: affinity path vs brute-force oracle --------------------------------

// Full-path oracle: pairwise-loop similarities, per-column softmax by direct
// summation, then an explicit weighted sum over memory pixels.
template <typename T>
Tensor<T> affinity_readout_oracle(const Tensor<T>& kg, const Tensor<T>& kq,
                                  const Tensor<T>& vg) {
  const Tensor<T> sim = oracle::pairwise_loop_neg_sqdist(kg, kq);
  const int m = sim.extent(0), n = sim.extent(1), cv = vg.extent(1);
  Tensor<T> f({n, cv});
  for (int j = 0; j < n; ++j) {
    T z = 0;
    for (int i = 0; i < m; ++i) z += std::exp(sim.at(i, j));
    for (int i = 0; i < m; ++i) {
      const T w = std::exp(sim.at(i, j)) / z;
      for (int c = 0; c < cv; ++c) f.at(j, c) += w * vg.at(i, c);
    }
  }
  return f;
}

template <typename T>
double affinity_case_error(Rng& rng) {
  const int t = 1 + rng.uniform_int(3);
  const int h = 1 + rng.uniform_int(6), w = 1 + rng.uniform_int(6);
  const int ck = 1 + rng.uniform_int(8), cv = 1 + rng.uniform_int(4);
  Tensor<T> kg = random_uniform<T>({t * h * w, ck}, rng, T(-1), T(1));
  Tensor<T> kq = random_uniform<T>({h * w, ck}, rng, T(-1), T(1));
  Tensor<T> vg = random_uniform<T>({t * h * w, cv}, rng, T(-1), T(1));
  const Tensor<T> got =
      readout(affinity(kg, kq), vg, 0, 0);  // production path
  const Tensor<T> want = affinity_readout_oracle(kg, kq, vg);
  return oracle::rel_diff(got, want);
}

bool criterion1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst32 = 0, worst64 = 0;
  for (int trial = 0; trial < 30; ++trial)
    worst32 = std::max(worst32, affinity_case_error<float>(rng));
  for (int trial = 0; trial < 30; ++trial)
    worst64 = std::max(worst64, affinity_case_error<double>(rng));
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "f32 err " << worst32 << " (tol 1e-5), f64 err " << worst64
     << " (tol 1e-12), " << elapsed << " s (budget 1 s)";
  detail = os.str();
  return worst32 <= 1e-5 && worst64 <= 1e-12 && elapsed < 1.0;
}

// ---- 2: deformable conv vs naive loop oracle -------------------------------

bool criterion2(std::string& detail) {
  Rng rng(1002);
  double worst = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const int h = 2 + rng.uniform_int(7), w = 2 + rng.uniform_int(7);
    const int cv = 1 + rng.uniform_int(4), cout = 1 + rng.uniform_int(4);
    Tensor<float> v = random_uniform<float>({h, w, cv}, rng, -1.f, 1.f);
    Tensor<float> off = random_uniform<float>({h, w, 18}, rng, -2.f, 2.f);
    Tensor<float> mod = random_uniform<float>({h, w, 9}, rng, 0.f, 1.f);
    Tensor<float> k = random_uniform<float>({3, 3, cv, cout}, rng, -1.f, 1.f);
    worst = std::max(worst,
                     oracle::rel_diff(ops::deform_conv(v, off, mod, k),
                                      oracle::naive_deform_conv(v, off, mod, k)));
  }
  // zero offsets + unit modulation reduce to the plain convolution
  double worst_reduction = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const int h = 4 + rng.uniform_int(5), w = 4 + rng.uniform_int(5);
    const int cv = 1 + rng.uniform_int(4);
    Tensor<float> v = random_uniform<float>({h, w, cv}, rng, -1.f, 1.f);
    Tensor<float> k = random_uniform<float>({3, 3, cv, cv}, rng, -1.f, 1.f);
    Tensor<float> off({h, w, 18});
    Tensor<float> mod = Tensor<float>::full({h, w, 9}, 1.f);
    worst_reduction =
        std::max(worst_reduction, oracle::rel_diff(ops::deform_conv(v, off, mod, k),
                                                   ops::conv2d(v, k, 1, 1)));
  }
  std::ostringstream os;
  os << "oracle err " << worst << ", conv reduction err " << worst_reduction
     << " (tol 1e-6)";
  detail = os.str();
  return worst <= 1e-6 && worst_reduction <= 1e-6;
}

// ---- 3: bilinear contract ---------------------------------------------------

bool criterion3(std::string& detail) {
  Rng rng(1003);
  double worst_ident = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const int h = 2 + rng.uniform_int(8), w = 2 + rng.uniform_int(8);
    const int c = 1 + rng.uniform_int(4);
    Tensor<float> v = random_uniform<float>({h, w, c}, rng, -1.f, 1.f);
    const auto grid = fam::make_grid<float>(h, w, 1);
    worst_ident =
        std::max(worst_ident, oracle::rel_diff(ops::bilinear_sample(v, grid.points), v));
  }
  // partition of unity: sampling an all-ones field sums the four weights
  const int h = 9, w = 13;
  Tensor<double> ones = Tensor<double>::full({h, w, 1}, 1.0);
  Tensor<double> coords({100, 100, 2});
  for (int64_t i = 0; i < 100 * 100; ++i) {
    coords[2 * i] = rng.uniform(-1.0, 1.0);
    coords[2 * i + 1] = rng.uniform(-1.0, 1.0);
  }
  const Tensor<double> sums = ops::bilinear_sample(ones, coords);
  double worst_unity = 0;
  for (int64_t i = 0; i < sums.numel(); ++i)
    worst_unity = std::max(worst_unity, std::abs(sums[i] - 1.0));
  std::ostringstream os;
  os << "identity err " << worst_ident << ", partition-of-unity err "
     << worst_unity << " over 10^4 coords (tol 1e-6)";
  detail = os.str();
  return worst_ident <= 1e-6 && worst_unity <= 1e-6;
}

// ---- 4: softmax / attention normalization ----------------------------------

bool criterion4(std::string& detail) {
  Rng rng(1004);
  double worst = 0;
  int cases = 0;
  // affinity columns
  for (int trial = 0; trial < 700; ++trial) {
    const int m = 1 + rng.uniform_int(24), n = 1 + rng.uniform_int(8);
    const int ck = 1 + rng.uniform_int(6);
    Tensor<double> kg = random_uniform<double>({m, ck}, rng, -2., 2.);
    Tensor<double> kq = random_uniform<double>({n, ck}, rng, -2., 2.);
    const AffinityMatrix<double> aff = affinity(kg, kq);
    for (int j = 0; j < n; ++j) {
      double sum = 0;
      for (int i = 0; i < m; ++i) sum += aff.weights.at(i, j);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    ++cases;
  }
  // PTM attention rows across rounds
  ParamSet<double> ps;
  ptm::register_ptm(ps, 6, 12);
  ps.init_all(1004);
  for (int trial = 0; trial < 350; ++trial) {
    Tensor<double> fm = random_uniform<double>({3, 4, 6}, rng, -1., 1.);
    Tensor<double> fl = random_uniform<double>({3, 4, 6}, rng, -1., 1.);
    Tensor<double> vg = random_uniform<double>({8, 6}, rng, -1., 1.);
    ad::Tape<double> tape(false);
    ParamVars<double> pv(tape, ps, false);
    ptm::PtmConfig cfg;
    cfg.rounds = 1 + trial % 3;
    const auto result =
        ptm::run_ptm(tape.leaf(fm), tape.leaf(fl), tape.leaf(vg), pv, cfg);
    for (const auto& attn : result.attentions) {
      double sum = 0;
      for (int64_t i = 0; i < attn.val().numel(); ++i) sum += attn.val()[i];
      worst = std::max(worst, std::abs(sum - 1.0));
      ++cases;
    }
  }
  std::ostringstream os;
  os << "max |sum-1| = " << worst << " over " << cases
     << " randomized cases (tol 1e-6)";
  detail = os.str();
  return cases >= 1000 && worst <= 1e-6;
}

// ---- 5: prototype contract --------------------------------------------------

bool criterion5(std::string& detail) {
  const int cv = 4;
  Rng rng(1005);
  // constant weight head: G_0 equals the plain mean of F(v)
  ParamSet<double> ps;
  ptm::register_ptm(ps, cv, 4);
  ps.init_all(1005);
  for (const char* n :
       {"ptm.init.w.w1", "ptm.init.w.w2", "ptm.init.w.b1", "ptm.init.w.b2"}) {
    Tensor<double>& t = ps.get(n);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = 0.0;
  }
  double worst_mean = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + rng.uniform_int(16);
    Tensor<double> vg = random_uniform<double>({m, cv}, rng, -1., 1.);
    ad::Tape<double> tape(false);
    ParamVars<double> pv(tape, ps, false);
    const auto g0 = ptm::init_prototype(tape.leaf(vg), pv);
    const auto f_all = nn::mlp(tape.leaf(vg), pv, "ptm.init.f");
    for (int c = 0; c < cv; ++c) {
      double mean = 0;
      for (int i = 0; i < m; ++i) mean += f_all.val().at(i, c) / m;
      worst_mean = std::max(worst_mean, std::abs(g0.val().at(0, c) - mean));
    }
  }
  // convexity with an identity F head over 1000 random instances
  ParamSet<double> ps2;
  ptm::register_ptm(ps2, cv, 4);
  ps2.init_all(1006);
  for (const char* n : {"ptm.init.f.w1", "ptm.init.f.w2"}) {
    Tensor<double>& w = ps2.get(n);
    for (int i = 0; i < cv; ++i)
      for (int j = 0; j < cv; ++j) w.at(i, j) = i == j ? 1.0 : 0.0;
  }
  for (const char* n : {"ptm.init.f.b1", "ptm.init.f.b2"}) {
    Tensor<double>& b = ps2.get(n);
    for (int64_t i = 0; i < b.numel(); ++i) b[i] = 0.0;
  }
  int convex_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + rng.uniform_int(12);
    Tensor<double> vg = random_uniform<double>({m, cv}, rng, 0.05, 2.0);
    ad::Tape<double> tape(false);
    ParamVars<double> pv(tape, ps2, false);
    const auto g0 = ptm::init_prototype(tape.leaf(vg), pv);
    for (int c = 0; c < cv; ++c) {
      double lo = vg.at(0, c), hi = vg.at(0, c);
      for (int i = 1; i < m; ++i) {
        lo = std::min(lo, vg.at(i, c));
        hi = std::max(hi, vg.at(i, c));
      }
      if (g0.val().at(0, c) < lo - 1e-9 || g0.val().at(0, c) > hi + 1e-9)
        ++convex_violations;
    }
  }
  std::ostringstream os;
  os << "mean-equivalence err " << worst_mean
     << " (tol 1e-6), convexity violations " << convex_violations
     << "/1000 instances";
  detail = os.str();
  return worst_mean <= 1e-6 && convex_violations == 0;
}

// ---- 6: gradient certification ----------------------------------------------

bool criterion6(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = gradcheck::run_checks();
  const double elapsed = seconds_since(t0);
  double worst = 0;
  int failed = 0;
  for (const auto& r : rows) {
    worst = std::max(worst, r.max_rel_err);
    failed += r.pass ? 0 : 1;
  }
  std::ostringstream os;
  os << rows.size() << " ops, worst rel err " << worst << " (tol 1e-4), "
     << failed << " failing, " << elapsed << " s (budget 120 s)";
  detail = os.str();
  return failed == 0 && elapsed < 120.0;
}

// ---- 7: toy end-to-end -------------------------------------------------------

synth::SequenceSpec toy_spec() {
  synth::SequenceSpec spec;
  spec.name = "toy";
  spec.frames = 8;
  spec.height = 64;
  spec.width = 64;
  spec.seed = 21;
  synth::ObjectSpec obj;
  obj.x = 18;
  obj.y = 28;
  obj.size = 16;
  obj.vx = 3.0;
  obj.vy = 1.5;
  spec.objects = {obj};
  return spec;
}

pipeline::RunConfig tiny_profile(uint64_t seed) {
  pipeline::RunConfig cfg;
  cfg.codec.stride = 4;
  cfg.codec.ck = 8;
  cfg.codec.cv = 32;
  cfg.seed = seed;
  cfg.train_lr = 0.2;
  cfg.train_iters = 500;
  return cfg;
}

bool criterion7(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto seq = synth::generate(toy_spec());
  auto model = pipeline::Model<float>::create(tiny_profile(1), 64, 64);
  pipeline::train_toy(model, seq);
  const auto report = pipeline::run_eval(model, {seq});
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "J " << report.mean_j() << " (>= 0.85), J&F " << report.mean_jf()
     << " (>= 0.80) on frames 1-7 after 500 iterations, " << elapsed
     << " s (budget 600 s)";
  detail = os.str();
  return report.mean_j() >= 0.85 && report.mean_jf() >= 0.80 &&
         elapsed <= 600.0;
}

// ---- 8: ablation direction on a teleport sequence ----------------------------

bool criterion8(std::string& detail) {
  synth::SequenceSpec spec;
  spec.name = "teleport";
  spec.frames = 8;
  spec.height = 64;
  spec.width = 64;
  spec.seed = 33;
  synth::ObjectSpec target;  // jumps at frame 4, breaking coherence
  target.x = 14;
  target.y = 16;
  target.size = 12;
  target.vx = 2.0;
  target.vy = 1.0;
  target.teleport_frame = 4;
  target.teleport_x = 48;
  target.teleport_y = 46;
  target.has_color = true;
  target.r = 0.85;
  target.g = 0.75;
  target.b = 0.2;
  synth::ObjectSpec twin = target;  // identical-looking distractor
  twin.x = 46;
  twin.y = 14;
  twin.vx = -2.0;
  twin.vy = 1.5;
  twin.teleport_frame = -1;
  spec.objects = {target, twin};
  const auto seq = synth::generate(spec);

  int wins = 0;
  std::ostringstream os;
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    double jf[2];
    for (int off = 0; off < 2; ++off) {
      auto cfg = tiny_profile(seed);
      cfg.train_iters = 100;
      cfg.fam_enabled = off == 0;
      auto model = pipeline::Model<float>::create(cfg, 64, 64);
      pipeline::train_toy(model, seq);
      jf[off] = pipeline::run_eval(model, {seq}).mean_jf();
    }
    if (jf[0] >= jf[1]) ++wins;
    os << "seed " << seed << ": on " << jf[0] << " vs off " << jf[1] << "; ";
  }
  os << "fam-on wins " << wins << "/3 (majority required)";
  detail = os.str();
  return wins >= 2;
}

// ---- 9: PTM rounds schedule ---------------------------------------------------

bool criterion9(std::string& detail) {
  const int cv = 8, h = 4, w = 4;
  ParamSet<float> ps;
  ptm::register_ptm(ps, cv, h * w);
  ps.init_all(1009);
  Rng rng(1009);
  Tensor<float> fm = random_uniform<float>({h, w, cv}, rng, -1.f, 1.f);
  Tensor<float> fl = random_uniform<float>({h, w, cv}, rng, -1.f, 1.f);
  Tensor<float> vg = random_uniform<float>({2 * h * w, cv}, rng, -1.f, 1.f);
  bool ok = true;
  for (int rounds : {1, 2, 3}) {
    ad::Tape<float> tape(false);
    ParamVars<float> pv(tape, ps, false);
    ptm::PtmConfig cfg;
    cfg.rounds = rounds;
    const auto result =
        ptm::run_ptm(tape.leaf(fm), tape.leaf(fl), tape.leaf(vg), pv, cfg);
    ok = ok && result.f_pro.val().shape() == Shape{h, w, cv} &&
         static_cast<int>(result.attentions.size()) == rounds &&
         all_finite(result.f_pro.val());
  }
  const bool default_is_three =
      ptm::PtmConfig{}.rounds == 3 && pipeline::RunConfig{}.ptm.rounds == 3;
  std::ostringstream os;
  os << "rounds 1/2/3 complete with shape-correct F_pro; default rounds = 3: "
     << (default_is_three ? "yes" : "no");
  detail = os.str();
  return ok && default_is_three;
}

// ---- 10: determinism -----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool criterion10(std::string& detail) {
  const auto seq = synth::generate(toy_spec());
  auto run = [&](const fs::path& dir) {
    auto cfg = tiny_profile(7);
    cfg.train_iters = 40;
    auto model = pipeline::Model<float>::create(cfg, 64, 64);
    pipeline::train_toy(model, seq);
    model.save((dir / "model").string());
    pipeline::run_eval(model, {seq}).write_csv((dir / "report.csv").string());
  };
  const fs::path d1 = fs::temp_directory_path() / "srnet_accept_det1";
  const fs::path d2 = fs::temp_directory_path() / "srnet_accept_det2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  run(d1);
  run(d2);
  bool identical = slurp(d1 / "report.csv") == slurp(d2 / "report.csv");
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1 / "model")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), d1);
    if (slurp(e.path()) != slurp(d2 / rel)) identical = false;
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
  std::ostringstream os;
  os << "two train+eval runs: " << files
     << " parameter files and the CSV report byte-identical: "
     << (identical ? "yes" : "no");
  detail = os.str();
  return identical && files > 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  std::vector<Criterion> criteria = {
      {1, "oracle equivalence, affinity path", criterion1},
      {2, "oracle equivalence, deformable conv", criterion2},
      {3, "bilinear contract", criterion3},
      {4, "softmax/attention normalization", criterion4},
      {5, "prototype contract", criterion5},
      {6, "gradient certification", criterion6},
      {7, "toy end-to-end training", criterion7},
      {8, "ablation direction on teleport", criterion8},
      {9, "ptm rounds schedule", criterion9},
      {10, "determinism", criterion10},
  };

  int failures = 0;
  for (auto& c : criteria) {
    if (!filter.empty() && std::to_string(c.id) != filter) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%2d] %-38s %s  (%.1f s) %s\n", c.id, c.name.c_str(),
                pass ? "PASS" : "FAIL", seconds_since(t0), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", failures);
  return failures;
}
