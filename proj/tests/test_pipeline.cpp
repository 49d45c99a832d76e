#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "image_io.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using namespace srnet;
namespace fs = std::filesystem;

namespace {

synth::SequenceSpec tiny_seq_spec(int frames = 4, uint64_t seed = 3) {
  synth::SequenceSpec spec;
  spec.name = "tiny";
  spec.frames = frames;
  spec.height = 16;
  spec.width = 16;
  spec.seed = seed;
  synth::ObjectSpec obj;
  obj.x = 5;
  obj.y = 8;
  obj.size = 6;
  obj.vx = 1.0;
  obj.vy = 0.5;
  spec.objects = {obj};
  return spec;
}

pipeline::RunConfig tiny_cfg() {
  pipeline::RunConfig cfg;
  cfg.codec.stride = 4;
  cfg.codec.ck = 4;
  cfg.codec.cv = 8;
  cfg.ptm.rounds = 2;
  cfg.seed = 9;
  cfg.train_lr = 0.05;
  cfg.train_iters = 8;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("synthetic sequences are bit-reproducible from spec + seed") {
  const auto spec = tiny_seq_spec();
  const auto a = synth::generate(spec);
  const auto b = synth::generate(spec);
  REQUIRE(a.frames.size() == b.frames.size());
  for (size_t t = 0; t < a.frames.size(); ++t) {
    for (int64_t i = 0; i < a.frames[t].numel(); ++i)
      CHECK(a.frames[t][i] == b.frames[t][i]);
    CHECK(a.labels[t] == b.labels[t]);
  }
  // a different seed changes the texture
  auto spec2 = spec;
  spec2.seed = 4;
  const auto c = synth::generate(spec2);
  double diff = 0;
  for (int64_t i = 0; i < a.frames[0].numel(); ++i)
    diff += std::abs(double(a.frames[0][i]) - double(c.frames[0][i]));
  CHECK(diff > 0.0);
}

TEST_CASE("sequence spec parsing: objects, teleports, occluder") {
  KvConfig kv = KvConfig::from_string(
      "seq.name = demo\n"
      "seq.frames = 6\n"
      "seq.height = 32\n"
      "seq.width = 48\n"
      "seq.seed = 11\n"
      "object1.shape = disc\n"
      "object1.x = 10\n"
      "object1.y = 12\n"
      "object1.size = 8\n"
      "object1.vx = 2\n"
      "object2.shape = rectangle\n"
      "object2.x = 30\n"
      "object2.teleport_frame = 3\n"
      "object2.teleport_x = 8\n"
      "object2.teleport_y = 20\n"
      "occluder = true\n"
      "occluder.width = 6\n");
  const auto spec = synth::parse_sequence_spec(kv);
  CHECK(spec.name == "demo");
  CHECK(spec.frames == 6);
  CHECK(spec.width == 48);
  REQUIRE(spec.objects.size() == 2);
  CHECK(spec.objects[0].shape == synth::ObjectSpec::Shape::disc);
  CHECK(spec.objects[1].teleport_frame == 3);
  CHECK(spec.occluder.enabled);

  const auto seq = synth::generate(spec);
  CHECK(seq.num_objects == 2);
  // teleport moves object 2 to the requested center at frame 3
  CHECK(seq.labels[3][size_t(20) * 48 + 8] == 2);

  CHECK_THROWS_AS(synth::parse_sequence_spec(KvConfig::from_string(
                      "object1.shape = hexagon\n")),
                  Error);
}

TEST_CASE("run config kv round trip and validation") {
  pipeline::RunConfig cfg = tiny_cfg();
  cfg.ptm.gate_with_initial = true;
  cfg.memory_stride = 2;
  KvConfig kv = cfg.to_kv();
  pipeline::RunConfig back = pipeline::RunConfig::from_kv(kv);
  CHECK(back.codec.cv == cfg.codec.cv);
  CHECK(back.ptm.gate_with_initial);
  CHECK(back.memory_stride == 2);
  // defaults carry the documented values
  pipeline::RunConfig dflt;
  CHECK(dflt.codec.stride == 4);
  CHECK(dflt.codec.ck == 64);
  CHECK(dflt.codec.cv == 256);
  CHECK(dflt.ptm.rounds == 3);
  CHECK(dflt.fam.grid_g == 1);
  CHECK(dflt.memory_capacity == 8);

  KvConfig bad = cfg.to_kv();
  bad.set("dtype", "f16");
  CHECK_THROWS_AS(pipeline::RunConfig::from_kv(bad), Error);
  KvConfig bad2 = cfg.to_kv();
  bad2.set("stride", "3");
  CHECK_THROWS_AS(pipeline::RunConfig::from_kv(bad2), Error);
}

TEST_CASE("model save/load round trip is bitwise") {
  auto model = pipeline::Model<float>::create(tiny_cfg(), 16, 16);
  const fs::path dir = fs::temp_directory_path() / "model_rt";
  fs::remove_all(dir);
  model.save(dir.string());
  auto loaded = pipeline::Model<float>::load(dir.string());
  CHECK(loaded.frame_h == 16);
  CHECK(loaded.cfg.codec.cv == model.cfg.codec.cv);
  for (const auto& name : model.params.names()) {
    const auto& a = model.params.get(name);
    const auto& b = loaded.params.get(name);
    REQUIRE(a.shape() == b.shape());
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
  }
  fs::remove_all(dir);
}

TEST_CASE("session protocol: reference first, then steps") {
  auto model = pipeline::Model<float>::create(tiny_cfg(), 16, 16);
  const auto seq = synth::generate(tiny_seq_spec());
  pipeline::Session<float> session(model, 1);
  CHECK_THROWS_AS(session.step(seq.frames[1]), Error);  // unregistered frame 0
  session.set_reference(seq.frames[0], seq.labels[0]);
  CHECK_THROWS_AS(session.set_reference(seq.frames[0], seq.labels[0]), Error);
  const auto labels = session.step(seq.frames[1]);
  CHECK(labels.size() == size_t(16) * 16);
}

TEST_CASE("memory routing: local is the previous frame, global the rest") {
  auto model = pipeline::Model<float>::create(tiny_cfg(), 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(6));
  pipeline::Session<float> session(model, 1);
  session.set_reference(seq.frames[0], seq.labels[0]);
  CHECK(session.bank(0).size() == 1);
  CHECK_FALSE(session.bank(0).has_global());  // frame 1 sees no global block

  session.step(seq.frames[1]);
  CHECK(session.bank(0).size() == 2);
  CHECK(session.bank(0).has_global());
  session.step(seq.frames[2]);
  session.step(seq.frames[3]);
  // after t steps the bank holds min(t+1, capacity) frames, newest last
  CHECK(session.bank(0).size() == 4);
  CHECK(session.bank(0).frame_id_at(session.bank(0).size() - 1) == 3);
  auto global = session.bank(0).global_view();
  REQUIRE(global.has_value());
  CHECK(global->first.extent(0) == 3);
}

TEST_CASE("bank respects capacity during a session") {
  auto cfg = tiny_cfg();
  cfg.memory_capacity = 3;
  auto model = pipeline::Model<float>::create(cfg, 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(8));
  pipeline::Session<float> session(model, 1);
  session.set_reference(seq.frames[0], seq.labels[0]);
  for (int t = 1; t < 8; ++t) session.step(seq.frames[size_t(t)]);
  CHECK(session.bank(0).size() == 3);
  CHECK(session.bank(0).frame_id_at(0) == 0);  // reference pinned
  CHECK(session.bank(0).frame_id_at(2) == 7);
}

TEST_CASE("memory insertion cadence follows memory.stride") {
  auto cfg = tiny_cfg();
  cfg.memory_stride = 2;
  auto model = pipeline::Model<float>::create(cfg, 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(6));
  pipeline::Session<float> session(model, 1);
  session.set_reference(seq.frames[0], seq.labels[0]);
  for (int t = 1; t <= 4; ++t) session.step(seq.frames[size_t(t)]);
  // frames 0, 2, 4 inserted; 1 and 3 skipped
  REQUIRE(session.bank(0).size() == 3);
  CHECK(session.bank(0).frame_id_at(0) == 0);
  CHECK(session.bank(0).frame_id_at(1) == 1);  // bank ids count insertions
  CHECK(session.bank(0).frame_id_at(2) == 2);
}

TEST_CASE("train_toy: zero learning rate keeps the loss curve constant") {
  auto cfg = tiny_cfg();
  cfg.train_lr = 0.0;
  cfg.train_iters = 5;
  auto model = pipeline::Model<float>::create(cfg, 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(2));  // one query frame
  const auto result = pipeline::train_toy(model, seq);
  REQUIRE(result.losses.size() == 5);
  for (double l : result.losses) CHECK(l == result.losses[0]);
}

TEST_CASE("train_toy reduces the loss on a tiny overfit run") {
  auto cfg = tiny_cfg();
  cfg.train_lr = 0.1;
  cfg.train_iters = 30;
  auto model = pipeline::Model<float>::create(cfg, 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(2));
  const auto result = pipeline::train_toy(model, seq);
  CHECK(result.losses.back() < result.losses.front());
}

TEST_CASE("static sequence overfits to J >= 0.99 on frame 1") {
  synth::SequenceSpec spec;
  spec.frames = 3;
  spec.height = 32;
  spec.width = 32;
  spec.seed = 5;
  synth::ObjectSpec obj;
  obj.x = 13;
  obj.y = 17;
  obj.size = 10;
  obj.vx = 0;
  obj.vy = 0;
  spec.objects = {obj};
  const auto seq = synth::generate(spec);

  pipeline::RunConfig cfg;
  cfg.codec.stride = 4;
  cfg.codec.ck = 8;
  cfg.codec.cv = 16;
  cfg.seed = 2;
  cfg.train_lr = 0.2;
  cfg.train_iters = 120;
  auto model = pipeline::Model<float>::create(cfg, 32, 32);
  pipeline::train_toy(model, seq);

  pipeline::Session<float> session(model, 1);
  session.set_reference(seq.frames[0], seq.labels[0]);
  const auto pred = session.step(seq.frames[1]);
  const auto pm = metrics::BinaryMask::from_labels(pred, 32, 32, 1);
  const auto gm = metrics::BinaryMask::from_labels(seq.labels[1], 32, 32, 1);
  CHECK(metrics::jaccard(pm, gm) >= 0.99);
}

TEST_CASE("no dead modules: every module owns a nonzero gradient at init") {
  auto model = pipeline::Model<double>::create(tiny_cfg(), 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(3));
  ad::Tape<double> tape(true);
  ParamVars<double> pv(tape, model.params, true);
  ad::Var<double> loss =
      pipeline::build_training_loss(tape, pv, model, seq, 2);
  CHECK(std::isfinite(loss.val()[0]));
  tape.backward(loss);
  const auto grads = tape.named_grads();
  const std::vector<std::string> modules = {"enc.q", "enc.m", "fam.", "ptm.",
                                            "dec."};
  for (const std::string& prefix : modules) {
    double norm = 0;
    for (const auto& [name, g] : grads) {
      if (name.rfind(prefix, 0) != 0) continue;
      for (int64_t i = 0; i < g.numel(); ++i) norm += g[i] * g[i];
    }
    INFO("module ", prefix);
    CHECK(norm > 0.0);
    CHECK(std::isfinite(norm));
  }
}

TEST_CASE("frame-0 mask is echoed exactly and eval scores frames 1..T-1") {
  const auto spec = tiny_seq_spec(3);
  const auto seq = synth::generate(spec);
  const fs::path root = fs::temp_directory_path() / "infer_rt";
  fs::remove_all(root);
  synth::write_sequence(seq, (root / "data").string());

  auto model = pipeline::Model<float>::create(tiny_cfg(), 16, 16);
  const double fps = pipeline::infer_dir(
      model, (root / "data" / "frames").string(),
      (root / "data" / "gt" / "mask_0000.pgm").string(),
      (root / "out").string());
  CHECK(fps > 0.0);
  // echo check: frame-0 prediction equals the annotation byte for byte
  CHECK(slurp(root / "out" / "mask_0000.pgm") ==
        slurp(root / "data" / "gt" / "mask_0000.pgm"));

  const auto report =
      pipeline::eval_dirs((root / "out").string(), (root / "data" / "gt").string());
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].object == 1);
  CHECK(report.rows[0].j >= 0.0);
  CHECK(report.rows[0].j <= 1.0);
  fs::remove_all(root);
}

TEST_CASE("perfect and empty predictions bracket the eval scores") {
  const auto seq = synth::generate(tiny_seq_spec(3));
  const fs::path root = fs::temp_directory_path() / "eval_oracle";
  fs::remove_all(root);
  synth::write_sequence(seq, (root / "a").string());
  // perfect predictions: copy the ground truth
  fs::create_directories(root / "perfect");
  for (const auto& e : fs::directory_iterator(root / "a" / "gt"))
    fs::copy_file(e.path(), root / "perfect" / e.path().filename());
  auto perfect =
      pipeline::eval_dirs((root / "perfect").string(), (root / "a" / "gt").string());
  CHECK(perfect.mean_j() == doctest::Approx(1.0));
  CHECK(perfect.mean_f() == doctest::Approx(1.0));

  // all-background predictions score J = 0 on nonempty objects
  fs::create_directories(root / "none");
  for (const auto& e : fs::directory_iterator(root / "a" / "gt")) {
    GrayImage img = read_pgm(e.path().string());
    std::fill(img.pix.begin(), img.pix.end(), uint8_t(0));
    write_pgm((root / "none" / e.path().filename()).string(), img);
  }
  auto none =
      pipeline::eval_dirs((root / "none").string(), (root / "a" / "gt").string());
  CHECK(none.mean_j() == doctest::Approx(0.0));
  fs::remove_all(root);
}

TEST_CASE("train + eval is deterministic: byte-identical params and csv") {
  auto run = [&](const fs::path& dir) {
    auto cfg = tiny_cfg();
    cfg.train_iters = 4;
    auto model = pipeline::Model<float>::create(cfg, 16, 16);
    const auto seq = synth::generate(tiny_seq_spec(3));
    pipeline::train_toy(model, seq);
    model.save((dir / "model").string());
    const auto report = pipeline::run_eval(model, {seq});
    report.write_csv((dir / "report.csv").string());
  };
  const fs::path d1 = fs::temp_directory_path() / "det_run1";
  const fs::path d2 = fs::temp_directory_path() / "det_run2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  run(d1);
  run(d2);
  CHECK(slurp(d1 / "report.csv") == slurp(d2 / "report.csv"));
  for (const auto& e : fs::recursive_directory_iterator(d1 / "model")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), d1);
    CHECK(slurp(e.path()) == slurp(d2 / rel));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("ablation toggles") {
  pipeline::RunConfig base = tiny_cfg();
  CHECK_FALSE(pipeline::apply_variant(base, "fam_off").fam_enabled);
  CHECK_FALSE(pipeline::apply_variant(base, "ptm_off").ptm_enabled);
  CHECK(pipeline::apply_variant(base, "rounds4").ptm.rounds == 4);
  CHECK(pipeline::apply_variant(base, "interval2").memory_stride == 2);
  CHECK(pipeline::apply_variant(base, "default").fam_enabled);
  CHECK_THROWS_AS(pipeline::apply_variant(base, "rounds9"), Error);
  CHECK_THROWS_AS(pipeline::apply_variant(base, "nonsense"), Error);
}

TEST_CASE("ablate produces one comparable row per variant") {
  auto cfg = tiny_cfg();
  cfg.train_iters = 2;
  const auto seq = synth::generate(tiny_seq_spec(3));
  const auto rows = pipeline::ablate(cfg, seq, {"default", "fam_off", "ptm_off"});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].variant == "default");
  for (const auto& r : rows) {
    CHECK(r.j >= 0.0);
    CHECK(r.j <= 1.0);
    CHECK(r.fps > 0.0);
  }
  const std::string table = pipeline::format_ablate_table(rows);
  CHECK(table.find("fam_off") != std::string::npos);
}

TEST_CASE("both modules disabled still reduces to readout + decode") {
  auto cfg = tiny_cfg();
  cfg.fam_enabled = false;
  cfg.ptm_enabled = false;
  auto model = pipeline::Model<float>::create(cfg, 16, 16);
  const auto seq = synth::generate(tiny_seq_spec(3));
  pipeline::Session<float> session(model, 1);
  session.set_reference(seq.frames[0], seq.labels[0]);
  const auto labels = session.step(seq.frames[1]);
  CHECK(labels.size() == size_t(16) * 16);
}
