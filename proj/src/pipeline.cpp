#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "affinity.hpp"
#include "image_io.hpp"
#include "srtn_io.hpp"

namespace srnet::pipeline {

namespace fs = std::filesystem;

RunConfig RunConfig::from_kv(const KvConfig& kv) {
  RunConfig cfg;
  cfg.codec.stride = kv.get_int("stride", cfg.codec.stride);
  cfg.codec.ck = kv.get_int("ck", cfg.codec.ck);
  cfg.codec.cv = kv.get_int("cv", cfg.codec.cv);
  cfg.ptm.rounds = kv.get_int("ptm.rounds", cfg.ptm.rounds);
  cfg.ptm.gate_with_initial =
      kv.get_bool("ptm.gate_with_initial", cfg.ptm.gate_with_initial);
  cfg.fam.grid_g = kv.get_int("fam.grid_g", cfg.fam.grid_g);
  cfg.memory_capacity = kv.get_int("memory.capacity", cfg.memory_capacity);
  cfg.memory_stride = kv.get_int("memory.stride", cfg.memory_stride);
  cfg.fam_enabled = kv.get_bool("fam.enabled", cfg.fam_enabled);
  cfg.ptm_enabled = kv.get_bool("ptm.enabled", cfg.ptm_enabled);
  cfg.dtype = kv.get_string("dtype", cfg.dtype);
  cfg.seed = static_cast<uint64_t>(kv.get_int("seed", 1));
  cfg.train_lr = kv.get_double("train.lr", cfg.train_lr);
  cfg.train_momentum = kv.get_double("train.momentum", cfg.train_momentum);
  cfg.train_iters = kv.get_int("train.iters", cfg.train_iters);
  cfg.validate();
  return cfg;
}

KvConfig RunConfig::to_kv() const {
  KvConfig kv;
  kv.set("stride", std::to_string(codec.stride));
  kv.set("ck", std::to_string(codec.ck));
  kv.set("cv", std::to_string(codec.cv));
  kv.set("ptm.rounds", std::to_string(ptm.rounds));
  kv.set("ptm.gate_with_initial", ptm.gate_with_initial ? "true" : "false");
  kv.set("fam.grid_g", std::to_string(fam.grid_g));
  kv.set("memory.capacity", std::to_string(memory_capacity));
  kv.set("memory.stride", std::to_string(memory_stride));
  kv.set("fam.enabled", fam_enabled ? "true" : "false");
  kv.set("ptm.enabled", ptm_enabled ? "true" : "false");
  kv.set("dtype", dtype);
  kv.set("seed", std::to_string(seed));
  kv.set("train.lr", std::to_string(train_lr));
  kv.set("train.momentum", std::to_string(train_momentum));
  kv.set("train.iters", std::to_string(train_iters));
  return kv;
}

void RunConfig::validate() const {
  codec::CodecConfig c = codec;
  codec::trunk_stages(c);
  if (ptm.rounds < 1)
    fail(ErrorCode::invalid_argument, "ptm.rounds must be >= 1");
  if (fam.grid_g < 1)
    fail(ErrorCode::invalid_argument, "fam.grid_g must be >= 1");
  if (memory_capacity < 2)
    fail(ErrorCode::invalid_argument, "memory.capacity must be >= 2");
  if (memory_stride < 1)
    fail(ErrorCode::invalid_argument, "memory.stride must be >= 1");
  if (dtype != "f32" && dtype != "f64")
    fail(ErrorCode::invalid_argument, "dtype must be f32 or f64");
  if (train_iters < 0)
    fail(ErrorCode::invalid_argument, "train.iters must be >= 0");
}

template <typename T>
Model<T> Model<T>::create(const RunConfig& cfg, int frame_h, int frame_w) {
  cfg.validate();
  if (frame_h % cfg.codec.stride != 0 || frame_w % cfg.codec.stride != 0)
    fail(ErrorCode::invalid_argument,
         "frame extents must be divisible by stride " +
             std::to_string(cfg.codec.stride));
  Model<T> m;
  m.cfg = cfg;
  m.frame_h = frame_h;
  m.frame_w = frame_w;
  codec::register_codec(m.params, cfg.codec);
  fam::register_fam(m.params, cfg.codec.ck, cfg.codec.cv);
  ptm::register_ptm(m.params, cfg.codec.cv, m.feat_h() * m.feat_w());
  m.params.init_all(cfg.seed);
  return m;
}

template <typename T>
void Model<T>::save(const std::string& dir) const {
  fs::create_directories(dir);
  KvConfig kv = cfg.to_kv();
  kv.set("frame.height", std::to_string(frame_h));
  kv.set("frame.width", std::to_string(frame_w));
  kv.save((fs::path(dir) / "config.txt").string());
  params.save_dir((fs::path(dir) / "params").string());
}

template <typename T>
Model<T> Model<T>::load(const std::string& dir) {
  const KvConfig kv =
      KvConfig::from_file((fs::path(dir) / "config.txt").string());
  Model<T> m;
  m.cfg = RunConfig::from_kv(kv);
  m.frame_h = kv.get_int("frame.height", 0);
  m.frame_w = kv.get_int("frame.width", 0);
  if (m.frame_h <= 0 || m.frame_w <= 0)
    fail(ErrorCode::io, "model config lacks frame extents: " + dir);
  m.params.load_dir((fs::path(dir) / "params").string());
  return m;
}

namespace {

template <typename T>
Tensor<T> to_dtype(const Tensor<float>& x) {
  if constexpr (std::is_same_v<T, float>) {
    return x;
  } else {
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = static_cast<T>(x[i]);
    return y;
  }
}

template <typename T>
Tensor<T> object_mask_tensor(const std::vector<int>& labels, int h, int w,
                             int object) {
  Tensor<T> m({h, w, 1});
  for (int i = 0; i < h * w; ++i)
    m[i] = labels[static_cast<size_t>(i)] == object ? T(1) : T(0);
  return m;
}

}  // namespace

template <typename T>
ad::Var<T> object_forward(const Model<T>& model, ParamVars<T>& pv,
                          const codec::QueryFeatures<T>& query,
                          const ObjectMemoryVars<T>& mem) {
  ad::Tape<T>& tape = *query.key.tape;
  const int h = model.feat_h(), w = model.feat_w();
  const int cv = model.cfg.codec.cv;

  ad::Var<T> f_mem;
  if (mem.global) {
    ad::Var<T> kg = flatten_pixels(mem.global->first);
    ad::Var<T> vg = flatten_pixels(mem.global->second);
    ad::Var<T> kq = flatten_pixels(query.key);
    ad::Var<T> f = affinity_readout(kg, kq, vg);  // [HW,Cv]
    f_mem = ad::reshape(f, {h, w, cv});
  } else {
    f_mem = tape.leaf(Tensor<T>({h, w, cv}));  // no global memory yet
  }

  ad::Var<T> f_loc;
  if (model.cfg.fam_enabled) {
    f_loc = fam::fam_forward(query.key, mem.local_key, mem.local_value,
                             query.value, pv, model.cfg.fam);
  } else {
    f_loc = tape.leaf(Tensor<T>({h, w, cv}));
  }

  // the prototype falls back to the reference frame's values until global
  // memory exists
  ad::Var<T> proto_src = mem.global ? flatten_pixels(mem.global->second)
                                    : flatten_pixels(mem.local_value);

  ad::Var<T> f_pro;
  if (model.cfg.ptm_enabled) {
    f_pro = ptm::run_ptm(f_mem, f_loc, proto_src, pv, model.cfg.ptm).f_pro;
  } else {
    f_pro = ptm::fuse(f_mem, f_loc, pv);
  }
  return codec::decode(f_pro, query.skip, pv, model.cfg.codec);
}

template <typename T>
Session<T>::Session(const Model<T>& model, int num_objects)
    : model_(&model), num_objects_(num_objects) {
  if (num_objects < 1)
    fail(ErrorCode::invalid_argument, "session needs at least one object");
  for (int o = 0; o < num_objects; ++o)
    banks_.emplace_back(model.cfg.memory_capacity);
}

template <typename T>
void Session<T>::set_reference(const Tensor<T>& frame,
                               const std::vector<int>& labels) {
  if (t_ != 0)
    fail(ErrorCode::protocol, "reference frame already registered");
  if (frame.extent(0) != model_->frame_h || frame.extent(1) != model_->frame_w)
    fail(ErrorCode::invalid_argument,
         "frame extents do not match the model (" +
             std::to_string(model_->frame_h) + "x" +
             std::to_string(model_->frame_w) + ")");
  for (int lab : labels)
    if (lab < 0 || lab > num_objects_)
      fail(ErrorCode::invalid_argument,
           "reference labels exceed the object count");
  ad::Tape<T> tape(false);
  ParamVars<T> pv(tape, model_->params, false);
  ad::Var<T> f = tape.leaf(frame);
  for (int o = 0; o < num_objects_; ++o) {
    ad::Var<T> mask = tape.leaf(object_mask_tensor<T>(
        labels, model_->frame_h, model_->frame_w, o + 1));
    auto [key, value] = codec::encode_memory(f, mask, pv, model_->cfg.codec);
    banks_[static_cast<size_t>(o)].append(key.val(), value.val());
  }
  t_ = 1;
}

template <typename T>
std::vector<int> Session<T>::step(const Tensor<T>& frame,
                                  Tensor<T>* probs_out) {
  if (t_ == 0)
    fail(ErrorCode::protocol,
         "frame 0 must be registered with its annotation before stepping");
  ad::Tape<T> tape(false);
  ParamVars<T> pv(tape, model_->params, false);
  ad::Var<T> f = tape.leaf(frame);
  codec::QueryFeatures<T> q = codec::encode_query(f, pv, model_->cfg.codec);

  std::vector<ad::Var<T>> logits;
  for (int o = 0; o < num_objects_; ++o) {
    const MemoryBank<T>& bank = banks_[static_cast<size_t>(o)];
    ObjectMemoryVars<T> mem;
    auto local = bank.local_view();
    mem.local_key = tape.leaf(local->first);
    mem.local_value = tape.leaf(local->second);
    if (auto global = bank.global_view())
      mem.global = std::make_pair(tape.leaf(std::move(global->first)),
                                  tape.leaf(std::move(global->second)));
    logits.push_back(object_forward(*model_, pv, q, mem));
  }
  ad::Var<T> logp = codec::soft_aggregate_logp(logits);
  std::vector<int> labels = codec::logp_to_labels(logp.val());
  if (probs_out) {
    Tensor<T> probs(logp.val().shape());
    for (int64_t i = 0; i < probs.numel(); ++i)
      probs[i] = std::exp(logp.val()[i]);
    *probs_out = std::move(probs);
  }

  const int frame_index = t_;
  ++t_;
  if (frame_index % model_->cfg.memory_stride == 0) {
    for (int o = 0; o < num_objects_; ++o) {
      ad::Var<T> mask = tape.leaf(object_mask_tensor<T>(
          labels, model_->frame_h, model_->frame_w, o + 1));
      auto [key, value] = codec::encode_memory(f, mask, pv, model_->cfg.codec);
      banks_[static_cast<size_t>(o)].append(key.val(), value.val());
    }
  }
  return labels;
}

template <typename T>
ad::Var<T> build_training_loss(ad::Tape<T>& tape, ParamVars<T>& pv,
                               const Model<T>& model,
                               const synth::SyntheticSequence& seq,
                               int query_frame) {
  const int t_total = static_cast<int>(seq.frames.size());
  if (query_frame < 1 || query_frame >= t_total)
    fail(ErrorCode::invalid_argument, "query frame out of range");
  const int h = model.frame_h, w = model.frame_w;

  ad::Var<T> frame_q =
      tape.leaf(to_dtype<T>(seq.frames[static_cast<size_t>(query_frame)]));
  codec::QueryFeatures<T> q = codec::encode_query(frame_q, pv, model.cfg.codec);

  ad::Var<T> frame_ref = tape.leaf(to_dtype<T>(seq.frames[0]));
  ad::Var<T> frame_prev;
  if (query_frame > 1)
    frame_prev = tape.leaf(
        to_dtype<T>(seq.frames[static_cast<size_t>(query_frame - 1)]));

  std::vector<ad::Var<T>> logits;
  for (int o = 1; o <= seq.num_objects; ++o) {
    ad::Var<T> mask_ref =
        tape.leaf(object_mask_tensor<T>(seq.labels[0], h, w, o));
    auto [k_ref, v_ref] =
        codec::encode_memory(frame_ref, mask_ref, pv, model.cfg.codec);
    ObjectMemoryVars<T> mem;
    if (query_frame == 1) {
      // the reference doubles as local memory until a second frame exists
      mem.local_key = k_ref;
      mem.local_value = v_ref;
    } else {
      ad::Var<T> mask_prev = tape.leaf(object_mask_tensor<T>(
          seq.labels[static_cast<size_t>(query_frame - 1)], h, w, o));
      auto [k_prev, v_prev] =
          codec::encode_memory(frame_prev, mask_prev, pv, model.cfg.codec);
      mem.local_key = k_prev;
      mem.local_value = v_prev;
      mem.global = std::make_pair(ad::stack0<T>({k_ref}), ad::stack0<T>({v_ref}));
    }
    logits.push_back(object_forward(model, pv, q, mem));
  }
  ad::Var<T> logp = codec::soft_aggregate_logp(logits);
  return ad::nll_gather(logp, seq.labels[static_cast<size_t>(query_frame)]);
}

template <typename T>
TrainResult train_toy(Model<T>& model, const synth::SyntheticSequence& seq) {
  const int t_total = static_cast<int>(seq.frames.size());
  if (t_total < 2)
    fail(ErrorCode::invalid_argument, "training needs at least two frames");
  if (seq.spec.height != model.frame_h || seq.spec.width != model.frame_w)
    fail(ErrorCode::invalid_argument,
         "sequence extents do not match the model");

  std::map<std::string, Tensor<T>> velocity;
  const T lr = static_cast<T>(model.cfg.train_lr);
  const T mu = static_cast<T>(model.cfg.train_momentum);

  TrainResult result;
  for (int it = 0; it < model.cfg.train_iters; ++it) {
    const int tq = 1 + (it % (t_total - 1));
    ad::Tape<T> tape(true);
    ParamVars<T> pv(tape, model.params, true);
    ad::Var<T> loss = build_training_loss(tape, pv, model, seq, tq);
    const double lv = static_cast<double>(loss.val()[0]);
    if (!std::isfinite(lv))
      fail(ErrorCode::numeric, "training diverged: loss is not finite at "
                               "iteration " +
                                   std::to_string(it));
    result.losses.push_back(lv);
    tape.backward(loss);
    for (auto& [name, grad] : tape.named_grads()) {
      Tensor<T>& p = model.params.get(name);
      auto [vit, inserted] = velocity.try_emplace(name, Tensor<T>(p.shape()));
      Tensor<T>& v = vit->second;
      for (int64_t i = 0; i < p.numel(); ++i) {
        v[i] = mu * v[i] - lr * grad[i];
        p[i] += v[i];
      }
    }
  }
  result.final_loss = result.losses.empty() ? 0.0 : result.losses.back();
  return result;
}

metrics::EvalReport run_eval(const Model<float>& model,
                             const std::vector<synth::SyntheticSequence>& seqs) {
  metrics::EvalReport report;
  for (const auto& seq : seqs) {
    const int t_total = static_cast<int>(seq.frames.size());
    Session<float> session(model, seq.num_objects);
    session.set_reference(seq.frames[0], seq.labels[0]);
    std::vector<std::vector<int>> preds;
    for (int t = 1; t < t_total; ++t)
      preds.push_back(session.step(seq.frames[static_cast<size_t>(t)]));
    const int h = seq.spec.height, w = seq.spec.width;
    for (int o = 1; o <= seq.num_objects; ++o) {
      double j_sum = 0, f_sum = 0;
      for (int t = 1; t < t_total; ++t) {
        const auto pred = metrics::BinaryMask::from_labels(
            preds[static_cast<size_t>(t - 1)], h, w, o);
        const auto gt = metrics::BinaryMask::from_labels(
            seq.labels[static_cast<size_t>(t)], h, w, o);
        j_sum += metrics::jaccard(pred, gt);
        f_sum += metrics::contour_f(pred, gt);
      }
      metrics::ScoreRow row;
      row.sequence = seq.spec.name;
      row.object = o;
      row.j = j_sum / (t_total - 1);
      row.f = f_sum / (t_total - 1);
      report.rows.push_back(row);
    }
  }
  return report;
}

namespace {

std::vector<fs::path> sorted_files(const std::string& dir,
                                   const std::vector<std::string>& exts) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) fail(ErrorCode::io, "not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    for (const auto& want : exts)
      if (ext == want) {
        out.push_back(e.path());
        break;
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

GrayImage labels_to_gray(const std::vector<int>& labels, int h, int w) {
  GrayImage img;
  img.h = h;
  img.w = w;
  img.pix.resize(labels.size());
  for (size_t i = 0; i < labels.size(); ++i)
    img.pix[i] = static_cast<uint8_t>(std::clamp(labels[i], 0, 255));
  return img;
}

}  // namespace

double infer_dir(const Model<float>& model, const std::string& frames_dir,
                 const std::string& mask0_path, const std::string& out_dir) {
  const auto frame_files = sorted_files(frames_dir, {".ppm", ".srtn"});
  if (frame_files.empty())
    fail(ErrorCode::io, "no frames (*.ppm or *.srtn) in " + frames_dir);
  int h = 0, w = 0;
  const std::vector<int> labels0 = read_mask_labels(mask0_path, h, w);
  const int num_objects = *std::max_element(labels0.begin(), labels0.end());
  if (num_objects < 1)
    fail(ErrorCode::invalid_argument,
         "reference mask has no foreground object: " + mask0_path);

  fs::create_directories(out_dir);
  Session<float> session(model, num_objects);
  session.set_reference(read_frame(frame_files[0].string()), labels0);
  // the reference annotation is echoed as the frame-0 prediction
  write_pgm((fs::path(out_dir) / "mask_0000.pgm").string(),
            labels_to_gray(labels0, h, w));

  const auto start = std::chrono::steady_clock::now();
  char name[64];
  for (size_t t = 1; t < frame_files.size(); ++t) {
    const std::vector<int> pred =
        session.step(read_frame(frame_files[t].string()));
    std::snprintf(name, sizeof(name), "mask_%04zu.pgm", t);
    write_pgm((fs::path(out_dir) / name).string(), labels_to_gray(pred, h, w));
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  const size_t predicted = frame_files.size() - 1;
  return predicted > 0 && elapsed.count() > 0
             ? static_cast<double>(predicted) / elapsed.count()
             : 0.0;
}

metrics::EvalReport eval_dirs(const std::string& pred_dir,
                              const std::string& gt_dir) {
  // a directory of PGMs is one sequence; a directory of directories is many
  std::vector<std::pair<std::string, fs::path>> sequences;
  if (!sorted_files(pred_dir, {".pgm"}).empty()) {
    sequences.emplace_back(fs::path(pred_dir).filename().string(), pred_dir);
  } else {
    for (const auto& e : fs::directory_iterator(pred_dir))
      if (e.is_directory())
        sequences.emplace_back(e.path().filename().string(), e.path());
    std::sort(sequences.begin(), sequences.end());
  }
  if (sequences.empty())
    fail(ErrorCode::io, "no predictions found in " + pred_dir);

  metrics::EvalReport report;
  for (const auto& [name, pdir] : sequences) {
    const fs::path gdir = sequences.size() == 1 && name == fs::path(pred_dir).filename().string() &&
                                  !sorted_files(pred_dir, {".pgm"}).empty()
                              ? fs::path(gt_dir)
                              : fs::path(gt_dir) / name;
    const auto pred_files = sorted_files(pdir.string(), {".pgm"});
    if (pred_files.empty()) fail(ErrorCode::io, "no PGMs in " + pdir.string());
    int num_objects = 0;
    std::vector<std::vector<int>> preds, gts;
    int h = 0, w = 0;
    for (const auto& pf : pred_files) {
      const fs::path gf = gdir / pf.filename();
      int ph = 0, pw = 0, gh = 0, gw = 0;
      preds.push_back(read_mask_labels(pf.string(), ph, pw));
      gts.push_back(read_mask_labels(gf.string(), gh, gw));
      if (ph != gh || pw != gw)
        fail(ErrorCode::invalid_argument,
             "prediction/ground-truth extents differ for " + pf.string());
      h = ph;
      w = pw;
      for (int v : gts.back()) num_objects = std::max(num_objects, v);
    }
    // frame 0 is the given annotation and is excluded from scoring
    for (int o = 1; o <= num_objects; ++o) {
      double j_sum = 0, f_sum = 0;
      int counted = 0;
      for (size_t t = 1; t < preds.size(); ++t) {
        const auto pred = metrics::BinaryMask::from_labels(preds[t], h, w, o);
        const auto gt = metrics::BinaryMask::from_labels(gts[t], h, w, o);
        j_sum += metrics::jaccard(pred, gt);
        f_sum += metrics::contour_f(pred, gt);
        ++counted;
      }
      metrics::ScoreRow row;
      row.sequence = name;
      row.object = o;
      row.j = counted ? j_sum / counted : 0.0;
      row.f = counted ? f_sum / counted : 0.0;
      report.rows.push_back(row);
    }
  }
  return report;
}

RunConfig apply_variant(const RunConfig& base, const std::string& variant) {
  RunConfig cfg = base;
  if (variant == "default") return cfg;
  if (variant == "fam_off") {
    cfg.fam_enabled = false;
    return cfg;
  }
  if (variant == "ptm_off") {
    cfg.ptm_enabled = false;
    return cfg;
  }
  if (variant.rfind("rounds", 0) == 0) {
    const std::string n = variant.substr(6);
    if (n == "1" || n == "2" || n == "3" || n == "4") {
      cfg.ptm.rounds = std::stoi(n);
      return cfg;
    }
  }
  if (variant.rfind("interval", 0) == 0) {
    const std::string n = variant.substr(8);
    if (n == "1" || n == "2" || n == "4") {
      cfg.memory_stride = std::stoi(n);
      return cfg;
    }
  }
  fail(ErrorCode::invalid_argument, "unknown ablation toggle: " + variant);
}

std::vector<AblateRow> ablate(const RunConfig& base,
                              const synth::SyntheticSequence& seq,
                              const std::vector<std::string>& variants) {
  std::vector<AblateRow> rows;
  for (const std::string& variant : variants) {
    const RunConfig cfg = apply_variant(base, variant);
    Model<float> model =
        Model<float>::create(cfg, seq.spec.height, seq.spec.width);
    const TrainResult tr = train_toy(model, seq);
    const auto start = std::chrono::steady_clock::now();
    const metrics::EvalReport report = run_eval(model, {seq});
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    AblateRow row;
    row.variant = variant;
    row.j = report.mean_j();
    row.f = report.mean_f();
    row.jf = report.mean_jf();
    row.final_loss = tr.final_loss;
    const int predicted = static_cast<int>(seq.frames.size()) - 1;
    row.fps = elapsed.count() > 0 ? predicted / elapsed.count() : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablate_table(const std::vector<AblateRow>& rows) {
  std::ostringstream os;
  char buf[160];
  os << "variant      J       F       J&F     loss     fps\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s %-7.4f %-7.4f %-7.4f %-8.4f %.2f\n",
                  r.variant.c_str(), r.j, r.f, r.jf, r.final_loss, r.fps);
    os << buf;
  }
  return os.str();
}

#define SRNET_INSTANTIATE_PIPELINE(T)                                         \
  template struct Model<T>;                                                   \
  template class Session<T>;                                                  \
  template ad::Var<T> object_forward<T>(const Model<T>&, ParamVars<T>&,       \
                                        const codec::QueryFeatures<T>&,       \
                                        const ObjectMemoryVars<T>&);          \
  template ad::Var<T> build_training_loss<T>(ad::Tape<T>&, ParamVars<T>&,     \
                                             const Model<T>&,                 \
                                             const synth::SyntheticSequence&, \
                                             int);                            \
  template TrainResult train_toy<T>(Model<T>&,                                \
                                    const synth::SyntheticSequence&);

SRNET_INSTANTIATE_PIPELINE(float)
SRNET_INSTANTIATE_PIPELINE(double)

#undef SRNET_INSTANTIATE_PIPELINE

}  // namespace srnet::pipeline
