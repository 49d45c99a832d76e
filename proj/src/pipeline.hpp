#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codec.hpp"
#include "config.hpp"
#include "fam.hpp"
#include "memory_bank.hpp"
#include "metrics.hpp"
#include "ptm.hpp"
#include "synth.hpp"

// End-to-end orchestration: per-frame inference with the two-block memory,
// toy training on synthetic sequences, evaluation, and ablation toggles.
namespace srnet::pipeline {

struct RunConfig {
  codec::CodecConfig codec;  // stride 4, ck 64, cv 256 by default
  ptm::PtmConfig ptm;        // rounds 3
  fam::FamConfig fam;        // grid factor 1
  int memory_capacity = 8;
  int memory_stride = 1;  // insertion cadence / local sampling interval
  bool fam_enabled = true;
  bool ptm_enabled = true;
  std::string dtype = "f32";  // f32 pipeline, f64 for gradient checks
  uint64_t seed = 1;
  double train_lr = 0.2;
  double train_momentum = 0.9;
  int train_iters = 200;

  static RunConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
  void validate() const;
};

// Parameters plus the frame geometry they are bound to (the PTM position
// embedding fixes the feature resolution).
template <typename T>
struct Model {
  RunConfig cfg;
  int frame_h = 0, frame_w = 0;
  ParamSet<T> params;

  int feat_h() const { return frame_h / cfg.codec.stride; }
  int feat_w() const { return frame_w / cfg.codec.stride; }

  static Model create(const RunConfig& cfg, int frame_h, int frame_w);
  void save(const std::string& dir) const;
  static Model load(const std::string& dir);
};

// One object's memory views bound to a tape.
template <typename T>
struct ObjectMemoryVars {
  std::optional<std::pair<ad::Var<T>, ad::Var<T>>> global;  // [T-1,H,W,C]
  ad::Var<T> local_key, local_value;
};

// Single-object forward: memory readout, alignment, prototype matching, and
// decoding to a full-resolution logit map.
template <typename T>
ad::Var<T> object_forward(const Model<T>& model, ParamVars<T>& pv,
                          const codec::QueryFeatures<T>& query,
                          const ObjectMemoryVars<T>& mem);

// Per-video inference state. Frame 0 must be registered with its annotation
// before the first step; its mask is echoed, and every later frame is
// predicted then inserted into memory on the configured cadence.
template <typename T>
class Session {
 public:
  Session(const Model<T>& model, int num_objects);

  void set_reference(const Tensor<T>& frame, const std::vector<int>& labels);
  std::vector<int> step(const Tensor<T>& frame,
                        Tensor<T>* probs_out = nullptr);

  int num_objects() const { return num_objects_; }
  int frames_seen() const { return t_; }
  const MemoryBank<T>& bank(int object) const {
    return banks_[static_cast<size_t>(object)];
  }

 private:
  const Model<T>* model_;
  int num_objects_;
  std::vector<MemoryBank<T>> banks_;
  int t_ = 0;
};

struct TrainResult {
  std::vector<double> losses;
  double final_loss = 0.0;
};

// Per-pixel cross-entropy on frames 1..T-1 against ground truth, plain SGD
// with momentum. Each iteration takes one query frame (cycling through the
// sequence) with teacher-forced memory: the reference frame plus the frame
// preceding the query.
template <typename T>
TrainResult train_toy(Model<T>& model, const synth::SyntheticSequence& seq);

// Builds the training loss for one query frame on the given tape; exposed
// for gradient certification of the full pipeline.
template <typename T>
ad::Var<T> build_training_loss(ad::Tape<T>& tape, ParamVars<T>& pv,
                               const Model<T>& model,
                               const synth::SyntheticSequence& seq,
                               int query_frame);

// Runs inference over each sequence and scores frames 1..T-1 (frame 0 is
// given, so it is excluded).
metrics::EvalReport run_eval(const Model<float>& model,
                             const std::vector<synth::SyntheticSequence>& seqs);

// Inference over a directory of frames; writes mask_%04d.pgm label maps.
// Returns frames per second over the predicted frames.
double infer_dir(const Model<float>& model, const std::string& frames_dir,
                 const std::string& mask0_path, const std::string& out_dir);

// Scores prediction PGMs against ground-truth PGMs (same file names).
metrics::EvalReport eval_dirs(const std::string& pred_dir,
                              const std::string& gt_dir);

struct AblateRow {
  std::string variant;
  double j = 0.0, f = 0.0, jf = 0.0;
  double final_loss = 0.0;
  double fps = 0.0;
};

// Known toggles: default, fam_off, ptm_off, rounds1, rounds2, rounds3,
// rounds4, interval1, interval2, interval4.
RunConfig apply_variant(const RunConfig& base, const std::string& variant);

std::vector<AblateRow> ablate(const RunConfig& base,
                              const synth::SyntheticSequence& seq,
                              const std::vector<std::string>& variants);

std::string format_ablate_table(const std::vector<AblateRow>& rows);

}  // namespace srnet::pipeline
