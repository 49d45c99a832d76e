#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "tensor.hpp"

// Deterministic synthetic sequences: colored shapes moving over a textured
// background, with optional occluders and teleports that break the frame-to-
// frame coherence. Same spec and seed always produce bit-identical frames
// and ground truth.
namespace srnet::synth {

struct ObjectSpec {
  enum class Shape { rectangle, disc };
  Shape shape = Shape::rectangle;
  double x = 16, y = 16;  // center at frame 0, pixels
  double size = 12;       // rectangle edge / disc diameter
  double vx = 2, vy = 0;  // pixels per frame; objects bounce off borders
  int teleport_frame = -1;
  double teleport_x = 0, teleport_y = 0;
  bool has_color = false;  // explicit color; otherwise drawn from the seed
  double r = 0, g = 0, b = 0;
};

struct OccluderSpec {
  bool enabled = false;
  double x = 32, y = 32, width = 10, height = 64;
  double vx = 0, vy = 0;
};

struct SequenceSpec {
  std::string name = "seq";
  int frames = 8;
  int height = 64, width = 64;
  uint64_t seed = 1;
  std::vector<ObjectSpec> objects;
  OccluderSpec occluder;
};

// Keys: seq.name/frames/height/width/seed, objectN.shape/x/y/size/vx/vy/
// teleport_frame/teleport_x/teleport_y/r/g/b (N from 1), occluder.* with
// occluder = true enabling it.
SequenceSpec parse_sequence_spec(const KvConfig& cfg);

struct SyntheticSequence {
  SequenceSpec spec;
  std::vector<Tensor<float>> frames;       // [H,W,3] in [0,1]
  std::vector<std::vector<int>> labels;    // per frame, H*W, 0..N
  int num_objects = 0;
};

SyntheticSequence generate(const SequenceSpec& spec);

// Writes frames/frame_%04d.ppm and gt/mask_%04d.pgm under out_dir.
void write_sequence(const SyntheticSequence& seq, const std::string& out_dir);

}  // namespace srnet::synth
