#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "image_io.hpp"

namespace srnet::synth {

namespace fs = std::filesystem;

SequenceSpec parse_sequence_spec(const KvConfig& cfg) {
  SequenceSpec spec;
  spec.name = cfg.get_string("seq.name", spec.name);
  spec.frames = cfg.get_int("seq.frames", spec.frames);
  spec.height = cfg.get_int("seq.height", spec.height);
  spec.width = cfg.get_int("seq.width", spec.width);
  spec.seed = static_cast<uint64_t>(cfg.get_int("seq.seed", 1));
  if (spec.frames < 1 || spec.height < 8 || spec.width < 8)
    fail(ErrorCode::invalid_argument, "sequence spec: bad extents/frames");

  for (int n = 1;; ++n) {
    const std::string p = "object" + std::to_string(n) + ".";
    if (!cfg.has(p + "shape") && !cfg.has(p + "x") && !cfg.has(p + "size"))
      break;
    ObjectSpec obj;
    const std::string shape = cfg.get_string(p + "shape", "rectangle");
    if (shape == "rectangle")
      obj.shape = ObjectSpec::Shape::rectangle;
    else if (shape == "disc")
      obj.shape = ObjectSpec::Shape::disc;
    else
      fail(ErrorCode::invalid_argument, "sequence spec: unknown shape " + shape);
    obj.x = cfg.get_double(p + "x", spec.width / 4.0);
    obj.y = cfg.get_double(p + "y", spec.height / 2.0);
    obj.size = cfg.get_double(p + "size", 12);
    obj.vx = cfg.get_double(p + "vx", 2);
    obj.vy = cfg.get_double(p + "vy", 0);
    obj.teleport_frame = cfg.get_int(p + "teleport_frame", -1);
    obj.teleport_x = cfg.get_double(p + "teleport_x", 0);
    obj.teleport_y = cfg.get_double(p + "teleport_y", 0);
    if (cfg.has(p + "r") || cfg.has(p + "g") || cfg.has(p + "b")) {
      obj.has_color = true;
      obj.r = cfg.get_double(p + "r", 0.8);
      obj.g = cfg.get_double(p + "g", 0.8);
      obj.b = cfg.get_double(p + "b", 0.8);
    }
    spec.objects.push_back(obj);
  }
  if (spec.objects.empty()) {
    // default: one rectangle drifting right
    spec.objects.push_back(ObjectSpec{});
  }

  spec.occluder.enabled = cfg.get_bool("occluder", false);
  if (spec.occluder.enabled) {
    spec.occluder.x = cfg.get_double("occluder.x", spec.width / 2.0);
    spec.occluder.y = cfg.get_double("occluder.y", spec.height / 2.0);
    spec.occluder.width = cfg.get_double("occluder.width", 10);
    spec.occluder.height =
        cfg.get_double("occluder.height", spec.height);
    spec.occluder.vx = cfg.get_double("occluder.vx", 0);
    spec.occluder.vy = cfg.get_double("occluder.vy", 0);
  }
  return spec;
}

namespace {

struct MovingPoint {
  double x, y;
};

// Bounce the center off the borders, keeping a half-size margin.
MovingPoint advance(MovingPoint p, double vx, double vy, double margin, int h,
                    int w) {
  double nx = p.x + vx;
  double ny = p.y + vy;
  const double xmin = margin, xmax = w - 1 - margin;
  const double ymin = margin, ymax = h - 1 - margin;
  if (nx < xmin) nx = xmin + (xmin - nx);
  if (nx > xmax) nx = xmax - (nx - xmax);
  if (ny < ymin) ny = ymin + (ymin - ny);
  if (ny > ymax) ny = ymax - (ny - ymax);
  nx = std::clamp(nx, xmin, xmax);
  ny = std::clamp(ny, ymin, ymax);
  return {nx, ny};
}

bool inside(const ObjectSpec& obj, MovingPoint c, int y, int x) {
  const double half = obj.size / 2.0;
  if (obj.shape == ObjectSpec::Shape::rectangle)
    return std::abs(x - c.x) <= half && std::abs(y - c.y) <= half;
  const double dx = x - c.x, dy = y - c.y;
  return dx * dx + dy * dy <= half * half;
}

}  // namespace

SyntheticSequence generate(const SequenceSpec& spec) {
  SyntheticSequence seq;
  seq.spec = spec;
  seq.num_objects = static_cast<int>(spec.objects.size());
  const int h = spec.height, w = spec.width;

  Rng rng(spec.seed);
  // background texture, fixed across frames
  Tensor<float> bg({h, w, 3});
  const float base_r = static_cast<float>(rng.uniform(0.1, 0.35));
  const float base_g = static_cast<float>(rng.uniform(0.1, 0.35));
  const float base_b = static_cast<float>(rng.uniform(0.1, 0.35));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float gy = 0.15f * static_cast<float>(y) / static_cast<float>(h);
      const float gx = 0.15f * static_cast<float>(x) / static_cast<float>(w);
      const float noise = static_cast<float>(rng.uniform(-0.04, 0.04));
      bg.at(y, x, 0) = std::clamp(base_r + gy + noise, 0.f, 1.f);
      bg.at(y, x, 1) = std::clamp(base_g + gx + noise, 0.f, 1.f);
      bg.at(y, x, 2) = std::clamp(base_b + gy + gx - noise, 0.f, 1.f);
    }

  std::vector<std::array<float, 3>> colors;
  for (int o = 0; o < seq.num_objects; ++o) {
    std::array<float, 3> c = {static_cast<float>(rng.uniform(0.55, 1.0)),
                              static_cast<float>(rng.uniform(0.55, 1.0)),
                              static_cast<float>(rng.uniform(0.55, 1.0))};
    const ObjectSpec& obj = spec.objects[static_cast<size_t>(o)];
    if (obj.has_color)
      c = {static_cast<float>(obj.r), static_cast<float>(obj.g),
           static_cast<float>(obj.b)};
    colors.push_back(c);
  }
  const std::array<float, 3> occ_color = {
      static_cast<float>(rng.uniform(0.0, 0.25)),
      static_cast<float>(rng.uniform(0.0, 0.25)),
      static_cast<float>(rng.uniform(0.0, 0.25))};

  std::vector<MovingPoint> centers;
  for (const auto& obj : spec.objects) centers.push_back({obj.x, obj.y});
  MovingPoint occ{spec.occluder.x, spec.occluder.y};

  for (int t = 0; t < spec.frames; ++t) {
    for (int o = 0; o < seq.num_objects; ++o) {
      const ObjectSpec& obj = spec.objects[static_cast<size_t>(o)];
      if (t == obj.teleport_frame) {
        centers[static_cast<size_t>(o)] = {obj.teleport_x, obj.teleport_y};
      } else if (t > 0) {
        centers[static_cast<size_t>(o)] =
            advance(centers[static_cast<size_t>(o)], obj.vx, obj.vy,
                    obj.size / 2.0, h, w);
      }
    }
    if (t > 0 && spec.occluder.enabled)
      occ = advance(occ, spec.occluder.vx, spec.occluder.vy, 0.0, h, w);

    Tensor<float> frame = bg;
    std::vector<int> labels(static_cast<size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int label = 0;
        for (int o = 0; o < seq.num_objects; ++o)
          if (inside(spec.objects[static_cast<size_t>(o)],
                     centers[static_cast<size_t>(o)], y, x))
            label = o + 1;  // later objects drawn on top
        if (label > 0) {
          const auto& c = colors[static_cast<size_t>(label - 1)];
          frame.at(y, x, 0) = c[0];
          frame.at(y, x, 1) = c[1];
          frame.at(y, x, 2) = c[2];
        }
        if (spec.occluder.enabled &&
            std::abs(x - occ.x) <= spec.occluder.width / 2.0 &&
            std::abs(y - occ.y) <= spec.occluder.height / 2.0) {
          label = 0;  // occluder hides everything beneath it
          frame.at(y, x, 0) = occ_color[0];
          frame.at(y, x, 1) = occ_color[1];
          frame.at(y, x, 2) = occ_color[2];
        }
        labels[static_cast<size_t>(y) * w + x] = label;
      }
    seq.frames.push_back(std::move(frame));
    seq.labels.push_back(std::move(labels));
  }
  return seq;
}

void write_sequence(const SyntheticSequence& seq, const std::string& out_dir) {
  const fs::path frames_dir = fs::path(out_dir) / "frames";
  const fs::path gt_dir = fs::path(out_dir) / "gt";
  fs::create_directories(frames_dir);
  fs::create_directories(gt_dir);
  char name[64];
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", t);
    write_ppm((frames_dir / name).string(), seq.frames[t]);
    std::snprintf(name, sizeof(name), "mask_%04zu.pgm", t);
    GrayImage img;
    img.h = seq.spec.height;
    img.w = seq.spec.width;
    img.pix.resize(seq.labels[t].size());
    for (size_t i = 0; i < img.pix.size(); ++i)
      img.pix[i] = static_cast<uint8_t>(seq.labels[t][i]);
    write_pgm((gt_dir / name).string(), img);
  }
}

}  // namespace srnet::synth
