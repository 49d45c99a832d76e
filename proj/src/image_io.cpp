#include "image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "srtn_io.hpp"

namespace srnet {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& is) {
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(is, rest);
      continue;
    }
    return tok;
  }
  return "";
}

int parse_dim(const std::string& tok, const std::string& path) {
  try {
    const int v = std::stoi(tok);
    if (v < 1) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::io, "bad netpbm header in " + path);
  }
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Tensor<float> read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  if (next_token(is) != "P6") fail(ErrorCode::io, "not a binary PPM: " + path);
  const int w = parse_dim(next_token(is), path);
  const int h = parse_dim(next_token(is), path);
  const int maxval = parse_dim(next_token(is), path);
  if (maxval != 255) fail(ErrorCode::io, "only 8-bit PPM supported: " + path);
  is.get();  // single whitespace after maxval
  std::vector<uint8_t> raw(static_cast<size_t>(h) * w * 3);
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (!is) fail(ErrorCode::io, "truncated PPM: " + path);
  Tensor<float> rgb({h, w, 3});
  for (size_t i = 0; i < raw.size(); ++i)
    rgb[static_cast<int64_t>(i)] = static_cast<float>(raw[i]) / 255.f;
  return rgb;
}

void write_ppm(const std::string& path, const Tensor<float>& rgb) {
  if (rgb.ndim() != 3 || rgb.extent(2) != 3)
    fail(ErrorCode::invalid_argument, "write_ppm: image must be [H,W,3]");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "P6\n" << rgb.extent(1) << " " << rgb.extent(0) << "\n255\n";
  std::vector<uint8_t> raw(static_cast<size_t>(rgb.numel()));
  for (int64_t i = 0; i < rgb.numel(); ++i) {
    const float v = std::clamp(rgb[i], 0.f, 1.f);
    raw[static_cast<size_t>(i)] =
        static_cast<uint8_t>(std::lround(v * 255.f));
  }
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size()));
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  if (next_token(is) != "P5") fail(ErrorCode::io, "not a binary PGM: " + path);
  GrayImage img;
  img.w = parse_dim(next_token(is), path);
  img.h = parse_dim(next_token(is), path);
  const int maxval = parse_dim(next_token(is), path);
  if (maxval != 255) fail(ErrorCode::io, "only 8-bit PGM supported: " + path);
  is.get();
  img.pix.resize(static_cast<size_t>(img.h) * img.w);
  is.read(reinterpret_cast<char*>(img.pix.data()),
          static_cast<std::streamsize>(img.pix.size()));
  if (!is) fail(ErrorCode::io, "truncated PGM: " + path);
  return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  if (img.pix.size() != static_cast<size_t>(img.h) * img.w)
    fail(ErrorCode::invalid_argument, "write_pgm: bad image buffer");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "P5\n" << img.w << " " << img.h << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pix.data()),
           static_cast<std::streamsize>(img.pix.size()));
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

std::vector<int> labels_from_gray(const GrayImage& img) {
  std::set<uint8_t> distinct(img.pix.begin(), img.pix.end());
  const bool binary =
      distinct.size() <= 2 && distinct.count(255) &&
      (distinct.size() == 1 || distinct.count(0));
  std::vector<int> labels(img.pix.size());
  for (size_t i = 0; i < img.pix.size(); ++i)
    labels[i] = binary ? (img.pix[i] ? 1 : 0) : static_cast<int>(img.pix[i]);
  return labels;
}

Tensor<float> read_frame(const std::string& path) {
  if (has_suffix(path, ".srtn")) {
    Tensor<float> t = read_srtn<float>(path);
    if (t.ndim() != 3 || t.extent(2) != 3)
      fail(ErrorCode::io, "frame tensor must be [H,W,3]: " + path);
    return t;
  }
  return read_ppm(path);
}

std::vector<int> read_mask_labels(const std::string& path, int& h, int& w) {
  if (has_suffix(path, ".srtn")) {
    Tensor<float> t = read_srtn<float>(path);
    if (t.ndim() != 3 || t.extent(2) != 1)
      fail(ErrorCode::io, "mask tensor must be [H,W,1]: " + path);
    h = t.extent(0);
    w = t.extent(1);
    std::vector<int> labels(static_cast<size_t>(t.numel()));
    for (int64_t i = 0; i < t.numel(); ++i)
      labels[static_cast<size_t>(i)] = static_cast<int>(std::lround(t[i]));
    return labels;
  }
  GrayImage img = read_pgm(path);
  h = img.h;
  w = img.w;
  return labels_from_gray(img);
}

}  // namespace srnet
