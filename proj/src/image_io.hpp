#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace srnet {

// 8-bit single-channel image; for masks the pixel value is the object label
// (0 = background). A strictly binary {0,255} image is read as label 1.
struct GrayImage {
  int h = 0, w = 0;
  std::vector<uint8_t> pix;
};

// Binary PPM (P6), 8-bit, values scaled to [0,1].
Tensor<float> read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor<float>& rgb);

// Binary PGM (P5), 8-bit.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

// Raw label values; collapses a {0,255} binary mask to {0,1}.
std::vector<int> labels_from_gray(const GrayImage& img);

// Frame loading that accepts PPM or SRTN ([H,W,3], already in [0,1]).
Tensor<float> read_frame(const std::string& path);

// Mask loading that accepts PGM or SRTN ([H,W,1] of labels).
std::vector<int> read_mask_labels(const std::string& path, int& h, int& w);

}  // namespace srnet
