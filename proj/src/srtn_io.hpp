#pragma once

#include <string>

#include "tensor.hpp"

namespace srnet {

// SRTN tensor file: magic "SRTN", u8 version=1, u8 dtype (0=f32, 1=f64),
// u8 ndim, little-endian u32 extents, then raw little-endian scalars in
// row-major order.

template <typename T>
void write_srtn(const std::string& path, const Tensor<T>& t);

// Reads either dtype and converts to T.
template <typename T>
Tensor<T> read_srtn(const std::string& path);

}  // namespace srnet
