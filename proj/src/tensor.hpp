#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace srnet {

// Extents of a dense row-major array, 1 to 4 axes. Semantic order is
// [time, height, width, channels] for 4 axes, [height, width, channels]
// for 3, [rows, cols] for 2.
using Shape = std::vector<int>;

inline std::string shape_to_string(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline int64_t shape_numel(const Shape& s) {
  if (s.empty() || s.size() > 4)
    fail(ErrorCode::invalid_argument,
         "tensor rank must be 1..4, got " + shape_to_string(s));
  int64_t n = 1;
  for (int e : s) {
    if (e < 1)
      fail(ErrorCode::invalid_argument,
           "tensor extents must be >= 1, got " + shape_to_string(s));
    n *= e;
  }
  return n;
}

bool finite_checks_enabled();
void set_finite_checks(bool on);

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_))) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<int64_t>(data_.size()))
      fail(ErrorCode::invalid_argument,
           "tensor data length " + std::to_string(data_.size()) +
               " does not match shape " + shape_to_string(shape_));
  }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
  }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int extent(int axis) const { return shape_[static_cast<size_t>(axis)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  T& at(int i) { return data_[static_cast<size_t>(i)]; }
  const T& at(int i) const { return data_[static_cast<size_t>(i)]; }

  T& at(int r, int c) {
    return data_[static_cast<size_t>(r) * shape_[1] + c];
  }
  const T& at(int r, int c) const {
    return data_[static_cast<size_t>(r) * shape_[1] + c];
  }

  T& at(int y, int x, int c) {
    return data_[(static_cast<size_t>(y) * shape_[1] + x) * shape_[2] + c];
  }
  const T& at(int y, int x, int c) const {
    return data_[(static_cast<size_t>(y) * shape_[1] + x) * shape_[2] + c];
  }

  T& at(int t, int y, int x, int c) {
    return data_[((static_cast<size_t>(t) * shape_[1] + y) * shape_[2] + x) *
                     shape_[3] +
                 c];
  }
  const T& at(int t, int y, int x, int c) const {
    return data_[((static_cast<size_t>(t) * shape_[1] + y) * shape_[2] + x) *
                     shape_[3] +
                 c];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> reshape(const Tensor<T>& t, Shape shape) {
  if (shape_numel(shape) != t.numel())
    fail(ErrorCode::invalid_argument,
         "reshape " + shape_to_string(t.shape()) + " -> " +
             shape_to_string(shape) + " changes element count");
  return Tensor<T>(std::move(shape), t.vec());
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (int64_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(t[i])) return false;
  return true;
}

// Active in debug builds; can also be switched on at runtime (tests do).
template <typename T>
void check_finite(const Tensor<T>& t, const char* where) {
#ifdef NDEBUG
  if (!finite_checks_enabled()) return;
#endif
  if (!all_finite(t))
    fail(ErrorCode::numeric, std::string(where) + ": non-finite value produced");
}

template <typename T>
Tensor<T> random_uniform(Shape shape, Rng& rng, T lo, T hi) {
  Tensor<T> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
  return t;
}

}  // namespace srnet
