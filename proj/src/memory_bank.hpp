#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace srnet {

// Per-frame key/value store split into the local block (the most recent
// frame) and the global block (all earlier frames). The reference frame 0 is
// pinned: when the ring capacity is reached, the oldest frame after it is
// evicted instead.
template <typename T>
class MemoryBank {
 public:
  explicit MemoryBank(int capacity = 8);

  void append(Tensor<T> key, Tensor<T> value);

  int size() const { return static_cast<int>(frames_.size()); }
  int capacity() const { return capacity_; }
  bool has_local() const { return !frames_.empty(); }
  bool has_global() const { return frames_.size() >= 2; }

  // Local block: the most recent frame's key/value, as copies.
  std::optional<std::pair<Tensor<T>, Tensor<T>>> local_view() const;

  // Global block: all frames but the newest, stacked to [T-1,H,W,C] in
  // insertion order. Absent for banks with fewer than two frames.
  std::optional<std::pair<Tensor<T>, Tensor<T>>> global_view() const;

  const Tensor<T>& key_at(int i) const { return frames_[static_cast<size_t>(i)].key; }
  const Tensor<T>& value_at(int i) const { return frames_[static_cast<size_t>(i)].value; }
  int frame_id_at(int i) const { return frames_[static_cast<size_t>(i)].id; }

  // Directory of SRTN files plus a manifest with one line per frame:
  // "<idx> <key-file> <value-file>".
  void save_dir(const std::string& dir) const;
  static MemoryBank load_dir(const std::string& dir, int capacity = 8);

 private:
  struct Frame {
    int id;  // insertion index, monotone
    Tensor<T> key;
    Tensor<T> value;
  };

  int capacity_;
  int next_id_ = 0;
  std::vector<Frame> frames_;
};

}  // namespace srnet
