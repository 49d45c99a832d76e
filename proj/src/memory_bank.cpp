#include "memory_bank.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "srtn_io.hpp"

namespace srnet {

namespace fs = std::filesystem;

template <typename T>
MemoryBank<T>::MemoryBank(int capacity) : capacity_(capacity) {
  if (capacity < 2)
    fail(ErrorCode::invalid_argument,
         "memory bank capacity must be at least 2 (reference + local)");
}

template <typename T>
void MemoryBank<T>::append(Tensor<T> key, Tensor<T> value) {
  if (key.ndim() != 3 || value.ndim() != 3)
    fail(ErrorCode::invalid_argument, "memory frame must be [H,W,C]");
  if (!frames_.empty()) {
    if (!(key.shape() == frames_[0].key.shape()))
      fail(ErrorCode::invalid_argument,
           "memory key shape " + shape_to_string(key.shape()) +
               " does not match bank " +
               shape_to_string(frames_[0].key.shape()));
    if (!(value.shape() == frames_[0].value.shape()))
      fail(ErrorCode::invalid_argument,
           "memory value shape " + shape_to_string(value.shape()) +
               " does not match bank " +
               shape_to_string(frames_[0].value.shape()));
  }
  if (static_cast<int>(frames_.size()) == capacity_) {
    // frame 0 is the user-annotated reference and is never evicted
    frames_.erase(frames_.begin() + 1);
  }
  frames_.push_back(Frame{next_id_++, std::move(key), std::move(value)});
}

template <typename T>
std::optional<std::pair<Tensor<T>, Tensor<T>>> MemoryBank<T>::local_view()
    const {
  if (frames_.empty()) return std::nullopt;
  const Frame& f = frames_.back();
  return std::make_pair(f.key, f.value);
}

template <typename T>
std::optional<std::pair<Tensor<T>, Tensor<T>>> MemoryBank<T>::global_view()
    const {
  if (frames_.size() < 2) return std::nullopt;
  const int t = static_cast<int>(frames_.size()) - 1;
  const Shape& ks = frames_[0].key.shape();
  const Shape& vs = frames_[0].value.shape();
  Tensor<T> keys({t, ks[0], ks[1], ks[2]});
  Tensor<T> values({t, vs[0], vs[1], vs[2]});
  const int64_t kb = frames_[0].key.numel();
  const int64_t vb = frames_[0].value.numel();
  for (int i = 0; i < t; ++i) {
    const Frame& f = frames_[static_cast<size_t>(i)];
    for (int64_t j = 0; j < kb; ++j) keys[i * kb + j] = f.key[j];
    for (int64_t j = 0; j < vb; ++j) values[i * vb + j] = f.value[j];
  }
  return std::make_pair(std::move(keys), std::move(values));
}

template <typename T>
void MemoryBank<T>::save_dir(const std::string& dir) const {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) fail(ErrorCode::io, "cannot write bank manifest in " + dir);
  for (const Frame& f : frames_) {
    std::ostringstream kf, vf;
    kf << "frame_" << f.id << "_key.srtn";
    vf << "frame_" << f.id << "_value.srtn";
    write_srtn((fs::path(dir) / kf.str()).string(), f.key);
    write_srtn((fs::path(dir) / vf.str()).string(), f.value);
    manifest << f.id << " " << kf.str() << " " << vf.str() << "\n";
  }
}

template <typename T>
MemoryBank<T> MemoryBank<T>::load_dir(const std::string& dir, int capacity) {
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) fail(ErrorCode::io, "missing bank manifest in " + dir);
  MemoryBank<T> bank(capacity);
  int idx;
  std::string kf, vf;
  while (manifest >> idx >> kf >> vf) {
    Tensor<T> key = read_srtn<T>((fs::path(dir) / kf).string());
    Tensor<T> value = read_srtn<T>((fs::path(dir) / vf).string());
    bank.append(std::move(key), std::move(value));
    bank.frames_.back().id = idx;
  }
  bank.next_id_ = bank.frames_.empty() ? 0 : bank.frames_.back().id + 1;
  return bank;
}

template class MemoryBank<float>;
template class MemoryBank<double>;

}  // namespace srnet
