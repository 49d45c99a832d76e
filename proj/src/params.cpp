#include "params.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "srtn_io.hpp"

namespace srnet {

namespace fs = std::filesystem;

template <typename T>
void ParamSet<T>::add(const std::string& name, Shape shape, Init init) {
  if (values_.count(name))
    fail(ErrorCode::invalid_argument, "duplicate parameter: " + name);
  values_.emplace(name, Tensor<T>(std::move(shape)));
  inits_.emplace(name, init);
  order_.push_back(name);
}

template <typename T>
void ParamSet<T>::init_all(uint64_t seed) {
  Rng rng(seed);
  for (const std::string& name : order_) {
    Tensor<T>& t = values_.at(name);
    const Init init = inits_.at(name);
    switch (init.kind) {
      case Init::Kind::zeros:
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = T(0);
        break;
      case Init::Kind::kaiming_uniform: {
        const double bound = std::sqrt(6.0 / static_cast<double>(init.fan_in));
        for (int64_t i = 0; i < t.numel(); ++i)
          t[i] = static_cast<T>(rng.uniform(-bound, bound));
        break;
      }
    }
  }
}

template <typename T>
Tensor<T>& ParamSet<T>::get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end())
    fail(ErrorCode::invalid_argument, "unknown parameter: " + name);
  return it->second;
}

template <typename T>
const Tensor<T>& ParamSet<T>::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end())
    fail(ErrorCode::invalid_argument, "unknown parameter: " + name);
  return it->second;
}

template <typename T>
void ParamSet<T>::set(const std::string& name, Tensor<T> value) {
  Tensor<T>& t = get(name);
  if (!(t.shape() == value.shape()))
    fail(ErrorCode::invalid_argument,
         "parameter shape is immutable: " + name + " is " +
             shape_to_string(t.shape()) + ", got " +
             shape_to_string(value.shape()));
  t = std::move(value);
}

template <typename T>
std::vector<std::string> ParamSet<T>::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

template <typename T>
int64_t ParamSet<T>::total_scalars() const {
  int64_t n = 0;
  for (const auto& [_, t] : values_) n += t.numel();
  return n;
}

template <typename T>
void ParamSet<T>::save_dir(const std::string& dir) const {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "params.txt");
  if (!manifest) fail(ErrorCode::io, "cannot write manifest in " + dir);
  for (const auto& [name, t] : values_) {
    const std::string file = name + ".srtn";
    write_srtn((fs::path(dir) / file).string(), t);
    manifest << name << " " << file << "\n";
  }
}

template <typename T>
void ParamSet<T>::load_dir(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "params.txt");
  if (!manifest)
    fail(ErrorCode::io, "missing params.txt manifest in " + dir);
  std::string name, file;
  size_t loaded = 0;
  while (manifest >> name >> file) {
    Tensor<T> t = read_srtn<T>((fs::path(dir) / file).string());
    if (values_.count(name))
      set(name, std::move(t));
    else {
      values_.emplace(name, std::move(t));
      inits_.emplace(name, Init::zeros());
      order_.push_back(name);
    }
    ++loaded;
  }
  if (loaded == 0) fail(ErrorCode::io, "empty parameter manifest in " + dir);
}

template <typename T>
ad::Var<T> ParamVars<T>::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  ad::Var<T> v = tape_->leaf(params_->get(name), trainable_, name);
  bound_.emplace(name, v);
  return v;
}

template class ParamSet<float>;
template class ParamSet<double>;
template class ParamVars<float>;
template class ParamVars<double>;

}  // namespace srnet
