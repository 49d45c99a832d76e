#pragma once

#include <map>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "tensor.hpp"

namespace srnet {

struct Init {
  enum class Kind { zeros, kaiming_uniform };
  Kind kind = Kind::zeros;
  int fan_in = 0;

  static Init zeros() { return {Kind::zeros, 0}; }
  static Init kaiming(int fan_in) { return {Kind::kaiming_uniform, fan_in}; }
};

// Named parameter tensors. Registration order drives initialization so a
// fixed seed reproduces the same values; shapes are immutable once added.
template <typename T>
class ParamSet {
 public:
  void add(const std::string& name, Shape shape, Init init);
  void init_all(uint64_t seed);

  bool has(const std::string& name) const { return values_.count(name) > 0; }
  Tensor<T>& get(const std::string& name);
  const Tensor<T>& get(const std::string& name) const;
  void set(const std::string& name, Tensor<T> value);

  std::vector<std::string> names() const;  // sorted
  int64_t total_scalars() const;

  // Directory of SRTN files (one per parameter) plus a params.txt manifest.
  void save_dir(const std::string& dir) const;
  void load_dir(const std::string& dir);

 private:
  std::map<std::string, Tensor<T>> values_;
  std::map<std::string, Init> inits_;
  std::vector<std::string> order_;
};

// Lazily binds parameters of a set as named tape leaves, one leaf per
// parameter per tape.
template <typename T>
class ParamVars {
 public:
  ParamVars(ad::Tape<T>& tape, const ParamSet<T>& params, bool trainable)
      : tape_(&tape), params_(&params), trainable_(trainable) {}

  ad::Var<T> operator[](const std::string& name);

  // Pre-binds a name to an existing var (e.g. a leaf under a gradient probe).
  void bind(const std::string& name, ad::Var<T> v) { bound_[name] = v; }

  const ParamSet<T>& set() const { return *params_; }

 private:
  ad::Tape<T>* tape_;
  const ParamSet<T>* params_;
  bool trainable_;
  std::map<std::string, ad::Var<T>> bound_;
};

}  // namespace srnet
