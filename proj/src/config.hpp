#pragma once

#include <map>
#include <string>

#include "common.hpp"

namespace srnet {

// Flat `key = value` text with dotted keys; '#' starts a comment.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path);
  static KvConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_string(const std::string& key, const std::string& dflt) const;
  int get_int(const std::string& key, int dflt) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace srnet
