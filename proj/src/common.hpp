#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace srnet {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  protocol = 3,
  unsupported = 4,
  numeric = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// Deterministic uniform source. mt19937_64 has a fixed algorithm; mapping the
// raw draws by hand keeps the stream identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // [0,1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0,n)
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace srnet
