#include "srtn_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <type_traits>
#include <vector>

namespace srnet {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'T', 'N'};

// This codebase only targets little-endian hosts; the raw-scalar write below
// assumes it.
void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

template <typename T>
void write_srtn(const std::string& path, const Tensor<T>& t) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os.write(kMagic, 4);
  unsigned char version = 1;
  unsigned char dtype = std::is_same_v<T, float> ? 0 : 1;
  unsigned char ndim = static_cast<unsigned char>(t.ndim());
  os.put(static_cast<char>(version));
  os.put(static_cast<char>(dtype));
  os.put(static_cast<char>(ndim));
  for (int a = 0; a < t.ndim(); ++a)
    put_u32(os, static_cast<uint32_t>(t.extent(a)));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * sizeof(T)));
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

template <typename T>
Tensor<T> read_srtn(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::io, "not an SRTN file: " + path);
  int version = is.get();
  if (version != 1)
    fail(ErrorCode::io, "unsupported SRTN version " + std::to_string(version) +
                            ": " + path);
  int dtype = is.get();
  if (dtype != 0 && dtype != 1)
    fail(ErrorCode::io, "unsupported SRTN dtype " + std::to_string(dtype) +
                            ": " + path);
  int ndim = is.get();
  if (ndim < 1 || ndim > 4)
    fail(ErrorCode::io, "bad SRTN rank " + std::to_string(ndim) + ": " + path);
  Shape shape(static_cast<size_t>(ndim));
  for (int a = 0; a < ndim; ++a) {
    shape[static_cast<size_t>(a)] = static_cast<int>(get_u32(is));
    if (shape[static_cast<size_t>(a)] < 1)
      fail(ErrorCode::io, "bad SRTN extent: " + path);
  }
  int64_t n = shape_numel(shape);
  Tensor<T> t(shape);
  if (dtype == (std::is_same_v<T, float> ? 0 : 1)) {
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(n * sizeof(T)));
  } else if (dtype == 0) {
    std::vector<float> buf(static_cast<size_t>(n));
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    for (int64_t i = 0; i < n; ++i) t[i] = static_cast<T>(buf[static_cast<size_t>(i)]);
  } else {
    std::vector<double> buf(static_cast<size_t>(n));
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    for (int64_t i = 0; i < n; ++i) t[i] = static_cast<T>(buf[static_cast<size_t>(i)]);
  }
  if (!is) fail(ErrorCode::io, "truncated SRTN file: " + path);
  return t;
}

template void write_srtn<float>(const std::string&, const Tensor<float>&);
template void write_srtn<double>(const std::string&, const Tensor<double>&);
template Tensor<float> read_srtn<float>(const std::string&);
template Tensor<double> read_srtn<double>(const std::string&);

bool& finite_checks_flag() {
  static bool on = false;
  return on;
}

bool finite_checks_enabled() { return finite_checks_flag(); }
void set_finite_checks(bool on) { finite_checks_flag() = on; }

}  // namespace srnet
