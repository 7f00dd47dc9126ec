#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace feepe {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// All binary formats are little-endian; this code assumes a little-endian
// host (checked at startup of the readers via a static_assert surrogate).
inline void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw FormatError(std::string("truncated file reading ") + what);
  return v;
}

inline void write_magic(std::ostream& os, const char magic[4]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char magic[4]) {
  char buf[4] = {};
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") +
                      std::string(magic, 4));
}

inline void write_f32(std::ostream& os, const float* data, std::size_t n) {
  os.write(reinterpret_cast<const char*>(data), n * sizeof(float));
}

inline void read_f32(std::istream& is, float* data, std::size_t n,
                     const char* what) {
  is.read(reinterpret_cast<char*>(data), n * sizeof(float));
  if (static_cast<std::size_t>(is.gcount()) != n * sizeof(float))
    throw FormatError(std::string("payload shorter than header promises in ") +
                      what);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

/// Throws FormatError if the stream holds trailing bytes beyond the format.
inline void expect_eof(std::istream& is, const char* what) {
  char c;
  if (is.read(&c, 1))
    throw FormatError(std::string("trailing bytes after payload in ") + what);
}

}  // namespace detail
}  // namespace feepe
