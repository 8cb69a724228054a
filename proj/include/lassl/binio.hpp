#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lassl/errors.hpp"

// Little-endian binary stream helpers shared by all on-disk formats.
// The build targets little-endian hosts; raw writes are byte-exact there.
namespace lassl::binio {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(std::string("truncated payload while reading ") + what);
  return v;
}

inline void write_magic(std::ostream& out, const char magic[4]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char magic[4], const char* what) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic for ") + what);
  }
}

inline void expect_version(std::istream& in, std::uint32_t expected, const char* what) {
  const auto v = read_pod<std::uint32_t>(in, what);
  if (v != expected) {
    throw FormatError(std::string(what) + ": version mismatch, file has " + std::to_string(v) +
                      ", expected " + std::to_string(expected));
  }
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
  const auto len = read_pod<std::uint32_t>(in, what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw FormatError(std::string("truncated string while reading ") + what);
  return s;
}

template <typename T>
void write_array(std::ostream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_array(std::istream& in, T* data, std::size_t count, const char* what) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw FormatError(std::string("truncated array while reading ") + what);
}

}  // namespace lassl::binio
