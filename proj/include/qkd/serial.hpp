#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "qkd/errors.hpp"

namespace qkd::serial {

// Little-endian fixed-width primitives for record files. The network wire
// format is big-endian and lives in keynet; these are for on-disk records.

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void put_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw IoError("truncated record (u64)");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated record (u32)");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& in) {
  std::uint64_t v = get_u64(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

inline void put_u64_vec(std::ostream& out, const std::vector<std::uint64_t>& v) {
  put_u64(out, v.size());
  for (auto x : v) put_u64(out, x);
}

inline std::vector<std::uint64_t> get_u64_vec(std::istream& in, std::uint64_t max_len) {
  std::uint64_t n = get_u64(in);
  if (n > max_len) throw IoError("record length out of range");
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = get_u64(in);
  return v;
}

inline void put_magic(std::ostream& out, const char (&magic)[9]) { out.write(magic, 8); }

inline void expect_magic(std::istream& in, const char (&magic)[9]) {
  char b[8];
  in.read(b, 8);
  if (!in || std::memcmp(b, magic, 8) != 0)
    throw IoError(std::string("bad magic, expected ") + magic);
}

}  // namespace qkd::serial
