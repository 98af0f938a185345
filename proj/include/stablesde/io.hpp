#pragma once

// Little-endian binary records, round-trip number formatting and config hashing.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stablesde {

/// Shortest decimal form that reads back to the same double; "nan"/"inf" otherwise.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xF];
  return s;
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  write_u64(os, v);
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated binary file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is) {
  const std::uint64_t v = read_u64(is);
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

/// Increment dump: "STBLINC1", then n and d as uint64, then n x d float64 row-major.
inline void write_increments(const std::string& path, std::span<const double> samples, std::uint64_t d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.write("STBLINC1", 8);
  write_u64(os, samples.size() / d);
  write_u64(os, d);
  for (double x : samples) write_f64(os, x);
}

struct IncrementDump {
  std::uint64_t n = 0, d = 0;
  std::vector<double> samples;
};

inline IncrementDump read_increments(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "STBLINC1") throw std::runtime_error("not an increment dump");
  IncrementDump r;
  r.n = read_u64(is);
  r.d = read_u64(is);
  r.samples.resize(r.n * r.d);
  for (double& x : r.samples) x = read_f64(is);
  return r;
}

}  // namespace stablesde
