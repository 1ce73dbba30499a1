#pragma once

// Small text helpers shared by file I/O and id formatting. Doubles are
// rendered with std::to_chars (shortest round-trip form) so that identical
// values always produce identical bytes.

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace shapegd {

inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_u64(unsigned long long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::string id_str(const std::string& id) { return id; }
inline std::string id_str(std::string_view id) { return std::string(id); }
inline std::string id_str(unsigned int id) { return fmt_u64(id); }
inline std::string id_str(unsigned long id) { return fmt_u64(id); }
inline std::string id_str(unsigned long long id) { return fmt_u64(id); }
inline std::string id_str(int id) { return std::to_string(id); }
inline std::string id_str(long id) { return std::to_string(id); }
inline std::string id_str(long long id) { return std::to_string(id); }

}  // namespace shapegd
