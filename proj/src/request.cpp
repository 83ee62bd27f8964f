#include "ztac/request.hpp"

#include <cctype>
#include <cstddef>

namespace ztac {

namespace {

bool digits(const std::string& s, std::size_t pos, std::size_t count) {
  if (pos + count > s.size()) return false;
  for (std::size_t i = 0; i < count; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[pos + i]))) return false;
  return true;
}

int two(const std::string& s, std::size_t pos) {
  return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
}

}  // namespace

int timestamp_hour(const std::string& ts) {
  // YYYY-MM-DDThh:mm:ss[.frac](Z|+hh:mm|-hh:mm)
  if (ts.size() < 20) return -1;
  if (!digits(ts, 0, 4) || ts[4] != '-' || !digits(ts, 5, 2) || ts[7] != '-' ||
      !digits(ts, 8, 2))
    return -1;
  if (ts[10] != 'T' && ts[10] != 't') return -1;
  if (!digits(ts, 11, 2) || ts[13] != ':' || !digits(ts, 14, 2) || ts[16] != ':' ||
      !digits(ts, 17, 2))
    return -1;
  const int month = two(ts, 5), day = two(ts, 8);
  const int hour = two(ts, 11), minute = two(ts, 14), second = two(ts, 17);
  if (month < 1 || month > 12 || day < 1 || day > 31) return -1;
  if (hour > 23 || minute > 59 || second > 60) return -1;

  std::size_t i = 19;
  if (i < ts.size() && ts[i] == '.') {
    std::size_t start = ++i;
    while (i < ts.size() && std::isdigit(static_cast<unsigned char>(ts[i]))) ++i;
    if (i == start) return -1;
  }
  if (i >= ts.size()) return -1;
  if (ts[i] == 'Z' || ts[i] == 'z') return i + 1 == ts.size() ? hour : -1;
  if (ts[i] != '+' && ts[i] != '-') return -1;
  if (!digits(ts, i + 1, 2) || i + 3 >= ts.size() || ts[i + 3] != ':' ||
      !digits(ts, i + 4, 2) || i + 6 != ts.size())
    return -1;
  if (two(ts, i + 1) > 23 || two(ts, i + 4) > 59) return -1;
  return hour;
}

}  // namespace ztac
