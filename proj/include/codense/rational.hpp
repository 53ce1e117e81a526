#pragma once

// Exact rational arithmetic for distribution weights, thresholds and grids.

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace codense {

using Rat = boost::multiprecision::cpp_rational;

inline Rat rat(long long num, long long den = 1) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  return Rat(num, den);
}

inline double to_double(const Rat& r) { return r.template convert_to<double>(); }

// Accepts "p/q", "p", and an optional leading sign. Whitespace is not allowed.
inline Rat parse_rat(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("malformed rational: '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  std::size_t slash = text.find('/');
  auto parse_int = [&](std::string_view part) {
    if (part.empty()) throw bad();
    std::size_t i = (part[0] == '-' || part[0] == '+') ? 1 : 0;
    if (i == part.size()) throw bad();
    for (; i < part.size(); ++i)
      if (part[i] < '0' || part[i] > '9') throw bad();
    return boost::multiprecision::cpp_int(std::string(part));
  };
  if (slash == std::string_view::npos) return Rat(parse_int(text));
  boost::multiprecision::cpp_int num = parse_int(text.substr(0, slash));
  boost::multiprecision::cpp_int den = parse_int(text.substr(slash + 1));
  if (den == 0) throw bad();
  return Rat(num, den);
}

inline std::string rat_to_string(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace codense
