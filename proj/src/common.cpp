#include "markovcad/common.hpp"

#include <cctype>
#include <cstdio>

namespace mc {

Rat rat_pow(const Rat& base, unsigned long exp) {
  Rat acc(1);
  Rat b = base;
  unsigned long e = exp;
  while (e > 0) {
    if (e & 1UL) acc *= b;
    b *= b;
    e >>= 1UL;
  }
  return acc;
}

std::string rat_str(const Rat& q) {
  return q.get_str();  // canonical "n" or "n/d"
}

Rat parse_rational(const std::string& s) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto fail = [&](const std::string& what, std::size_t pos) -> Rat {
    throw ParseError("malformed rational at position " + std::to_string(pos) +
                         ": " + what + " in \"" + s + "\"",
                     pos);
  };
  if (n == 0) return fail("empty string", 0);
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') {
    neg = (s[i] == '-');
    ++i;
  }
  if (i >= n || !std::isdigit(static_cast<unsigned char>(s[i])))
    return fail("expected digit", i);
  Int numer(0);
  while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) {
    numer = numer * 10 + (s[i] - '0');
    ++i;
  }
  Rat value;
  if (i < n && s[i] == '/') {
    ++i;
    if (i >= n || !std::isdigit(static_cast<unsigned char>(s[i])))
      return fail("expected digit after '/'", i);
    Int denom(0);
    while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) {
      denom = denom * 10 + (s[i] - '0');
      ++i;
    }
    if (denom == 0) return fail("zero denominator", i - 1);
    value = Rat(numer, denom);
    value.canonicalize();
  } else if (i < n && s[i] == '.') {
    ++i;
    if (i >= n || !std::isdigit(static_cast<unsigned char>(s[i])))
      return fail("expected digit after '.'", i);
    Int scale(1);
    while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) {
      numer = numer * 10 + (s[i] - '0');
      scale *= 10;
      ++i;
    }
    value = Rat(numer, scale);
    value.canonicalize();
  } else {
    value = Rat(numer);
  }
  if (i != n) return fail("trailing characters", i);
  if (neg) value = -value;
  return value;
}

std::string rat_to_decimal(const Rat& q) {
  // 12 significant digits via double conversion; exact values in range for
  // the CSV use cases (probabilities, rewards, bounds).
  const double d = q.get_d();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", d);
  return std::string(buf);
}

}  // namespace mc
