// Exact rational arithmetic helpers shared across the library.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mc {

using Rat = mpq_class;
using Int = mpz_class;

// Thrown for malformed textual input; carries a byte offset into the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

inline Rat rat(long n, long d = 1) {
  Rat q(n, d);
  q.canonicalize();
  return q;
}

inline int sign_of(const Rat& q) { return sgn(q); }

inline Rat rat_abs(const Rat& q) { return q < 0 ? Rat(-q) : q; }

Rat rat_pow(const Rat& base, unsigned long exp);

// Canonical rendering: "n" when the denominator is 1, else "n/d".
std::string rat_str(const Rat& q);

// Strict full-string parser accepting integers ("-3"), fractions ("39/55"),
// and decimals ("0.4", "-2.75"); throws ParseError with the offending offset.
Rat parse_rational(const std::string& s);

// Decimal rendering with 12 significant digits (for --floats columns).
std::string rat_to_decimal(const Rat& q);

}  // namespace mc
