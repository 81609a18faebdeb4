// Dense univariate polynomials over exact rationals.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "markovcad/common.hpp"

namespace mc {

// Coefficients ascending by exponent; invariant: no trailing zero, so the
// zero polynomial has an empty coefficient vector and degree -1.
class UPoly {
 public:
  UPoly() = default;
  explicit UPoly(Rat constant);
  explicit UPoly(std::vector<Rat> ascending);

  static UPoly x();                         // the monomial x
  static UPoly monomial(Rat c, int exp);    // c * x^exp

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  bool is_constant() const { return c_.size() <= 1; }
  const Rat& coeff(int exp) const;          // 0 outside range
  const Rat& lead() const;                  // leading coefficient; error on 0
  const std::vector<Rat>& coeffs() const { return c_; }

  Rat eval(const Rat& x) const;
  // Interval evaluation with rational endpoints (lo <= hi); returns an
  // enclosure of the image.
  std::pair<Rat, Rat> eval_interval(const Rat& lo, const Rat& hi) const;

  UPoly operator-() const;
  UPoly operator+(const UPoly& o) const;
  UPoly operator-(const UPoly& o) const;
  UPoly operator*(const UPoly& o) const;
  UPoly scaled(const Rat& k) const;
  bool operator==(const UPoly& o) const { return c_ == o.c_; }

  UPoly derivative() const;
  UPoly pow(unsigned e) const;

  // Field division: returns (quotient, remainder) with deg r < deg d.
  static std::pair<UPoly, UPoly> divmod(const UPoly& n, const UPoly& d);

  // Monic gcd (1 for coprime inputs; 0 only if both inputs are 0).
  static UPoly gcd_monic(UPoly a, UPoly b);

  // Largest square-free divisor: p / gcd(p, p'), integer-primitive with a
  // positive leading coefficient.
  UPoly square_free_part() const;

  // Integer-primitive form: integer coefficients with gcd 1 and a positive
  // leading coefficient (rational rescale of *this); zero stays zero.
  UPoly primitive() const;

  // 1 + max |c_i| / |lead|: all real roots lie strictly inside (-B, B).
  Rat root_bound() const;

  std::string str(const std::string& var = "x") const;

 private:
  void trim();
  std::vector<Rat> c_;
};

}  // namespace mc
