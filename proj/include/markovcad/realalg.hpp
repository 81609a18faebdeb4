// Exact real algebraic numbers: square-free defining polynomial plus an
// isolating open interval with rational endpoints.
#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "markovcad/upoly.hpp"

namespace mc {

class RealAlgebraic {
 public:
  // p must be square-free with p(lo) != 0, p(hi) != 0 and exactly one real
  // root in (lo, hi).
  RealAlgebraic(UPoly p, Rat lo, Rat hi);

  const UPoly& poly() const { return p_; }
  const Rat& lo() const { return lo_; }
  const Rat& hi() const { return hi_; }

  // One bisection step shrinking the isolating interval.
  void refine() const;
  // Shrink until hi - lo <= width.
  void refine_below_width(const Rat& width) const;

  double approx() const {
    Rat mid = (lo_ + hi_) / 2;
    return mid.get_d();
  }
  std::string str() const;

 private:
  UPoly p_;
  mutable Rat lo_, hi_;
  mutable int sign_lo_;  // sign of p at lo (invariant under refinement)
};

// A real value: exact rational or real algebraic.
using RealValue = std::variant<Rat, RealAlgebraic>;

bool is_rational(const RealValue& v);
const Rat& as_rational(const RealValue& v);
double approx(const RealValue& v);
std::string real_value_str(const RealValue& v);

// -1, 0, +1 ordering of two real values (exact).
int compare(const RealValue& a, const RealValue& b);

// Sign of q at the value v (exact; zero certified via gcd).
int sign_at(const UPoly& q, const RealValue& v);

// A rational strictly between lo and hi; throws std::invalid_argument
// ("empty interval") when lo >= hi.
Rat rational_between(const RealValue& lo, const RealValue& hi);

// A rational strictly below / above v (deterministic conventions:
// rational v -> v -/+ 1; algebraic v -> interval endpoint -/+ 1).
Rat rational_below(const RealValue& v);
Rat rational_above(const RealValue& v);

// All distinct real roots, ascending; rational roots are returned as
// rationals. Throws std::invalid_argument
// ("identically zero has no isolated roots") on the zero polynomial; a
// nonzero constant has no roots.
std::vector<RealValue> isolate_real_roots(const UPoly& p);

}  // namespace mc
