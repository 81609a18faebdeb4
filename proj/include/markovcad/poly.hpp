#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "markovcad/common.hpp"
#include "markovcad/upoly.hpp"

namespace mc {

// A monomial: (variable id, exponent) pairs with exponent > 0, sorted by
// ascending variable id.  The empty monomial is 1.
using Mono = std::vector<std::pair<int, int>>;

int mono_degree(const Mono& m);

// Graded lexicographic order: lower total degree first; within a degree,
// the monomial that is lexicographically smaller (treating lower variable
// ids as more significant and larger exponents as larger) comes first.
struct MonoLess {
  bool operator()(const Mono& a, const Mono& b) const;
};

// Sparse multivariate polynomial with rational coefficients over the
// globally interned variables.
class Polynomial {
 public:
  using TermMap = std::map<Mono, Rat, MonoLess>;

  Polynomial() = default;                    // zero
  explicit Polynomial(Rat c);                // constant
  explicit Polynomial(long c) : Polynomial(Rat(c)) {}
  static Polynomial variable(int id);
  static Polynomial term(Rat c, Mono m);

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  // Value of a constant polynomial (zero included); throws otherwise.
  Rat constant_value() const;
  const TermMap& terms() const { return terms_; }
  int total_degree() const;  // -1 for zero
  int degree_in(int var) const;  // -1 for zero, 0 if var absent
  std::vector<int> variables() const;  // ascending ids with nonzero presence
  bool depends_on(int var) const;

  Polynomial operator-() const;
  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial scaled(const Rat& c) const;
  Polynomial pow(unsigned e) const;
  bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }
  bool operator!=(const Polynomial& o) const { return !(*this == o); }

  // Coefficient of var^k as a polynomial in the remaining variables.
  Polynomial coeff_of(int var, int k) const;
  // Coefficients of var^0 .. var^deg (recursive view in var).
  std::vector<Polynomial> coeffs_in(int var) const;

  Polynomial derivative(int var) const;

  // Simultaneous substitution of polynomials for the listed variables.
  Polynomial substitute(const std::map<int, Polynomial>& values) const;
  // Substitution of rational values for the listed variables (others kept).
  Polynomial substitute_rational(const std::map<int, Rat>& values) const;
  // Full evaluation; every variable of the polynomial must be listed.
  Rat eval(const std::map<int, Rat>& values) const;

  // Conversion to a univariate polynomial in var; every other variable
  // must be absent.
  UPoly to_upoly(int var) const;
  static Polynomial from_upoly(const UPoly& p, int var);

  // Integer-coprime coefficients with a positive leading (graded-lex
  // largest) term; zero stays zero.
  Polynomial primitive_positive() const;

 private:
  TermMap terms_;
  void add_term(const Mono& m, const Rat& c);
};

// Leading coefficient of p in var (a polynomial in the other variables);
// throws std::invalid_argument on the zero polynomial.
Polynomial leading_coeff(const Polynomial& p, int var);

// Leading term of p in var: leading_coeff * var^deg.
Polynomial leading_term(const Polynomial& p, int var);

// p minus its leading term in var; reductum of a var-free polynomial is 0.
Polynomial reductum(const Polynomial& p, int var);

// Nonzero (exponent, coefficient) pairs of p viewed as univariate in var,
// exponents descending.
std::vector<std::pair<int, Polynomial>> univariate_view(const Polynomial& p,
                                                        int var);

// All nonzero iterated reducta of p in var, outermost (p itself) first.
std::vector<Polynomial> reducta_set(const Polynomial& p, int var);

// True when a == c*b for some nonzero rational c (both inputs nonzero).
bool is_scalar_multiple(const Polynomial& a, const Polynomial& b);

enum class RenderOrder {
  Descending,          // graded-lex descending: "x^2 + y^2 - 1"
  AscendingConstFirst  // constant first: "1 - alpha1*x1 - alpha2*x2"
};

std::string poly_str(const Polynomial& p,
                     RenderOrder order = RenderOrder::Descending);

// Parse an expression over '+', '-', '*', '^', parentheses, rational
// literals (including '/' and decimal forms), and variable names.  The
// resolver maps a name to a variable id; by default names are interned as
// x-variables.  Throws ParseError with a position on malformed input.
Polynomial parse_polynomial(
    const std::string& text,
    const std::function<int(const std::string&)>& resolve = {});

// --- polynomial matrices -------------------------------------------------

using PolyMatrix = std::vector<std::vector<Polynomial>>;

// Exact quotient a / b; throws std::runtime_error if b does not divide a.
Polynomial divide_exact(const Polynomial& a, const Polynomial& b);

// Determinant: cofactor expansion for n <= 4, fraction-free elimination
// with exact divisions for larger matrices.
Polynomial det(const PolyMatrix& m);

// Adjugate (transpose of the cofactor matrix): adj(m) * m == det(m) * I.
PolyMatrix adjugate(const PolyMatrix& m);

}  // namespace mc
