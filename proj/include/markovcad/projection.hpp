#pragma once

#include <string>
#include <vector>

#include "markovcad/poly.hpp"

namespace mc {

// ---------------------------------------------------------------------------
// Subresultant / principal-subresultant-coefficient machinery and the Hong
// projection operator used by the cylindrical algebraic decomposition.
// ---------------------------------------------------------------------------

// The i-th Sylvester-Habicht matrix of f and g with respect to their main
// variable `var`.  Preconditions: p = deg(f) >= q = deg(g) >= 0, and
// 0 <= i <= q when p > q, or 0 <= i <= p - 1 when p == q.  The matrix has
// p + q - 2i rows and p + q - i columns over the coefficient ring (polynomials
// in the remaining variables):
//   rows x^{q-i-1} f, ..., x f, f   (descending multiplier)
//   rows g, x g, ..., x^{p-i-1} g   (ascending multiplier)
// against the monomial basis [x^{p+q-i-1}, ..., x, 1].
// Throws std::invalid_argument("degree preconditions violated") otherwise.
PolyMatrix sylvester_habicht(const Polynomial& f, const Polynomial& g, int var,
                             int i);

// The i-th principal subresultant coefficient psc_i(f, g) with respect to
// `var`: the determinant of the square submatrix formed by the first
// p + q - 2i columns of the i-th Sylvester-Habicht matrix.  Same
// preconditions (and error) as sylvester_habicht.  psc_0 equals the
// resultant up to the sign fixed by the row convention; either sign carries
// the same vanishing locus, which is all the projection consumes.
Polynomial psc(const Polynomial& f, const Polynomial& g, int var, int i);

// The set of projection-relevant psc values of a pair, with the degenerate
// cases folded in:
//   * either polynomial zero, or both degree 0 in var  ->  {}
//   * exactly one degree 0 in var: a rational constant contributes {},
//     otherwise the single polynomial pp(c^d) where c is the degree-0 side
//     and d the degree of the other (primitive part, positive leading sign)
//   * both degree >= 1: all nonzero psc_i over the valid index range,
//     verbatim (roles swapped internally so the higher degree comes first)
std::vector<Polynomial> psc_set(const Polynomial& f, const Polynomial& g,
                                int var);

// Closed-form projections for the low-degree patterns that the simplex
// algorithms hit constantly.  Inputs outside the supported patterns throw
// std::invalid_argument("not a shortcut case").
//
// Unary: deg(f) = 0 in var -> {f};  deg(f) = 1 -> {ldcf(f), red(f)}.
std::vector<Polynomial> shortcut_project(const Polynomial& f, int var);
// Binary, for a pair where one side has degree 0 in var and the other degree
// d >= 1: the contributions pp(c^{d'}) of the constant side taken against
// every positive degree d' in the other side's degree sequence; a rational
// constant side contributes {}.
std::vector<Polynomial> shortcut_project(const Polynomial& f,
                                         const Polynomial& g, int var);

// Why a raw projection entry exists.
struct FactorProvenance {
  std::string rule;    // "ldcf" | "psc" | "pair-psc" | "pair-const" | "input"
  std::string source;  // rendered description of the producing inputs
  int index = -1;      // psc index when rule involves a psc, else -1
};

std::string provenance_str(const FactorProvenance& p);

// One level of projection output.
//   raw:        every produced value verbatim (leading coefficients, psc
//               values including zero ones, constant-pair powers), with exact
//               duplicates removed, in deterministic production order;
//   factors:    the normalized basis actually used for lifting: rational
//               constants dropped, primitive parts with positive leading
//               sign, univariate members replaced by their square-free part,
//               pairwise non-proportional;
//   provenance: parallel to raw (first producer of each entry).
struct ProjectionFactorSet {
  int var = -1;  // the variable this projection step eliminates
  std::vector<Polynomial> raw;
  std::vector<FactorProvenance> provenance;
  std::vector<Polynomial> factors;
};

// Normalization used for `factors` above, exposed for reuse.
std::vector<Polynomial> normalize_factors(const std::vector<Polynomial>& raw);

// The Hong projection operator PROJH(F) = PROJ1(F) u PROJ2(F) for the given
// main variable:
//   PROJ1: for each f in F and each f' in the reducta set of f, the leading
//          coefficient of f', and for deg(f') >= 1 the psc values
//          psc_i(f', D f') over the valid index range;
//   PROJ2: for each pair f < g of distinct members of F (ordered by their
//          canonical rendering) and each f' in the reducta set of f, the psc
//          values psc_i(f', g); pairs where one side has degree 0 contribute
//          the constant-power shortcut instead, and pairs of two degree-0
//          sides contribute nothing.
ProjectionFactorSet hong_projection(const std::vector<Polynomial>& fs,
                                    int var);

}  // namespace mc
