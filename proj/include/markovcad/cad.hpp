#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "markovcad/projection.hpp"
#include "markovcad/realalg.hpp"
#include "markovcad/variable.hpp"

namespace mc {

// ---------------------------------------------------------------------------
// Polynomial systems (conjunctions of sign conditions).
// ---------------------------------------------------------------------------

enum class Rel { Lt, Le, Eq, Ge, Gt };

std::string rel_str(Rel r);

// Does a polynomial sign (-1, 0, +1) satisfy the relation against zero?
bool rel_holds(int sign, Rel r);

struct Atom {
  Polynomial poly;
  Rel rel = Rel::Eq;
};

// Conjunction of atoms; must be nonempty for decision_cad.
struct PolySystem {
  std::vector<Atom> atoms;
};

// Exact evaluation of the full system at a rational point.
bool system_holds(const PolySystem& sys, const std::map<int, Rat>& point);

// ---------------------------------------------------------------------------
// Sample coordinates: rationals extended by at most one real algebraic
// number per branch of the lifted tree.  A branch's extension is shared
// through ThetaPtr; a coordinate is either rational or an element of the
// extension field, represented by a numerator polynomial evaluated at the
// root the record isolates.
// ---------------------------------------------------------------------------

struct ThetaRec {
  // Square-free defining polynomial.  May shrink (to a divisor that still
  // vanishes at the root) when arithmetic discovers a smaller one; the
  // isolating interval only ever tightens.  Both endpoints stay non-roots.
  mutable UPoly minpoly;
  mutable Rat lo, hi;

  ThetaRec(UPoly p, Rat l, Rat h);
  void refine() const;  // halve the isolating interval
};

using ThetaPtr = std::shared_ptr<const ThetaRec>;

struct QTheta {
  ThetaPtr theta;
  UPoly num;  // value = num(theta), reduced below deg(minpoly)
};

using SampleCoord = std::variant<Rat, QTheta>;

bool coord_is_rational(const SampleCoord& c);
const Rat& coord_rational(const SampleCoord& c);  // throws if not rational
int coord_sign(const SampleCoord& c);
int coord_compare(const SampleCoord& a, const SampleCoord& b);
SampleCoord coord_add_rat(const SampleCoord& c, const Rat& r);
// Rational enclosure of the value, refined until its width is < `width`.
std::pair<Rat, Rat> coord_enclosure(const SampleCoord& c, const Rat& width);
double coord_approx(const SampleCoord& c);
std::string coord_str(const SampleCoord& c);

// ---------------------------------------------------------------------------
// Cells and the decomposition tree.
// ---------------------------------------------------------------------------

struct CadNode {
  int level = 0;           // 0 = root, 1..n = lifted levels
  int index_in_level = 0;  // 1-based stack index among siblings (odd =
                           // sector, even = section)
  bool is_section = false;
  SampleCoord coord = Rat(0);  // this level's sample coordinate
  // Stack bounds along this level's variable; empty optional = unbounded.
  std::optional<SampleCoord> lo_bound, hi_bound;
  std::vector<CadNode> children;
  // Leaves only:
  std::vector<int> atom_signs;  // sign of each system atom's polynomial
  bool truth = false;
};

struct Cad {
  PolySystem system;
  std::vector<int> order;  // variable ids, level 1..n
  // levels[k] holds the polynomials (raw and normalized) whose roots bound
  // the stacks at level k+1; its `var` field is order[k].  levels[n-1] is
  // the input level, lower entries come from successive projections.
  std::vector<ProjectionFactorSet> levels;
  CadNode root;
  bool nullification_seen = false;  // a lifting poly vanished identically at
                                    // some sample; verify results externally
  std::vector<std::string> notes;
  std::size_t cell_count = 0;  // nodes excluding the root

  int leaf_count() const;
  std::vector<int> cells_per_level() const;
};

// Visit every leaf with its full sample point (prefix[i] is the coordinate
// of order[i]).
void walk_leaves(
    const Cad& cad,
    const std::function<void(const CadNode&, const std::vector<SampleCoord>&)>&
        visit);

// Exact sign of a polynomial at a (possibly algebraic) sample point.
int sign_at_sample(const Polynomial& p, const std::vector<SampleCoord>& prefix,
                   const std::vector<int>& order);

// ---------------------------------------------------------------------------
// Errors.
// ---------------------------------------------------------------------------

// The lifting needed a second independent algebraic extension in one branch.
class TowerOverflow : public std::runtime_error {
 public:
  TowerOverflow() : std::runtime_error("sample tower exceeds supported scale") {}
};

// More cells than the configured bound (MARKOVCAD_MAX_CELLS, default 10^6).
class CellLimitExceeded : public std::runtime_error {
 public:
  explicit CellLimitExceeded(std::size_t lim)
      : std::runtime_error("cell limit exceeded"), limit(lim) {}
  std::size_t limit;
};

class NotProjectionDefinable : public std::runtime_error {
 public:
  explicit NotProjectionDefinable(std::string what)
      : std::runtime_error(std::move(what)) {}
};

std::size_t max_cells_limit();  // from the environment, default 10^6

// ---------------------------------------------------------------------------
// Core operations.
// ---------------------------------------------------------------------------

// Build the full decision decomposition: projection cascade on the system's
// polynomials, base-phase root isolation, and recursive lifting, with every
// leaf tagged by the exact truth of the system at its sample point.
// Throws std::invalid_argument when the system is empty or the order misses
// a variable of the system ("variable order missing a variable of the
// system"), TowerOverflow or CellLimitExceeded as above.
Cad decision_cad(const PolySystem& sys, const std::vector<int>& order);

// One lifting step, exposed for direct inspection: substitute the prefix
// into the level polynomials, isolate the roots along `var`, and return the
// resulting stack of sector/section children (coordinates and bounds only).
// Sector samples: 0 when the stack has no roots; exact bound -/+ 1 on the
// unbounded sides; a rational strictly inside the gap between adjacent
// roots otherwise.
std::vector<CadNode> lift_over_cell(const std::vector<SampleCoord>& prefix,
                                    const std::vector<Polynomial>& level_polys,
                                    const std::vector<int>& order, int var);

// Sign of one projection factor / input polynomial at a leaf sample.
struct SignAtom {
  Polynomial factor;
  int sign = 0;  // -1, 0, +1
};

// Disjunction over true cells; each disjunct is the conjunction of sign
// conditions of every projection factor (all levels) at that cell's sample.
struct SignedFormula {
  std::vector<Polynomial> basis;                // the factors, level order
  std::vector<std::vector<SignAtom>> disjuncts; // one per true leaf
};

struct DefinabilityResult {
  bool definable = true;
  // When not definable: two leaves with identical factor sign vectors but
  // different truth values, with their samples.
  const CadNode* cell_a = nullptr;
  const CadNode* cell_b = nullptr;
  std::vector<SampleCoord> sample_a, sample_b;
};

// Is the computed truth invariant across cells sharing a sign vector over
// all projection factors?  The second form restricts the sign vectors to an
// explicit factor list.
DefinabilityResult is_projection_definable(const Cad& cad);
DefinabilityResult is_projection_definable(
    const Cad& cad, const std::vector<Polynomial>& factors);

// Extended solution formula.  Requires projection definability; throws
// NotProjectionDefinable (message carries the offending samples) otherwise.
SignedFormula solution_formula(const Cad& cad);

// Evaluate a solution formula at an exact rational point.
bool formula_holds(const SignedFormula& f, const std::map<int, Rat>& point);

std::string formula_str(const SignedFormula& f);

// ---------------------------------------------------------------------------
// Rendering.
// ---------------------------------------------------------------------------

std::string cad_text(const Cad& cad);
std::string cad_json(const Cad& cad);  // serialized ordered JSON

}  // namespace mc
