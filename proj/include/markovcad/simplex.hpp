// Specialized cylindrical decomposition for systems whose parameters live on
// probability simplices: structured systems f* = g0 + sum_i f_i(x_i) * g_i
// with alpha-only coefficients g_i, the simplex tree constructions, the
// sign-invariance (extensibility) checker, and the satisfiability encoding.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "markovcad/common.hpp"
#include "markovcad/poly.hpp"
#include "markovcad/upoly.hpp"
#include "markovcad/variable.hpp"

namespace mc {

// --- structured systems ---------------------------------------------------

enum class BudgetMode { Eq, Leq };

// One probability block: variables alpha_1..alpha_tau with
//   alpha_j >= 0 and  sum alpha_j == kappa   (Eq)
//   alpha_j >= 0 and  sum alpha_j <= kappa   (Leq)
// Requires tau >= 1 and 0 < kappa <= 1.
struct SimplexSpec {
  int simplex_index = 0;
  std::vector<int> vars;  // alpha variable ids in position order
  Rat kappa = Rat(1);
  BudgetMode mode = BudgetMode::Eq;

  int tau() const { return static_cast<int>(vars.size()); }
};

// Interns the named variables as alpha variables of the given block and
// returns the spec.  Throws std::invalid_argument when kappa is outside
// (0, 1] or the name list is empty.
SimplexSpec make_simplex(const std::vector<std::string>& names,
                         int simplex_index, Rat kappa = Rat(1),
                         BudgetMode mode = BudgetMode::Eq);

// One scalar term f(x) * g of a structured system.  The shape f is
// univariate in x (identity by default); g involves only alpha variables.
struct XTerm {
  int var = -1;
  UPoly f;             // empty => identity shape f(x) = x
  Polynomial g;        // alpha-only coefficient
  bool nonneg = true;  // domain x >= 0; false: x ranges over all reals

  bool identity_shape() const { return f.is_zero(); }
  // The shape applied to the variable, as a polynomial (x itself for the
  // identity shape).
  Polynomial shape_poly() const;
};

// A structured system: decide  f* >= 0  over the simplex domain, where
//   f* = g0 + sum_i f_i(x_i) * g_i.
struct SystemM {
  Polynomial g0;               // alpha-only offset
  std::vector<XTerm> terms;    // x-levels in order
  std::vector<SimplexSpec> simplices;
  bool ifr = false;            // simplices are the rows of a stochastic
                               // matrix with increasing failure rate, i.e.
                               // row-i prefix sums dominate row-(i+1) ones
  Polynomial fstar;            // expanded form; must equal assemble()

  Polynomial assemble() const;
  // Structural validation; throws std::invalid_argument("unsupported f*
  // shape") when the decomposition is malformed (g with x-variables,
  // expanded form mismatch, repeated variables, free variable with a
  // non-identity shape, ...) and plain std::invalid_argument for bad
  // simplex data.
  void validate() const;
};

// Builds a system from its parts, filling in the expanded form.
SystemM make_system(Polynomial g0, std::vector<XTerm> terms,
                    std::vector<SimplexSpec> simplices, bool ifr = false);

// 3^(sum tau_i) * 4^(#terms): an upper bound on the number of leaves of the
// specialized decomposition (before false-leaf pruning).
Int cell_count_bound(const SystemM& sys);

// --- trees ----------------------------------------------------------------

// A bound appearing at an x-level: the value where f(x) = num/den, with
// num/den evaluated on the cell.  For the identity shape the bound is just
// num/den.
struct XBound {
  Polynomial num;      // -g0 - sum_{j<i} f_j(x_j) g_j, identically-zero
                       // coefficients dropped
  Polynomial den;      // g_i, verbatim
  UPoly f;             // empty => identity shape
  bool folded = false; // true when a constant rational den was folded into num
};

// One node of a simplex / specialized tree.  Alpha levels carry point cells
// (var = value) and open cells (0 < var < hi); x levels carry points and
// intervals whose endpoints are the origin, a bound, or +-infinity.
struct SNode {
  enum class End { NegInf, Origin, Bound, PosInf };

  int var = -1;              // -1 at the root
  bool alpha_level = false;
  bool is_point = false;

  // alpha cells
  Polynomial value;          // point: var = value (equality map substituted)
  Polynomial hi;             // open: 0 < var < hi

  // x cells
  End lo_end = End::Origin;  // interval endpoints
  End hi_end = End::PosInf;
  bool point_at_origin = false;  // point cells: var = 0 vs var = bound
  std::optional<XBound> bound;

  Rat sample = Rat(0);       // this coordinate of the cell's sample point
  bool truth = false;        // meaningful at leaves of specialized trees
  int raw_index = 0;         // position among the originally built siblings
                             // (display merging requires contiguity here)

  std::vector<std::unique_ptr<SNode>> kids;
};

// Decomposition of the alpha block(s) alone (no x levels, no truth).
struct SimplexCad {
  std::vector<SimplexSpec> simplices;
  bool ifr = false;
  std::vector<int> level_vars;  // level order
  std::unique_ptr<SNode> root;

  long long leaf_count() const;
};

// Theorem-style decomposition of a single simplex: every level splits into
// {0}, (0, remaining budget), {remaining budget}, degenerate budgets
// collapse to the single point {0}, and an Eq final level is forced to the
// remaining budget.
SimplexCad simplex_cad(const SimplexSpec& spec);

// Decomposition of several blocks at once (the level order interleaves
// nothing: all levels of the first block, then the second, ...).
SimplexCad simplex_cad(const std::vector<SimplexSpec>& specs, bool ifr = false);

// Product of two block decompositions over disjoint variables; throws
// std::invalid_argument("shared variables") otherwise.  Leaf counts
// multiply exactly.
SimplexCad glue_simplices(const SimplexCad& a, const SimplexCad& b);

// Decomposition of a phi-state stochastic matrix with the increasing
// failure rate constraint: row 1 is a plain simplex; row i > 1, column
// j < phi is bounded above by
//   U = sum_{l<=j} alpha_{i-1,l} - sum_{l<j} alpha_{i,l},
// and column phi is forced by the row budget.  Variables are interned as
// alpha<i>_<j> with display name "alpha<i>,<j>".
SimplexCad ifr_cad(int phi);

// The alpha cells visited by certificates and by the specialized lifting.
struct AlphaCell {
  std::vector<int> levels;        // every alpha variable in level order
  std::map<int, Polynomial> eq;   // pinned variables (fully substituted)
  std::map<int, Rat> sample;
  std::vector<int> open_vars;     // level order
  std::map<int, Polynomial> open_hi;  // open var -> upper bound (substituted)
  std::string desc;               // "alpha1 = 0, 0 < alpha2 < 1, ..."
};

// Leaf cells of an alpha tree, left to right.
std::vector<AlphaCell> alpha_cells(const SimplexCad& cad);

// --- extensibility --------------------------------------------------------

// Verdict for one coefficient g_i: is its sign invariant on every cell of
// the alpha decomposition?
struct GVerdict {
  int term_index = -1;
  std::string var_display;
  bool invariant = false;
  bool exact = false;            // false: certified only by random probes
  std::string certificate;       // per-cell certificate summary
  // Populated when invariant == false:
  std::string witness_cell;
  std::map<int, Rat> witness_a, witness_b;  // two cell points ...
  int sign_a = 0, sign_b = 0;               // ... with these strict signs
};

// Verdict for one shape f_i: no strictly positive real root (a root exactly
// at 0 is allowed; sign invariance is then automatic on x > 0).
struct FVerdict {
  int term_index = -1;
  std::string var_display;
  bool ok = false;
  std::string note;
};

struct ExtensibilityReport {
  bool extensible = false;
  bool probabilistic = false;  // some verdict rests on random probes
  std::vector<GVerdict> g_verdicts;
  std::vector<FVerdict> f_verdicts;
  unsigned seed = 0;
  std::string text() const;
};

// Checks the structured system against the simplex decomposition of its
// blocks: every g_i must hold one sign per cell, the offset g0 must hold
// one sign on every cell where all g_i vanish (there the decision is the
// sign of g0 alone), and every non-identity shape must be free of positive
// roots.  Certificates are tried from exact to probabilistic: constant,
// uniform coefficient sign, vertex evaluation (affine anywhere,
// multilinear on box cells), corner-coordinate rewriting, interval
// arithmetic, deterministic probe fractions {1/5, 1/2, 4/5}, then seeded
// random probes (the only stage marked probabilistic).  A sign flip is
// reported with two exact witness points.  The offset verdict appears with
// term_index -1.  `parallel` fans the per-coefficient judgments out to
// worker threads; results are deterministic either way.
ExtensibilityReport check_simplex_extensible(const SystemM& sys,
                                             unsigned seed = 20260822,
                                             bool parallel = false);

// --- the specialized decomposition ----------------------------------------

class NotSimplexExtensible : public std::runtime_error {
 public:
  explicit NotSimplexExtensible(ExtensibilityReport r)
      : std::runtime_error("system is not simplex-extensible"),
        report(std::move(r)) {}
  ExtensibilityReport report;
};

struct SpecializedCad {
  SystemM system;
  ExtensibilityReport report;
  std::vector<int> level_vars;       // alpha levels then x levels
  std::unique_ptr<SNode> root;
  long long true_leaves = 0;
  long long pruned_false_leaves = 0; // counted, removed from the tree
  long long leaves_before_pruning = 0;
  Int bound;                          // cell_count_bound(system)
  std::vector<std::string> notes;
};

// Builds the specialized decomposition: simplex levels per the block
// construction (the increasing-failure-rate variant when sys.ifr), then one
// level per term.  At an x level with coefficient value r = num/den at the
// cell's sample: r > 0 on a nonnegative variable gives the four cells {0},
// (0,F), {F}, (F,inf) with the symbolic bound F; r <= 0 or an identically
// vanishing coefficient gives {0}, (0,inf); a free variable gives (-inf,F),
// {F}, (F,inf).  Non-identity shapes split at every root of f(x) = r in the
// domain.  Leaves where f* < 0 at the sample are pruned (counted).  Throws
// NotSimplexExtensible when the sign-invariance check fails.
SpecializedCad specialized_cad(const SystemM& sys, unsigned seed = 20260822,
                               bool parallel = false);

// Exact point query against the tree: walks to the leaf containing pt (all
// variables must be present).  inside == false when pt violates the block
// constraints or lands in a pruned false region; truth is the decided value
// of f* >= 0 at pt's cell.
struct LocateResult {
  bool inside = false;
  bool truth = false;
  const SNode* leaf = nullptr;
};
LocateResult locate_point(const SpecializedCad& cad,
                          const std::map<int, Rat>& pt);

// --- rendering ------------------------------------------------------------

// Text tree, two-space indent, root line "R^1".  At x levels, maximal runs
// of adjacent sibling cells with identical rendered subtrees are displayed
// as one span ("x1 >= 1/alpha1" for {F} followed by (F,inf), ...).
// Specialized trees are rendered after false-leaf pruning.
std::string render_tree(const SpecializedCad& cad);
std::string render_tree(const SimplexCad& cad);

// Disjunction of the root-to-leaf conjunctions of the merged display tree.
std::string render_formula(const SpecializedCad& cad);

// Raw (unmerged) JSON tree; parse-and-dump round-trips byte for byte.
std::string tree_json(const SpecializedCad& cad);

// --- satisfiability encoding ----------------------------------------------

// Encodes a 3-CNF formula over num_vars variables as a structured system
// with one two-variable block per propositional variable (alpha_{i,1}
// carries "variable i true") and
//   f* = -(sum_{i,j} alpha_{i,j}(1 - alpha_{i,j})
//          + sum_clauses prod_literals indicator),
// where a positive literal contributes the false-column indicator and a
// negated literal the true-column one.  f* >= 0 is satisfiable over the
// blocks iff the formula is satisfiable.  Literals are +-(index+1); throws
// std::invalid_argument("clause arity must be 3") on other arities.
SystemM encode_3sat(const std::vector<std::vector<int>>& clauses,
                    int num_vars);

}  // namespace mc
