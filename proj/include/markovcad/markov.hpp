// Markov reward processes with symbolic entries: model ingestion, exact
// expected-reward computations, and the encoding of cost-effectiveness
// queries as structured polynomial systems, plus the two-way geometry
// helpers (classification and exact boundary curves).
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "markovcad/common.hpp"
#include "markovcad/poly.hpp"
#include "markovcad/simplex.hpp"

namespace mc {

// --- models ---------------------------------------------------------------

// A Markov reward process with rational or symbolic entries.  Symbols in P
// and pi are probability weights (alpha variables); symbols in the reward,
// benefit, and cost vectors are scalar unknowns (x variables).
//
// Discounted mode (lambda present, 0 < lambda < 1): the value
// pi (I - lambda P)^{-1} r is taken over all n states.  Transient mode
// (lambda absent): states listed in `absorbing` are removed and the value
// pi_t (I - Q)^{-1} r_t is taken over the remaining (transient) states,
// where Q is the transient-to-transient block.
struct MarkovModel {
  int n = 0;
  std::optional<Rat> lambda;   // absent => transient (undiscounted) mode
  PolyMatrix P;                // n x n transition entries
  std::vector<Polynomial> r;   // reward vector; empty when the model
                               // carries benefits/costs instead
  std::vector<Polynomial> b;   // benefit vector (net-benefit / ratio queries)
  std::vector<Polynomial> c;   // cost vector
  std::vector<Polynomial> pi;  // initial distribution over all n states
  std::vector<int> absorbing;  // declared absorbing states (0-based)

  bool discounted() const { return lambda.has_value(); }
};

// Parses a model from JSON text:
//   {"n": 2, "lambda": "9/10" | null, "P": [[entry, ...], ...],
//    "r": [entry, ...] or "b": [...] and "c": [...],
//    "pi": [entry, ...], "absorbing": [index, ...]}
// An entry is a rational string ("2/5", "0.4", "-1"), an exact JSON
// integer, or an identifier naming a symbolic parameter.  P and pi symbols
// are interned as alpha variables, reward/benefit/cost symbols as
// x-variables.  Throws ParseError (with the byte offset inside the
// offending entry) or std::invalid_argument, with the entry position
// ("P[0][1]") in the message.  Declared absorbing states must have an
// exact unit row (P[i][i] = 1) and zero rewards.
MarkovModel load_model(const std::string& json_text);

// --- exact reward computations -------------------------------------------

struct DetAdj {
  Polynomial det;
  PolyMatrix adj;
};

// Determinant and adjugate in one call: adj(m) * m == det(m) * I.
DetAdj det_adj(const PolyMatrix& m);

// The system matrix I - lambda P (discounted, over all states) or I - Q
// (transient, over the non-absorbing states), together with the retained
// original state indices.
struct SystemMatrix {
  PolyMatrix m;
  std::vector<int> states;
};
SystemMatrix system_matrix(const MarkovModel& model);

// sum_{m=0}^{t} lambda^m  pi P^m r, expanded.  The generic core takes the
// discount as a polynomial (so a symbolic discount can be inspected); the
// model overload restricts to the retained states and uses the model's
// rational discount (1 in transient mode).
Polynomial finite_reward_sum(const PolyMatrix& P,
                             const std::vector<Polynomial>& pi,
                             const std::vector<Polynomial>& r,
                             const Polynomial& lambda, long t);
Polynomial finite_reward_poly(const MarkovModel& model, long t);
Polynomial finite_reward_poly(const MarkovModel& model,
                              const std::vector<Polynomial>& reward, long t);

// Total expected reward as an exact ratio num/den with
//   num = pi~ adj(M) r~,  den = det(M),  M = system_matrix(model),
// where pi~, r~ are the retained-state restrictions.  den is strictly
// positive over the stochastic domain, so sign decisions reduce to num.
struct RewardRatio {
  Polynomial num;
  Polynomial den;
};
RewardRatio infinite_reward(const MarkovModel& model);
RewardRatio infinite_reward(const MarkovModel& model,
                            const std::vector<Polynomial>& reward);

// --- queries --------------------------------------------------------------

enum class Metric {
  TotalRewardGE,   // total expected reward >= T           (r, one model)
  FiniteRewardGE,  // t-horizon expected reward >= T       (r, one model)
  CompareRewards,  // total reward of A >= total of B      (r, two models)
  NMB_GE,          // net monetary benefit W*B - C >= T    (b/c, one model)
  ICER_LE          // (C_A - C_B)/(B_A - B_B) <= T         (b/c, two models)
};

struct Query {
  Metric metric = Metric::TotalRewardGE;
  Rat threshold;                     // T
  Rat wtp = Rat(1);                  // W, net-benefit queries only
  long horizon = 0;                  // t, finite-horizon queries only
  bool icer_benefit_positive = true; // caller-asserted sign of B_A - B_B
  std::map<std::string, Rat> fixed;  // fixed symbolic parameters by name
  bool ifr = false;                  // constrain P rows to increasing
                                     // failure rate (single fully symbolic
                                     // discounted model)
};

// Parses a query from JSON text:
//   {"metric": "total-reward-ge" | "finite-reward-ge" | "compare-rewards" |
//              "nmb-ge" | "icer-le",
//    "threshold": "3", "wtp": "1", "horizon": 3,
//    "icer_benefit_sign": "pos" | "neg",
//    "fixed": {"p12": "2/5", ...}, "ifr": false}
Query load_query(const std::string& json_text);

// Encodes the query against the model(s) as a structured system deciding
// f* >= 0:
//   - f* per metric (thresholds cross-multiplied by the positive
//     denominators, so no division appears);
//   - fixed parameters substituted exactly;
//   - each transition row with symbolic entries becomes one simplex block
//     (Eq(1) for a fully symbolic discounted row, otherwise
//     Leq(1 - numeric row sum)), and likewise for a symbolic pi;
//   - symbolic rewards/benefits/costs become nonnegative x-levels.
// Throws std::invalid_argument on metric/model mismatches, on a symbolic
// parameter covered by no simplex block and no x-level, and
// "unsupported f* shape" when f* is not degree <= 1 in each x variable
// with alpha-only coefficients.
struct BuildResult {
  SystemM system;
  std::vector<std::string> notes;  // recorded modeling assertions
};
BuildResult build_system(const MarkovModel& a, const MarkovModel* model_b,
                         const Query& q);

// --- two-way geometry -----------------------------------------------------

// Shape of the feasible region of f* >= 0 restricted to a free pair
// (u, v), every other parameter fixed.
enum class TwoWayClass {
  HalfPlane,            // linear in u and v, no u*v term
  HyperbolaSide,        // bilinear: u*v term present
  LineSegment,          // u and v belong to the same simplex block
  UnivariateReduction,  // exactly one of u, v appears after restriction
  Degenerate            // neither appears: f* constant in the pair
};

struct TwoWay {
  TwoWayClass cls;
  std::string label;     // display string, e.g. "degenerate: f* constant in pair"
  Polynomial restricted; // f* with the remaining free parameters fixed
};

// Classifies the two-way restriction.  `others` assigns rational values to
// every variable of sys.fstar except u and v (missing assignments are an
// error).  Throws std::invalid_argument when the restriction has degree
// >= 2 in u or v alone (no conic machinery here).
TwoWay classify_two_way(const SystemM& sys, int u, int v,
                        const std::map<int, Rat>& others);

// Exact boundary curve f* = 0 over u in [u_lo, u_hi] at `samples` evenly
// spaced abscissae (endpoints included).  The restriction must be linear
// in v.  At each abscissa the linear coefficient either yields an exact
// solution v (flagged in_domain against [v_lo, v_hi], v_hi absent meaning
// unbounded above) or vanishes and the point is skipped with a note.
struct BoundaryPoint {
  Rat u;
  Rat v;                  // meaningful when solved
  bool solved = false;    // false: linear coefficient vanished at u
  bool in_domain = false; // solved and v_lo <= v <= v_hi
  std::string note;
};
struct BoundaryCurve {
  std::vector<BoundaryPoint> points;
  std::string closed_form;  // "v = ..." rendering of the solved boundary
};
BoundaryCurve boundary_curve(const Polynomial& fstar, int u, int v,
                             const std::map<int, Rat>& others,
                             const Rat& u_lo, const Rat& u_hi, int samples,
                             const Rat& v_lo,
                             const std::optional<Rat>& v_hi);

}  // namespace mc
