// Acceptance harness: runs the thirteen release criteria and prints one
// PASS/FAIL line per criterion, with indented explanations for anything
// that does not hold.  Every comparison is exact (rational arithmetic and
// byte-for-byte string goldens); the only tolerances are the two
// wall-clock budgets pinned just below.  The process exit status is the
// number of failed criteria.
#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "markovcad/cad.hpp"
#include "markovcad/cli.hpp"
#include "markovcad/markov.hpp"
#include "markovcad/simplex.hpp"
#include "oracles.hpp"

using namespace mc;

namespace {

// Pinned tolerances: these two wall-clock budgets are the only inexact
// thresholds anywhere in the harness.
constexpr double kSphereSecondsBudget = 5.0;
constexpr double kAgreementSecondsBudget = 600.0;

Polynomial P(const std::string& s) { return parse_polynomial(s); }

// Parses over names that must already be interned, so model symbols keep
// the kinds their loader assigned.
Polynomial pp(const std::string& text) {
  return parse_polynomial(text, [](const std::string& name) {
    int id = find_var(name);
    if (id < 0)
      throw std::runtime_error("golden names unknown symbol " + name);
    return id;
  });
}

int sgn(const Rat& x) { return x < 0 ? -1 : (x > 0 ? 1 : 0); }

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Set equality between produced polynomials and rendered goldens.
bool set_eq(const std::vector<Polynomial>& got,
            const std::vector<std::string>& expect) {
  for (const std::string& e : expect) {
    Polynomial ep = P(e);
    bool found = false;
    for (const Polynomial& g : got)
      if (g == ep) found = true;
    if (!found) return false;
  }
  for (const Polynomial& g : got) {
    bool found = false;
    for (const std::string& e : expect)
      if (g == P(e)) found = true;
    if (!found) return false;
  }
  return true;
}

void collect_level_nodes(const SNode* node, int var,
                         std::vector<const SNode*>& out) {
  if (node == nullptr) return;
  if (node->var == var) out.push_back(node);
  for (const auto& k : node->kids) collect_level_nodes(k.get(), var, out);
}

PolyMatrix poly_mul(const PolyMatrix& a, const PolyMatrix& b) {
  std::size_t n = a.size();
  PolyMatrix out(n, std::vector<Polynomial>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Polynomial acc;
      for (std::size_t k = 0; k < n; ++k) acc += a[i][k] * b[k][j];
      out[i][j] = acc;
    }
  return out;
}

bool mats_equal(const PolyMatrix& a, const PolyMatrix& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (!(a[i][j] == b[i][j])) return false;
  }
  return true;
}

// The depth-1 subtree of a rendered tree below the given header line,
// deindented by one level.
std::string depth1_subtree(const std::string& tree, const std::string& header) {
  std::istringstream in(tree);
  std::string line, out;
  bool active = false;
  while (std::getline(in, line)) {
    if (line == "  " + header) {
      active = true;
      out += header + "\n";
      continue;
    }
    if (!active) continue;
    if (line.rfind("    ", 0) == 0) {
      out += line.substr(2) + "\n";
      continue;
    }
    break;  // the next node at depth <= 1 ends the block
  }
  return out;
}

const std::string kTwoStateTransient = R"({
  "n": 2, "lambda": null,
  "P": [["p11", "p12"], ["p21", "p22"]],
  "r": ["r1", "r2"],
  "pi": [1, 0]
})";

const std::string kThreeStateNetBenefit = R"({
  "n": 3, "lambda": null,
  "P": [["0", "p_u", "0"], ["0", "0", "p0"], ["0", "0", "1/2"]],
  "b": ["0", "2", "-3/4"],
  "c": ["m", "0", "0"],
  "pi": [1, 0, 0]
})";

// Leaf-count records gathered by the property criteria and re-checked by
// the cell-count-bound criterion.
struct CorpusEntry {
  long long leaves = 0;
  Int bound;              // the library's own bound
  Int independent_bound;  // 3^{sum tau} * 4^{eta}, recomputed here
};
std::vector<CorpusEntry> g_corpus;

Int independent_cell_bound(const SystemM& sys) {
  Int b = 1;
  for (const auto& s : sys.simplices)
    for (std::size_t i = 0; i < s.vars.size(); ++i) b *= 3;
  for (std::size_t i = 0; i < sys.terms.size(); ++i) b *= 4;
  return b;
}

struct Criterion {
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& text) { notes.push_back(text); }
};

// --------------------------------------------------------------------------
// 1. Sphere golden run.
// --------------------------------------------------------------------------
void criterion_sphere(Criterion& c) {
  int x = intern_var("x"), y = intern_var("y"), z = intern_var("z");
  PolySystem sys{{{P("x^2 + y^2 + z^2 - 1"), Rel::Eq}}};
  auto t0 = std::chrono::steady_clock::now();
  Cad cad = decision_cad(sys, {x, y, z});
  SignedFormula formula = solution_formula(cad);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  c.require(set_eq(cad.levels[1].raw,
                   {"1", "2", "x^2 + y^2 - 1", "-4*x^2 - 4*y^2 + 4"}),
            "first projection raw set differs from "
            "{1, 2, x^2 + y^2 - 1, -4*x^2 - 4*y^2 + 4}");
  c.require(set_eq(cad.levels[0].raw,
                   {"-8", "-4", "0", "1", "2", "-256 + 256*x^2", "-4*x^2 + 4",
                    "x^2 - 1", "x^4 - 2*x^2 + 1"}),
            "second projection raw set differs from the pinned nine-element "
            "set");

  int leaves = cad.leaf_count();
  if (leaves != 41) {
    std::ostringstream msg;
    msg << "expected exactly 41 leaf cells, but the decomposition has "
        << leaves << " leaves";
    c.require(false, msg.str());
    std::ostringstream why;
    std::vector<int> per = cad.cells_per_level();
    why << "stack counts per level are";
    for (int k : per) why << " " << k;
    why << " (" << cad.cell_count
        << " cells in total, " << leaves
        << " of them leaves); the pinned 41 matches neither the leaf count "
           "nor any level total, and every other clause of this run is "
           "verified exact below";
    c.note(why.str());
  }

  int true_cells = 0;
  bool all_rational = true;
  std::set<std::vector<Rat>> true_samples;
  walk_leaves(cad, [&](const CadNode& leaf,
                       const std::vector<SampleCoord>& sample) {
    for (const SampleCoord& co : sample)
      if (!coord_is_rational(co)) all_rational = false;
    if (leaf.truth && coord_is_rational(sample[0]) &&
        coord_is_rational(sample[1]) && coord_is_rational(sample[2])) {
      ++true_cells;
      true_samples.insert({coord_rational(sample[0]),
                           coord_rational(sample[1]),
                           coord_rational(sample[2])});
    }
  });
  std::set<std::vector<Rat>> expect = {
      {Rat(-1), Rat(0), Rat(0)}, {Rat(0), Rat(-1), Rat(0)},
      {Rat(0), Rat(0), Rat(-1)}, {Rat(0), Rat(0), Rat(1)},
      {Rat(0), Rat(1), Rat(0)},  {Rat(1), Rat(0), Rat(0)}};
  c.require(all_rational, "a sample coordinate left the rationals");
  c.require(true_cells == 6, "expected exactly 6 true cells, found " +
                                 std::to_string(true_cells));
  c.require(true_samples == expect,
            "true-cell samples differ from the six unit points");

  // Formula atoms of the cell sampled at (0, 0, 1).
  bool pole_found = false;
  std::size_t pole = 0;
  walk_leaves(cad, [&, k = std::size_t(0)](
                       const CadNode& leaf,
                       const std::vector<SampleCoord>& sample) mutable {
    if (leaf.truth) {
      if (coord_is_rational(sample[0]) && coord_rational(sample[0]) == 0 &&
          coord_is_rational(sample[1]) && coord_rational(sample[1]) == 0 &&
          coord_is_rational(sample[2]) && coord_rational(sample[2]) == 1) {
        pole = k;
        pole_found = true;
      }
      ++k;
    }
  });
  c.require(pole_found, "no true cell sampled at (0, 0, 1)");
  if (pole_found) {
    const auto& conj = formula.disjuncts[pole];
    bool atoms_ok = conj.size() == 3 && conj[0].factor == P("x^2 - 1") &&
                    conj[0].sign == -1 &&
                    conj[1].factor == P("x^2 + y^2 - 1") &&
                    conj[1].sign == -1 &&
                    conj[2].factor == P("x^2 + y^2 + z^2 - 1") &&
                    conj[2].sign == 0;
    c.require(atoms_ok,
              "the (0, 0, 1) cell formula is not {x^2 - 1 < 0, "
              "x^2 + y^2 - 1 < 0, x^2 + y^2 + z^2 - 1 = 0}");
  }

  std::ostringstream budget;
  budget << "run took longer than the pinned " << kSphereSecondsBudget
         << " s budget";
  c.require(secs < kSphereSecondsBudget, budget.str());
}

// --------------------------------------------------------------------------
// 2. Principal subresultant coefficient unit value.
// --------------------------------------------------------------------------
void criterion_psc(Criterion& c) {
  int x = intern_var("x");
  Polynomial p0 = psc(P("3*x^2 + 5*x + 6"), P("4*x^2 + 2*x + 1"), x, 0);
  c.require(p0.is_constant() && p0.constant_value() == rat(-343),
            "psc_0(3x^2 + 5x + 6, 4x^2 + 2x + 1) is " +
                poly_str(p0, RenderOrder::AscendingConstFirst) +
                ", expected -343");
}

// --------------------------------------------------------------------------
// 3. Two projection steps of the two-variable budget system.
// --------------------------------------------------------------------------
void criterion_projection_steps(Criterion& c) {
  // Intern the weights before the level variables: rendered products list
  // the earlier-interned factor first, and the pinned trees of the later
  // criteria write the weight first (alpha1*x1, not x1*alpha1).
  intern_var("alpha1");
  intern_var("alpha2");
  intern_var("alpha3");
  int x1 = intern_var("x1"), x2 = intern_var("x2");
  Polynomial f = P("alpha1*x1 + alpha2*x2 - 1");
  Polynomial budget = P("alpha1 + alpha2 - 1");

  ProjectionFactorSet step1 = hong_projection({f, budget}, x1);
  c.require(
      set_eq(step1.raw, {"alpha1", "alpha2*x2 - 1", "alpha1 + alpha2 - 1"}),
      "first step raw set differs from {alpha1, alpha2*x2 - 1, "
      "alpha1 + alpha2 - 1}");

  ProjectionFactorSet step2 = hong_projection(step1.raw, x2);
  c.require(set_eq(step2.factors, {"alpha1", "alpha2", "alpha1 + alpha2 - 1"}),
            "second step normalized set differs from {alpha1, alpha2, "
            "alpha1 + alpha2 - 1}");

  c.note(
      "the first-step member is alpha2*x2 - 1; a commonly quoted variant "
      "lists alpha1*x2 - 1, but eliminating x1 keeps the coefficient of x2, "
      "which is alpha2");
  (void)x2;
}

// --------------------------------------------------------------------------
// 4. Sign-flipping coefficient rejected with exact witnesses.
// --------------------------------------------------------------------------
void criterion_sign_flip(Criterion& c) {
  SimplexSpec block = make_simplex({"alpha1", "alpha2"}, 0);
  int a1 = block.vars[0], a2 = block.vars[1];
  XTerm t1, t2;
  t1.var = intern_var("x1");
  t1.g = Polynomial::variable(a2) * Polynomial::variable(a2) -
         Polynomial::variable(a1) * Polynomial::variable(a1);
  t2.var = intern_var("x2");
  t2.g = Polynomial::variable(a2);
  Polynomial flipping = t1.g;
  SystemM sys = make_system(Polynomial(Rat(-1)), {t1, t2}, {block});

  ExtensibilityReport rep = check_simplex_extensible(sys);
  c.require(!rep.extensible,
            "the system with coefficient alpha2^2 - alpha1^2 was accepted");

  const GVerdict* gv = nullptr;
  for (const auto& g : rep.g_verdicts)
    if (!g.invariant && g.term_index == 0) gv = &g;
  c.require(gv != nullptr, "no sign-flip verdict for the first coefficient");
  if (gv != nullptr) {
    c.require(gv->witness_cell.rfind("0 < alpha1 < 1", 0) == 0,
              "witness cell is \"" + gv->witness_cell +
                  "\", expected one inside 0 < alpha1 < 1");
    c.require(gv->witness_a.at(a1) == rat(1, 5) &&
                  gv->witness_a.at(a2) == rat(4, 5),
              "positive witness is not (1/5, 4/5)");
    c.require(gv->witness_b.at(a1) == rat(4, 5) &&
                  gv->witness_b.at(a2) == rat(1, 5),
              "negative witness is not (4/5, 1/5)");
    c.require(gv->sign_a == 1 && sgn(flipping.eval(gv->witness_a)) == 1,
              "the coefficient is not positive at the first witness");
    c.require(gv->sign_b == -1 && sgn(flipping.eval(gv->witness_b)) == -1,
              "the coefficient is not negative at the second witness");
  }

  bool threw = false;
  try {
    specialized_cad(sys);
  } catch (const NotSimplexExtensible&) {
    threw = true;
  }
  c.require(threw, "specialized_cad accepted the rejected system");
}

// --------------------------------------------------------------------------
// 5. Pinned subtree of the three-level budget tree.
// --------------------------------------------------------------------------
const char* kBudgetSubtree =
    "0 < alpha1 < 1\n"
    "  alpha2 = 0\n"
    "    alpha3 = 1 - alpha1\n"
    "      0 <= x1 < 1/alpha1\n"
    "        x2 >= 0\n"
    "          x3 >= (1 - alpha1*x1)/alpha3\n"
    "      x1 >= 1/alpha1\n"
    "        x2 >= 0\n"
    "          x3 >= 0\n"
    "  0 < alpha2 < 1 - alpha1\n"
    "    alpha3 = 1 - alpha1 - alpha2\n"
    "      0 <= x1 < 1/alpha1\n"
    "        0 <= x2 < (1 - alpha1*x1)/alpha2\n"
    "          x3 >= (1 - alpha1*x1 - alpha2*x2)/alpha3\n"
    "        x2 >= (1 - alpha1*x1)/alpha2\n"
    "          x3 >= 0\n"
    "      x1 >= 1/alpha1\n"
    "        x2 >= 0\n"
    "          x3 >= 0\n"
    "  alpha2 = 1 - alpha1\n"
    "    alpha3 = 0\n"
    "      0 <= x1 < 1/alpha1\n"
    "        x2 >= (1 - alpha1*x1)/alpha2\n"
    "          x3 >= 0\n"
    "      x1 >= 1/alpha1\n"
    "        x2 >= 0\n"
    "          x3 >= 0\n";

SystemM linear_budget_system_3() {
  SimplexSpec block = make_simplex({"alpha1", "alpha2", "alpha3"}, 0);
  XTerm t1, t2, t3;
  t1.var = intern_var("x1");
  t1.g = Polynomial::variable(block.vars[0]);
  t2.var = intern_var("x2");
  t2.g = Polynomial::variable(block.vars[1]);
  t3.var = intern_var("x3");
  t3.g = Polynomial::variable(block.vars[2]);
  return make_system(Polynomial(Rat(-1)), {t1, t2, t3}, {block});
}

void criterion_budget_subtree(Criterion& c) {
  SystemM sys = linear_budget_system_3();
  SpecializedCad cad = specialized_cad(sys);
  c.require(cad.report.extensible, "the linear budget system was rejected");

  std::string got = depth1_subtree(render_tree(cad), "0 < alpha1 < 1");
  c.require(contains(got, "x3 >= (1 - alpha1*x1 - alpha2*x2)/alpha3"),
            "subtree lacks the branch bound "
            "x3 >= (1 - alpha1*x1 - alpha2*x2)/alpha3");
  c.require(got == kBudgetSubtree,
            "the rendered subtree over 0 < alpha1 < 1 differs from the "
            "pinned golden text");
}

// --------------------------------------------------------------------------
// 6. Specialized and general decompositions agree on random instances.
// --------------------------------------------------------------------------
void criterion_agreement(Criterion& c) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260822);
  int made = 0, attempts = 0, skipped = 0;
  long long points_checked = 0, disagreements = 0, unplaced = 0;
  while (made < 50 && attempts < 200) {
    SystemM sys = oracle::random_extensible_instance(rng, 1000 + attempts);
    ++attempts;
    try {
      SpecializedCad cad = specialized_cad(sys);
      PolySystem gsys = oracle::general_system(sys);
      Cad gen = decision_cad(gsys, cad.level_vars);
      for (int p = 0; p < 200; ++p) {
        auto pt = oracle::random_point(sys, rng, p % 2 == 0);
        bool direct = system_holds(gsys, pt);
        bool special = oracle::specialized_truth_at(cad, pt);
        std::optional<bool> general = oracle::cad_truth_at(gen, pt);
        if (!general.has_value()) {
          ++unplaced;
          continue;
        }
        if (direct != special || direct != *general) ++disagreements;
        ++points_checked;
      }
      g_corpus.push_back({cad.leaves_before_pruning, cad.bound,
                          independent_cell_bound(sys)});
      ++made;
    } catch (const TowerOverflow&) {
      ++skipped;
    } catch (const CellLimitExceeded&) {
      ++skipped;
    }
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  c.require(made >= 50,
            "built only " + std::to_string(made) + " of 50 instances");
  c.require(disagreements == 0,
            std::to_string(disagreements) +
                " point verdicts disagreed between the three routes");
  c.require(unplaced == 0, std::to_string(unplaced) +
                               " points could not be located in the general "
                               "tree");
  std::ostringstream budget;
  budget << "agreement run took longer than the pinned "
         << kAgreementSecondsBudget << " s budget";
  c.require(secs < kAgreementSecondsBudget, budget.str());
  c.note(std::to_string(made) + " instances, " +
         std::to_string(points_checked) +
         " three-way point agreements (direct evaluation, specialized tree, "
         "general decomposition)" +
         (skipped ? ", " + std::to_string(skipped) + " regenerated" : ""));
}

// --------------------------------------------------------------------------
// 7. Metric builders against the exact linear-solve oracle.
// --------------------------------------------------------------------------
void criterion_metric_oracle(Criterion& c) {
  std::mt19937_64 rng(733);
  int checked = 0;
  long mismatches = 0;

  for (int it = 0; it < 24; ++it) {
    MarkovModel m = oracle::random_numeric_model(rng, it % 2 == 0, false);
    Query q;
    q.metric = Metric::TotalRewardGE;
    q.threshold = oracle::random_rat(rng, Rat(-3), Rat(3));
    BuildResult out = build_system(m, nullptr, q);
    Rat expected = oracle::numeric_value(m, m.r) - q.threshold;
    if (sgn(out.system.fstar.constant_value()) != sgn(expected)) ++mismatches;
    ++checked;
  }

  for (int it = 0; it < 24; ++it) {
    MarkovModel m = oracle::random_numeric_model(rng, it % 2 == 0, false);
    Query q;
    q.metric = Metric::FiniteRewardGE;
    q.threshold = oracle::random_rat(rng, Rat(-3), Rat(3));
    q.horizon = static_cast<long>(rng() % 6);
    BuildResult out = build_system(m, nullptr, q);
    Rat expected =
        oracle::numeric_finite_value(m, m.r, static_cast<int>(q.horizon)) -
        q.threshold;
    // The finite-horizon build clears no denominator, so the value itself
    // must match, not just the sign.
    if (out.system.fstar.constant_value() != expected) ++mismatches;
    ++checked;
  }

  for (int it = 0; it < 24; ++it) {
    MarkovModel a = oracle::random_numeric_model(rng, it % 2 == 0, false);
    MarkovModel b = oracle::random_numeric_model(rng, it % 2 == 0, false);
    Query q;
    q.metric = Metric::CompareRewards;
    BuildResult out = build_system(a, &b, q);
    Rat expected = oracle::numeric_value(a, a.r) - oracle::numeric_value(b, b.r);
    if (sgn(out.system.fstar.constant_value()) != sgn(expected)) ++mismatches;
    ++checked;
  }

  for (int it = 0; it < 24; ++it) {
    MarkovModel m = oracle::random_numeric_model(rng, it % 2 == 0, true);
    Query q;
    q.metric = Metric::NMB_GE;
    q.threshold = oracle::random_rat(rng, Rat(-3), Rat(3));
    q.wtp = oracle::random_rat(rng, rat(1, 2), Rat(4));
    std::vector<Polynomial> rw;
    for (int i = 0; i < m.n; ++i)
      rw.push_back(Polynomial(q.wtp) * m.b[static_cast<std::size_t>(i)] -
                   m.c[static_cast<std::size_t>(i)]);
    BuildResult out = build_system(m, nullptr, q);
    Rat expected = oracle::numeric_value(m, rw) - q.threshold;
    if (sgn(out.system.fstar.constant_value()) != sgn(expected)) ++mismatches;
    ++checked;
  }

  int icer_done = 0;
  for (int attempt = 0; attempt < 140 && icer_done < 24; ++attempt) {
    MarkovModel a = oracle::random_numeric_model(rng, attempt % 2 == 0, true);
    MarkovModel b = oracle::random_numeric_model(rng, attempt % 2 == 0, true);
    Rat delta_b = oracle::numeric_value(a, a.b) - oracle::numeric_value(b, b.b);
    if (delta_b == 0) continue;
    Rat delta_c = oracle::numeric_value(a, a.c) - oracle::numeric_value(b, b.c);
    Query q;
    q.metric = Metric::ICER_LE;
    q.threshold = oracle::random_rat(rng, Rat(-2), Rat(2));
    q.icer_benefit_positive = delta_b > 0;
    BuildResult out = build_system(a, &b, q);
    Rat expected = q.icer_benefit_positive
                       ? Rat(q.threshold * delta_b - delta_c)
                       : Rat(delta_c - q.threshold * delta_b);
    if (sgn(out.system.fstar.constant_value()) != sgn(expected)) ++mismatches;
    ++icer_done;
    ++checked;
  }

  c.require(icer_done == 24, "only " + std::to_string(icer_done) +
                                 " ratio comparisons had a nonzero benefit "
                                 "difference");
  c.require(checked >= 100, "only " + std::to_string(checked) +
                                " model checks were run, need at least 100");
  c.require(mismatches == 0, std::to_string(mismatches) +
                                 " builder values disagreed with the "
                                 "linear-solve oracle");
  c.note(std::to_string(checked) +
         " model checks across all five metrics, every sign exact and the "
         "finite-horizon values equal outright");
}

// --------------------------------------------------------------------------
// 8. Determinant positivity, adjugate nonnegativity, and M adj = det I.
// --------------------------------------------------------------------------
void criterion_det_adj(Criterion& c) {
  // Fully symbolic identity for sizes one to three, both multiplication
  // orders.
  for (int n = 1; n <= 3; ++n) {
    int lam = intern_var("slam");
    PolyMatrix m(static_cast<std::size_t>(n),
                 std::vector<Polynomial>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int q = intern_var("sq" + std::to_string(i) + "_" + std::to_string(j));
        Polynomial e = (i == j) ? Polynomial(Rat(1)) : Polynomial();
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            e - Polynomial::variable(lam) * Polynomial::variable(q);
      }
    DetAdj da = det_adj(m);
    PolyMatrix det_i(static_cast<std::size_t>(n),
                     std::vector<Polynomial>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
      det_i[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = da.det;
    c.require(mats_equal(poly_mul(m, da.adj), det_i),
              "M adj(M) != det(M) I symbolically at size " +
                  std::to_string(n));
    c.require(mats_equal(poly_mul(da.adj, m), det_i),
              "adj(M) M != det(M) I symbolically at size " +
                  std::to_string(n));
  }

  // One hundred random rational stochastic substitutions.
  std::mt19937_64 rng(20260822);
  long bad_det = 0, bad_adj = 0;
  for (int it = 0; it < 100; ++it) {
    int n = 1 + static_cast<int>(rng() % 4);
    Rat lam = rat(1 + static_cast<long>(rng() % 9), 10);
    PolyMatrix a(static_cast<std::size_t>(n),
                 std::vector<Polynomial>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
      std::vector<long> w(static_cast<std::size_t>(n));
      long sum = 0;
      for (auto& x : w) {
        x = static_cast<long>(rng() % 6);
        sum += x;
      }
      if (sum == 0) {
        w[static_cast<std::size_t>(rng() % static_cast<unsigned>(n))] = 1;
        sum = 1;
      }
      for (int j = 0; j < n; ++j) {
        Rat entry = (i == j ? Rat(1) : Rat(0)) -
                    lam * rat(w[static_cast<std::size_t>(j)], sum);
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            Polynomial(entry);
      }
    }
    DetAdj da = det_adj(a);
    if (!(da.det.constant_value() > 0)) ++bad_det;
    for (const auto& row : da.adj)
      for (const auto& e : row)
        if (e.constant_value() < 0) ++bad_adj;
  }
  c.require(bad_det == 0, std::to_string(bad_det) +
                              " substitutions produced a nonpositive "
                              "determinant");
  c.require(bad_adj == 0, std::to_string(bad_adj) +
                              " adjugate entries came out negative");
}

// --------------------------------------------------------------------------
// 9. Two-state case study: boundary point, grid verdicts, reward bound.
// --------------------------------------------------------------------------
void criterion_case_study(Criterion& c) {
  MarkovModel m = load_model(kTwoStateTransient);
  Query fixed_q = load_query(R"({
    "metric": "total-reward-ge", "threshold": "3",
    "fixed": {"p12": "2/5", "p21": "1/10", "r1": "1", "r2": "1/2"}
  })");
  BuildResult fixed_out = build_system(m, nullptr, fixed_q);
  int u = find_var("p11"), v = find_var("p22");

  BoundaryCurve bc = boundary_curve(fixed_out.system.fstar, u, v, {}, Rat(0),
                                    rat(3, 5), 21, Rat(0), rat(9, 10));
  const BoundaryPoint* mid = nullptr;
  for (const auto& p : bc.points)
    if (p.u == rat(3, 10)) mid = &p;
  c.require(mid != nullptr && mid->solved,
            "no solved boundary point at p11 = 3/10");
  if (mid != nullptr && mid->solved) {
    c.require(mid->v == rat(39, 55), "boundary p22 at p11 = 3/10 is " +
                                         rat_str(mid->v) +
                                         ", expected 39/55");
    c.require(mid->v > rat(7, 10) && mid->v < rat(8, 10),
              "boundary p22 is not strictly inside (7/10, 8/10)");
  }
  long off_curve = 0;
  for (const auto& p : bc.points)
    if (p.solved &&
        fixed_out.system.fstar.eval({{u, p.u}, {v, p.v}}) != 0)
      ++off_curve;
  c.require(off_curve == 0, std::to_string(off_curve) +
                                " emitted boundary points do not satisfy "
                                "f* = 0 exactly");

  GridTable gt = grid_compare(fixed_out.system.fstar, u, v, {}, Rat(0),
                              rat(3, 5), Rat(0), rat(9, 10), 7, 10);
  bool sat_found = false, sat_ok = false, vio_found = false, vio_ok = false;
  for (const auto& row : gt.rows) {
    if (row.u == rat(3, 10) && row.v == rat(8, 10)) {
      sat_found = true;
      sat_ok = row.satisfied;
    }
    if (row.u == rat(3, 10) && row.v == rat(7, 10)) {
      vio_found = true;
      vio_ok = !row.satisfied;
    }
  }
  c.require(sat_found && sat_ok,
            "grid verdict at (p11, p22) = (3/10, 8/10) is not satisfied");
  c.require(vio_found && vio_ok,
            "grid verdict at (p11, p22) = (3/10, 7/10) is not violated");

  // The eight-parameter run carries the symbolic reward bound.
  Query free_q = load_query(R"({"metric": "total-reward-ge", "threshold": "3"})");
  BuildResult free_out = build_system(m, nullptr, free_q);
  SpecializedCad cad = specialized_cad(free_out.system);
  std::vector<const SNode*> r1_nodes;
  collect_level_nodes(cad.root.get(), find_var("r1"), r1_nodes);
  Polynomial want_num = pp("3 - 3*p11 - 3*p22 + 3*p11*p22 - 3*p12*p21");
  Polynomial want_den = pp("1 - p22");
  bool found_bound = false;
  for (const SNode* n : r1_nodes)
    if (n->bound && !n->bound->folded && n->bound->num == want_num &&
        n->bound->den == want_den)
      found_bound = true;
  c.require(found_bound,
            "no cell carries the reward bound (3 - 3 p11 - 3 p22 + "
            "3 p11 p22 - 3 p12 p21)/(1 - p22) as a polynomial identity");
  c.require(contains(render_tree(cad), "r2 >= 0"),
            "the tree lacks the r2 >= 0 cell rendering");
}

// --------------------------------------------------------------------------
// 10. Row-dominant matrix trees: structure and exact membership.
// --------------------------------------------------------------------------
bool alpha_cell_contains(const AlphaCell& cell,
                         const std::map<int, Rat>& pt) {
  for (int v : cell.levels) {
    auto it = cell.eq.find(v);
    if (it != cell.eq.end()) {
      if (pt.at(v) != it->second.eval(pt)) return false;
    } else {
      Rat hi = cell.open_hi.at(v).eval(pt);
      if (!(pt.at(v) > 0 && pt.at(v) < hi)) return false;
    }
  }
  return true;
}

void criterion_row_dominant(Criterion& c) {
  // Structure of the two-state tree: over the open row-1 cell the second
  // row's first weight spans 0 <= alpha2,1 <= alpha1,1 as {0}, an open
  // interval below alpha1,1, and the point alpha1,1 itself.
  SimplexCad two = ifr_cad(2);
  int a11 = find_var("alpha1_1"), a21 = find_var("alpha2_1");
  c.require(a11 >= 0 && a21 >= 0, "matrix weight variables missing");
  bool structure_ok = two.root->kids.size() == 3;
  if (structure_ok) {
    const SNode& open = *two.root->kids[1];
    structure_ok = open.kids.size() == 1 && open.kids[0]->kids.size() == 3;
    if (structure_ok) {
      const SNode& row2 = *open.kids[0];
      structure_ok = row2.kids[0]->is_point && row2.kids[0]->value.is_zero() &&
                     !row2.kids[1]->is_point && row2.kids[1]->var == a21 &&
                     row2.kids[1]->hi == Polynomial::variable(a11) &&
                     row2.kids[2]->is_point &&
                     row2.kids[2]->value == Polynomial::variable(a11);
    }
  }
  c.require(structure_ok,
            "the two-state tree does not carry the branch "
            "0 <= alpha2,1 <= alpha1,1 over the open row-1 cell");

  std::mt19937_64 rng(20260822);
  for (int phi : {2, 3}) {
    SimplexCad cad = ifr_cad(phi);
    std::vector<std::vector<int>> row_vars(static_cast<std::size_t>(phi));
    for (int i = 1; i <= phi; ++i)
      for (int j = 1; j <= phi; ++j)
        row_vars[static_cast<std::size_t>(i - 1)].push_back(
            find_var("alpha" + std::to_string(i) + "_" + std::to_string(j)));
    std::vector<AlphaCell> cells = alpha_cells(cad);

    // One hundred random points per leaf satisfy the partial-sum
    // inequalities of consecutive rows.
    long bad = 0, sampled = 0;
    for (const AlphaCell& cell : cells) {
      for (int repeat = 0; repeat < 100; ++repeat) {
        std::map<int, Rat> p;
        for (int v : cell.levels) {
          auto eq = cell.eq.find(v);
          if (eq != cell.eq.end()) {
            p[v] = eq->second.eval(p);
          } else {
            Rat hi = cell.open_hi.at(v).eval(p);
            p[v] = hi * rat(1 + static_cast<long>(rng() % 997), 998);
          }
        }
        ++sampled;
        for (int i = 0; i < phi; ++i) {
          Rat row_sum(0);
          for (int v : row_vars[static_cast<std::size_t>(i)]) {
            if (p.at(v) < 0) ++bad;
            row_sum += p.at(v);
          }
          if (row_sum != 1) ++bad;
        }
        for (int i = 1; i < phi; ++i) {
          Rat prev(0), cur(0);
          for (int j = 0; j < phi; ++j) {
            prev += p.at(row_vars[static_cast<std::size_t>(i - 1)]
                             [static_cast<std::size_t>(j)]);
            cur += p.at(row_vars[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j)]);
            if (cur > prev) ++bad;
          }
        }
      }
    }
    c.require(bad == 0, std::to_string(bad) + " inequality violations over " +
                            std::to_string(sampled) +
                            " sampled cell points at " + std::to_string(phi) +
                            " states");

    // One hundred random row-dominance violators lie in no cell.
    int rejected = 0, in_cells = 0;
    for (int attempt = 0; attempt < 100000 && rejected < 100; ++attempt) {
      std::vector<std::vector<Rat>> rows(static_cast<std::size_t>(phi));
      for (int i = 0; i < phi; ++i) {
        std::vector<long> w(static_cast<std::size_t>(phi));
        long sum = 0;
        for (auto& x : w) {
          x = static_cast<long>(rng() % 6);
          sum += x;
        }
        if (sum == 0) {
          w[static_cast<std::size_t>(rng() % static_cast<unsigned>(phi))] = 1;
          sum = 1;
        }
        for (long x : w) rows[static_cast<std::size_t>(i)].push_back(rat(x, sum));
      }
      bool violates = false;
      for (int i = 1; i < phi && !violates; ++i) {
        Rat prev(0), cur(0);
        for (int j = 0; j < phi; ++j) {
          prev += rows[static_cast<std::size_t>(i - 1)]
                      [static_cast<std::size_t>(j)];
          cur += rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          if (cur > prev) violates = true;
        }
      }
      if (!violates) continue;
      ++rejected;
      std::map<int, Rat> pt;
      for (int i = 0; i < phi; ++i)
        for (int j = 0; j < phi; ++j)
          pt[row_vars[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]] =
              rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      for (const AlphaCell& cell : cells)
        if (alpha_cell_contains(cell, pt)) ++in_cells;
    }
    c.require(rejected == 100,
              "only generated " + std::to_string(rejected) +
                  " dominance violators at " + std::to_string(phi) +
                  " states");
    c.require(in_cells == 0, std::to_string(in_cells) +
                                 " violating matrices landed inside a cell "
                                 "at " + std::to_string(phi) + " states");
  }
}

// --------------------------------------------------------------------------
// 11. Satisfiability encoding against brute force on a fixed corpus.
// --------------------------------------------------------------------------
void criterion_sat_corpus(Criterion& c) {
  std::mt19937_64 rng(4242);
  int satisfiable = 0;
  long mismatches = 0;
  for (int inst = 0; inst < 50; ++inst) {
    int nv = 1 + static_cast<int>(rng() % 3);
    int nc = 1 + static_cast<int>(rng() % 4);
    std::vector<std::vector<int>> clauses;
    for (int k = 0; k < nc; ++k) {
      std::vector<int> clause;
      for (int l = 0; l < 3; ++l) {
        int var = 1 + static_cast<int>(rng() % static_cast<unsigned>(nv));
        clause.push_back(rng() % 2 ? var : -var);
      }
      clauses.push_back(std::move(clause));
    }
    SystemM sys = encode_3sat(clauses, nv);
    SpecializedCad cad = specialized_cad(sys);
    bool feasible = cad.true_leaves > 0;
    bool expected = oracle::brute_sat(clauses, nv);
    if (feasible != expected) ++mismatches;
    if (expected) ++satisfiable;
    g_corpus.push_back({cad.leaves_before_pruning, cad.bound,
                        independent_cell_bound(sys)});
  }
  c.require(mismatches == 0,
            std::to_string(mismatches) +
                " of 50 instances disagreed with brute-force evaluation");
  c.note("50 fixed instances, " + std::to_string(satisfiable) +
         " satisfiable and " + std::to_string(50 - satisfiable) + " not");
}

// --------------------------------------------------------------------------
// 12. Cell-count bounds across the corpus; glue product law.
// --------------------------------------------------------------------------
void criterion_cell_bounds(Criterion& c) {
  c.require(!g_corpus.empty(),
            "no corpus data: the property criteria did not run");
  long over = 0, bound_mismatch = 0;
  for (const CorpusEntry& e : g_corpus) {
    if (Int(static_cast<long>(e.leaves)) > e.bound) ++over;
    if (e.bound != e.independent_bound) ++bound_mismatch;
  }
  c.require(over == 0, std::to_string(over) +
                           " corpus instances exceeded 3^tau 4^eta leaves");
  c.require(bound_mismatch == 0,
            std::to_string(bound_mismatch) +
                " instances where the reported bound is not 3^tau 4^eta");
  c.note(std::to_string(g_corpus.size()) +
         " corpus instances checked against the bound");

  // Gluing disjoint blocks multiplies leaf counts exactly.
  SimplexSpec a = make_simplex({"ga1", "ga2", "ga3"}, 0);
  SimplexSpec b = make_simplex({"gb1", "gb2", "gb3"}, 1);
  SimplexSpec two_eq = make_simplex({"gc1", "gc2"}, 1);
  SimplexSpec two_le = make_simplex({"gd1", "gd2"}, 1, Rat(1), BudgetMode::Leq);
  SimplexCad ta = simplex_cad(a);
  SimplexCad tb = simplex_cad(b);
  SimplexCad tc = simplex_cad(two_eq);
  SimplexCad td = simplex_cad(two_le);
  c.require(glue_simplices(ta, tb).leaf_count() ==
                ta.leaf_count() * tb.leaf_count(),
            "gluing two three-weight blocks does not multiply leaf counts");
  c.require(glue_simplices(ta, tc).leaf_count() ==
                ta.leaf_count() * tc.leaf_count(),
            "gluing against the two-weight block does not multiply");
  c.require(glue_simplices(ta, td).leaf_count() ==
                ta.leaf_count() * td.leaf_count(),
            "gluing against the budget-capped block does not multiply");
  c.require(simplex_cad({a, b}).leaf_count() ==
                ta.leaf_count() * tb.leaf_count(),
            "building both blocks at once differs from the glued product");
}

// --------------------------------------------------------------------------
// 13. Net-benefit workflow: folded bound structure and derivative signs.
// --------------------------------------------------------------------------
void criterion_net_benefit(Criterion& c) {
  MarkovModel m = load_model(kThreeStateNetBenefit);
  Query q = load_query(R"({"metric": "nmb-ge", "threshold": "0", "wtp": "1"})");
  BuildResult out = build_system(m, nullptr, q);
  SpecializedCad cad = specialized_cad(out.system);
  int pu = find_var("p_u"), p0 = find_var("p0"), mv = find_var("m");
  c.require(pu >= 0 && p0 >= 0 && mv >= 0, "model symbols missing");

  std::vector<const SNode*> m_nodes;
  collect_level_nodes(cad.root.get(), mv, m_nodes);
  const Polynomial* bound_poly = nullptr;
  for (const SNode* n : m_nodes)
    if (n->bound && n->bound->folded) bound_poly = &n->bound->num;
  c.require(bound_poly != nullptr,
            "no cell folds the budget coefficient into an upper bound on m");
  if (bound_poly == nullptr) return;

  // The bound is a p0 p_u + b p_u; derive both coefficients from the tree's
  // own polynomial.
  Polynomial a_part = bound_poly->coeff_of(p0, 1);   // a * p_u
  Polynomial b_part = bound_poly->coeff_of(p0, 0);   // b * p_u
  c.require(*bound_poly == pp("2*p_u - 3/2*p_u*p0"),
            "the folded bound is not 2 p_u - 3/2 p_u p0");
  c.require(a_part == pp("-3/2*p_u"),
            "the p0 p_u coefficient is not a = -3/2");
  c.require(b_part == pp("2*p_u"), "the p_u coefficient is not b = 2");

  // d(bound)/d p_u = 2 - 3/2 p0 is linear in p0 and positive at both ends
  // of [0, 1], hence positive on the whole range.
  Polynomial d_pu = bound_poly->coeff_of(pu, 1);
  c.require(d_pu == pp("2 - 3/2*p0"), "d(bound)/d p_u is not 2 - 3/2 p0");
  c.require(d_pu.eval({{p0, Rat(0)}}) > 0 && d_pu.eval({{p0, Rat(1)}}) > 0,
            "d(bound)/d p_u is not positive across p0 in [0, 1]");

  // d(bound)/d p0 = -3/2 p_u is linear in p_u, zero only at p_u = 0, and
  // negative at p_u = 1, hence negative for every p_u > 0.
  c.require(a_part.eval({{pu, Rat(1)}}) < 0 && a_part.eval({{pu, Rat(0)}}) == 0,
            "d(bound)/d p0 is not negative for p_u > 0");

  std::string tree = render_tree(cad);
  std::string cell_line;
  std::istringstream in(tree);
  std::string line;
  while (std::getline(in, line))
    if (contains(line, "0 <= m <= ") && cell_line.empty()) {
      std::size_t first = line.find_first_not_of(' ');
      cell_line = line.substr(first);
    }
  c.require(contains(cell_line, "0 <= m <= 2*p_u - 3/2*p_u*p0"),
            "the rendered cell is not 0 <= m <= 2*p_u - 3/2*p_u*p0");
  if (!cell_line.empty())
    c.note("rendered cell: " + cell_line +
           " (factors print as p_u*p0; the coefficient of that product is "
           "a = -3/2 and the standalone p_u coefficient is b = 2)");
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* title;
    std::function<void(Criterion&)> body;
  };
  std::vector<Entry> entries = {
      {1, "sphere run: projection sets, cell counts, true cells, formula",
       criterion_sphere},
      {2, "principal subresultant coefficient of the quadratic pair is -343",
       criterion_psc},
      {3, "two projection steps of the budget system match the pinned sets",
       criterion_projection_steps},
      {4, "sign-flipping coefficient is rejected with an exact witness pair",
       criterion_sign_flip},
      {5, "three-level budget tree matches the pinned subtree over "
          "0 < alpha1 < 1",
       criterion_budget_subtree},
      {6, "specialized and general decompositions agree on random instances",
       criterion_agreement},
      {7, "metric builders match the exact linear-solve oracle on numeric "
          "models",
       criterion_metric_oracle},
      {8, "determinant positive, adjugate nonnegative, M adj = det I",
       criterion_det_adj},
      {9, "two-state case study: boundary point, grid verdicts, reward bound",
       criterion_case_study},
      {10, "row-dominant matrix trees: structure and exact membership",
       criterion_row_dominant},
      {11, "satisfiability encoding matches brute force on the fixed corpus",
       criterion_sat_corpus},
      {12, "leaf counts stay within 3^tau 4^eta and gluing multiplies exactly",
       criterion_cell_bounds},
      {13, "net-benefit workflow: folded bound coefficients and derivative "
           "signs",
       criterion_net_benefit},
  };

  int failed = 0;
  for (const Entry& e : entries) {
    Criterion c;
    try {
      e.body(c);
    } catch (const std::exception& ex) {
      c.failures.push_back(std::string("unexpected exception: ") + ex.what());
    }
    bool ok = c.failures.empty();
    if (!ok) ++failed;
    std::printf("[%s] criterion %2d: %s\n", ok ? "PASS" : "FAIL", e.id,
                e.title);
    for (const auto& f : c.failures) std::printf("        - %s\n", f.c_str());
    for (const auto& n : c.notes) std::printf("        note: %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 13 criteria passed, %d failed.\n", 13 - failed, failed);
  return failed;
}
