#include "markovcad/simplex.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <functional>
#include <future>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "markovcad/realalg.hpp"

namespace mc {

namespace {

Polynomial poly_of(const Rat& c) { return Polynomial(c); }

std::string rat_point_str(const std::map<int, Rat>& pt) {
  std::string out = "(";
  bool first = true;
  for (const auto& [v, val] : pt) {
    if (!first) out += ", ";
    out += var_name(v) + "=" + rat_str(val);
    first = false;
  }
  return out + ")";
}

}  // namespace

// --- structured systems ---------------------------------------------------

SimplexSpec make_simplex(const std::vector<std::string>& names,
                         int simplex_index, Rat kappa, BudgetMode mode) {
  if (names.empty())
    throw std::invalid_argument("a simplex needs at least one variable");
  if (kappa <= 0 || kappa > 1)
    throw std::invalid_argument("simplex budget must lie in (0, 1]");
  SimplexSpec spec;
  spec.simplex_index = simplex_index;
  spec.kappa = kappa;
  spec.mode = mode;
  for (std::size_t i = 0; i < names.size(); ++i)
    spec.vars.push_back(intern_var(names[i], VarKind::Alpha, simplex_index,
                                   static_cast<int>(i)));
  return spec;
}

Polynomial XTerm::shape_poly() const {
  if (identity_shape()) return Polynomial::variable(var);
  return Polynomial::from_upoly(f, var);
}

Polynomial SystemM::assemble() const {
  Polynomial out = g0;
  for (const auto& t : terms) out += t.shape_poly() * t.g;
  return out;
}

void SystemM::validate() const {
  std::set<int> alpha_ids;
  for (const auto& s : simplices) {
    if (s.vars.empty())
      throw std::invalid_argument("a simplex needs at least one variable");
    if (s.kappa <= 0 || s.kappa > 1)
      throw std::invalid_argument("simplex budget must lie in (0, 1]");
    for (int v : s.vars)
      if (!alpha_ids.insert(v).second)
        throw std::invalid_argument("variable repeated across simplices");
  }
  if (ifr) {
    const int phi = static_cast<int>(simplices.size());
    for (const auto& s : simplices)
      if (s.tau() != phi || s.mode != BudgetMode::Eq || s.kappa != 1)
        throw std::invalid_argument(
            "increasing-failure-rate mode needs square Eq(1) blocks");
  }
  std::set<int> x_ids;
  for (const auto& t : terms) {
    if (t.var < 0 || alpha_ids.count(t.var) || !x_ids.insert(t.var).second)
      throw std::invalid_argument("unsupported f* shape");
    for (int v : t.g.variables())
      if (!alpha_ids.count(v)) throw std::invalid_argument("unsupported f* shape");
    if (!t.identity_shape()) {
      if (t.f.degree() < 1) throw std::invalid_argument("unsupported f* shape");
      if (!t.nonneg) throw std::invalid_argument("unsupported f* shape");
    }
  }
  for (int v : g0.variables())
    if (!alpha_ids.count(v)) throw std::invalid_argument("unsupported f* shape");
  if (fstar != assemble()) throw std::invalid_argument("unsupported f* shape");
}

SystemM make_system(Polynomial g0, std::vector<XTerm> terms,
                    std::vector<SimplexSpec> simplices, bool ifr) {
  SystemM sys;
  sys.g0 = std::move(g0);
  sys.terms = std::move(terms);
  sys.simplices = std::move(simplices);
  sys.ifr = ifr;
  sys.fstar = sys.assemble();
  sys.validate();
  return sys;
}

Int cell_count_bound(const SystemM& sys) {
  Int out = 1;
  for (const auto& s : sys.simplices)
    for (int j = 0; j < s.tau(); ++j) out *= 3;
  for (std::size_t i = 0; i < sys.terms.size(); ++i) out *= 4;
  return out;
}

// --- alpha tree construction ----------------------------------------------

namespace {

struct ALevel {
  int var = -1;
  Polynomial raw_bound;  // in terms of earlier alpha variables
  bool forced = false;   // equality level: var == raw_bound
};

std::vector<ALevel> alpha_levels_of(const std::vector<SimplexSpec>& specs,
                                    bool ifr) {
  std::vector<ALevel> out;
  if (!ifr) {
    for (const auto& s : specs) {
      Polynomial prefix;
      for (int j = 0; j < s.tau(); ++j) {
        ALevel lv;
        lv.var = s.vars[j];
        lv.raw_bound = poly_of(s.kappa) - prefix;
        lv.forced = (j == s.tau() - 1) && s.mode == BudgetMode::Eq;
        out.push_back(lv);
        prefix += Polynomial::variable(s.vars[j]);
      }
    }
    return out;
  }
  const int phi = static_cast<int>(specs.size());
  for (int i = 0; i < phi; ++i) {
    Polynomial row_prefix;
    Polynomial prev_prefix;  // running sum over the previous row
    for (int j = 0; j < phi; ++j) {
      ALevel lv;
      lv.var = specs[i].vars[j];
      if (i == 0) {
        lv.raw_bound = poly_of(Rat(1)) - row_prefix;
        lv.forced = (j == phi - 1);
      } else if (j == phi - 1) {
        lv.raw_bound = poly_of(Rat(1)) - row_prefix;
        lv.forced = true;
      } else {
        prev_prefix += Polynomial::variable(specs[i - 1].vars[j]);
        lv.raw_bound = prev_prefix - row_prefix;
        lv.forced = false;
      }
      out.push_back(lv);
      row_prefix += Polynomial::variable(specs[i].vars[j]);
    }
  }
  return out;
}

struct Ctx {
  std::map<int, Polynomial> eq;  // pinned alpha variables, fully substituted
  std::map<int, Rat> sample;     // every placed coordinate
};

std::unique_ptr<SNode> new_alpha_point(int var, Polynomial value, Rat sample,
                                       int raw_index) {
  auto n = std::make_unique<SNode>();
  n->var = var;
  n->alpha_level = true;
  n->is_point = true;
  n->value = std::move(value);
  n->sample = std::move(sample);
  n->raw_index = raw_index;
  return n;
}

std::unique_ptr<SNode> new_alpha_open(int var, Polynomial hi, Rat sample,
                                      int raw_index) {
  auto n = std::make_unique<SNode>();
  n->var = var;
  n->alpha_level = true;
  n->hi = std::move(hi);
  n->sample = std::move(sample);
  n->raw_index = raw_index;
  return n;
}

// Builds the alpha levels below parent; at_leaf runs with the context of
// each completed alpha cell.
void build_alpha(SNode* parent, const std::vector<ALevel>& levels,
                 std::size_t k, Ctx& ctx,
                 const std::function<void(SNode*, Ctx&)>& at_leaf) {
  if (k == levels.size()) {
    at_leaf(parent, ctx);
    return;
  }
  const ALevel& lv = levels[k];
  Polynomial bound = lv.raw_bound.substitute(ctx.eq);
  auto descend = [&](std::unique_ptr<SNode> cell, bool pin) {
    SNode* raw = cell.get();
    parent->kids.push_back(std::move(cell));
    if (pin) ctx.eq[lv.var] = raw->value;
    ctx.sample[lv.var] = raw->sample;
    build_alpha(raw, levels, k + 1, ctx, at_leaf);
    ctx.sample.erase(lv.var);
    if (pin) ctx.eq.erase(lv.var);
  };
  if (lv.forced || bound.is_zero()) {
    Rat b = bound.eval(ctx.sample);
    if (b < 0) throw std::logic_error("negative simplex budget");
    descend(new_alpha_point(lv.var, bound, b, 0), /*pin=*/true);
    return;
  }
  Rat b = bound.eval(ctx.sample);
  if (b <= 0) throw std::logic_error("vanishing open simplex budget");
  descend(new_alpha_point(lv.var, Polynomial(Rat(0)), Rat(0), 0), true);
  descend(new_alpha_open(lv.var, bound, b / 2, 1), false);
  descend(new_alpha_point(lv.var, bound, b, 2), true);
}

long long count_leaves(const SNode* n) {
  if (n->kids.empty()) return 1;
  long long c = 0;
  for (const auto& k : n->kids) c += count_leaves(k.get());
  return c;
}

std::unique_ptr<SNode> clone_node(const SNode* n) {
  auto out = std::make_unique<SNode>();
  out->var = n->var;
  out->alpha_level = n->alpha_level;
  out->is_point = n->is_point;
  out->value = n->value;
  out->hi = n->hi;
  out->lo_end = n->lo_end;
  out->hi_end = n->hi_end;
  out->point_at_origin = n->point_at_origin;
  out->bound = n->bound;
  out->sample = n->sample;
  out->truth = n->truth;
  out->raw_index = n->raw_index;
  for (const auto& k : n->kids) out->kids.push_back(clone_node(k.get()));
  return out;
}

void validate_specs(const std::vector<SimplexSpec>& specs, bool ifr) {
  std::set<int> seen;
  for (const auto& s : specs) {
    if (s.vars.empty())
      throw std::invalid_argument("a simplex needs at least one variable");
    if (s.kappa <= 0 || s.kappa > 1)
      throw std::invalid_argument("simplex budget must lie in (0, 1]");
    for (int v : s.vars)
      if (!seen.insert(v).second)
        throw std::invalid_argument("variable repeated across simplices");
  }
  if (ifr) {
    const int phi = static_cast<int>(specs.size());
    for (const auto& s : specs)
      if (s.tau() != phi || s.mode != BudgetMode::Eq || s.kappa != 1)
        throw std::invalid_argument(
            "increasing-failure-rate mode needs square Eq(1) blocks");
  }
}

}  // namespace

long long SimplexCad::leaf_count() const {
  return root ? count_leaves(root.get()) : 0;
}

SimplexCad simplex_cad(const std::vector<SimplexSpec>& specs, bool ifr) {
  validate_specs(specs, ifr);
  SimplexCad cad;
  cad.simplices = specs;
  cad.ifr = ifr;
  auto levels = alpha_levels_of(specs, ifr);
  for (const auto& lv : levels) cad.level_vars.push_back(lv.var);
  cad.root = std::make_unique<SNode>();
  Ctx ctx;
  build_alpha(cad.root.get(), levels, 0, ctx, [](SNode*, Ctx&) {});
  return cad;
}

SimplexCad simplex_cad(const SimplexSpec& spec) {
  return simplex_cad(std::vector<SimplexSpec>{spec}, false);
}

SimplexCad glue_simplices(const SimplexCad& a, const SimplexCad& b) {
  std::set<int> va(a.level_vars.begin(), a.level_vars.end());
  for (int v : b.level_vars)
    if (va.count(v)) throw std::invalid_argument("shared variables");
  SimplexCad out;
  out.simplices = a.simplices;
  out.simplices.insert(out.simplices.end(), b.simplices.begin(),
                       b.simplices.end());
  out.ifr = false;
  out.level_vars = a.level_vars;
  out.level_vars.insert(out.level_vars.end(), b.level_vars.begin(),
                        b.level_vars.end());
  out.root = clone_node(a.root.get());
  std::function<void(SNode*)> graft = [&](SNode* n) {
    if (n->kids.empty()) {
      auto fresh = clone_node(b.root.get());
      n->kids = std::move(fresh->kids);
      return;
    }
    for (auto& k : n->kids) graft(k.get());
  };
  graft(out.root.get());
  return out;
}

SimplexCad ifr_cad(int phi) {
  if (phi < 1) throw std::invalid_argument("need at least one state");
  std::vector<SimplexSpec> rows;
  for (int i = 1; i <= phi; ++i) {
    std::vector<std::string> names;
    for (int j = 1; j <= phi; ++j)
      names.push_back("alpha" + std::to_string(i) + "_" + std::to_string(j));
    SimplexSpec row = make_simplex(names, i - 1);
    for (int j = 1; j <= phi; ++j)
      set_var_display(row.vars[j - 1],
                      "alpha" + std::to_string(i) + "," + std::to_string(j));
    rows.push_back(std::move(row));
  }
  return simplex_cad(rows, /*ifr=*/true);
}

// --- cell rendering primitives --------------------------------------------

namespace {

bool multi_term(const Polynomial& p) { return p.terms().size() > 1; }

bool negative_lead(const Polynomial& p) {
  if (p.is_zero()) return false;
  return p.terms().rbegin()->second < 0;
}

std::string budget_str(const Polynomial& p) {
  return poly_str(p, RenderOrder::AscendingConstFirst);
}

std::string xbound_str(const XBound& b, int var) {
  std::string value;
  if (b.den.is_constant() && b.den.constant_value() == 1) {
    value = budget_str(b.num);
  } else {
    std::string num = budget_str(b.num);
    if (multi_term(b.num)) num = "(" + num + ")";
    std::string den = budget_str(b.den);
    if (multi_term(b.den) || negative_lead(b.den)) den = "(" + den + ")";
    value = num + "/" + den;
  }
  if (!b.f.is_zero())
    return "root(" + b.f.str(var_name(var)) + " = " + value + ")";
  return value;
}

std::string alpha_cell_str(const SNode& n) {
  const std::string v = var_name(n.var);
  if (n.is_point) return v + " = " + budget_str(n.value);
  return "0 < " + v + " < " + budget_str(n.hi);
}

// Span of one x cell or of a merged run: endpoint kinds plus inclusivity.
struct Span {
  SNode::End lo, hi;
  bool lo_incl, hi_incl;
  const XBound* bound;  // non-null when either endpoint is Bound
  int var;
};

Span span_of(const SNode& n) {
  Span s{};
  s.var = n.var;
  s.bound = n.bound ? &*n.bound : nullptr;
  if (n.is_point) {
    s.lo = s.hi = n.point_at_origin ? SNode::End::Origin : SNode::End::Bound;
    s.lo_incl = s.hi_incl = true;
  } else {
    s.lo = n.lo_end;
    s.hi = n.hi_end;
    s.lo_incl = s.hi_incl = false;
  }
  return s;
}

std::string span_str(const Span& s) {
  const std::string v = var_name(s.var);
  auto B = [&] { return xbound_str(*s.bound, s.var); };
  using E = SNode::End;
  if (s.lo == E::Origin && s.hi == E::Origin) return v + " = 0";
  if (s.lo == E::Bound && s.hi == E::Bound && s.lo_incl) return v + " = " + B();
  if (s.lo == E::Origin && s.hi == E::Bound) {
    std::string lo = s.lo_incl ? "0 <= " : "0 < ";
    std::string hi = s.hi_incl ? " <= " : " < ";
    return lo + v + hi + B();
  }
  if (s.lo == E::Bound && s.hi == E::PosInf)
    return v + (s.lo_incl ? " >= " : " > ") + B();
  if (s.lo == E::Origin && s.hi == E::PosInf)
    return v + (s.lo_incl ? " >= 0" : " > 0");
  if (s.lo == E::NegInf && s.hi == E::Bound)
    return v + (s.hi_incl ? " <= " : " < ") + B();
  if (s.lo == E::NegInf && s.hi == E::PosInf) return v + " in R";
  throw std::logic_error("unrenderable cell span");
}

std::string x_cell_str(const SNode& n) { return span_str(span_of(n)); }

std::string cell_str(const SNode& n) {
  return n.alpha_level ? alpha_cell_str(n) : x_cell_str(n);
}

}  // namespace

// --- alpha cell enumeration -----------------------------------------------

std::vector<AlphaCell> alpha_cells(const SimplexCad& cad) {
  std::vector<AlphaCell> out;
  AlphaCell cur;
  cur.levels = cad.level_vars;
  std::vector<std::string> parts;
  std::function<void(const SNode*)> walk = [&](const SNode* n) {
    if (n->var >= 0) {
      cur.sample[n->var] = n->sample;
      parts.push_back(alpha_cell_str(*n));
      if (n->is_point)
        cur.eq[n->var] = n->value;
      else {
        cur.open_vars.push_back(n->var);
        cur.open_hi[n->var] = n->hi;
      }
    }
    if (n->kids.empty()) {
      AlphaCell done = cur;
      std::string d;
      for (const auto& p : parts) {
        if (!d.empty()) d += ", ";
        d += p;
      }
      done.desc = d;
      out.push_back(std::move(done));
    } else {
      for (const auto& k : n->kids) walk(k.get());
    }
    if (n->var >= 0) {
      cur.sample.erase(n->var);
      parts.pop_back();
      if (n->is_point)
        cur.eq.erase(n->var);
      else {
        cur.open_vars.pop_back();
        cur.open_hi.erase(n->var);
      }
    }
  };
  walk(cad.root.get());
  return out;
}

// --- extensibility certificates -------------------------------------------

namespace {

// Full points of the closure polytope obtained by pushing every open
// coordinate to one of its endpoints, in level order (pinned coordinates
// follow their equality).  For a multilinear function these points carry
// its extreme values.
std::vector<std::map<int, Rat>> cell_vertices(const AlphaCell& cell) {
  std::vector<std::map<int, Rat>> out;
  std::map<int, Rat> point;
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == cell.levels.size()) {
      out.push_back(point);
      return;
    }
    int v = cell.levels[k];
    auto eq = cell.eq.find(v);
    if (eq != cell.eq.end()) {
      point[v] = eq->second.eval(point);
      rec(k + 1);
    } else {
      Rat hi = cell.open_hi.at(v).eval(point);
      for (const Rat& val : {Rat(0), hi}) {
        point[v] = val;
        rec(k + 1);
      }
    }
    point.erase(v);
  };
  rec(0);
  return out;
}

// Interior points with each open coordinate at the given fractions of its
// (point-dependent) upper bound.
std::vector<std::map<int, Rat>> cell_probes(const AlphaCell& cell,
                                            const std::vector<Rat>& fracs) {
  std::vector<std::map<int, Rat>> out;
  std::map<int, Rat> point;
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == cell.levels.size()) {
      out.push_back(point);
      return;
    }
    int v = cell.levels[k];
    auto eq = cell.eq.find(v);
    if (eq != cell.eq.end()) {
      point[v] = eq->second.eval(point);
      rec(k + 1);
    } else {
      Rat hi = cell.open_hi.at(v).eval(point);
      for (const Rat& t : fracs) {
        point[v] = t * hi;
        rec(k + 1);
      }
    }
    point.erase(v);
  };
  rec(0);
  return out;
}

// One random interior point (fractions uniform over {1..2^20-1}/2^20).
std::map<int, Rat> cell_random_point(const AlphaCell& cell,
                                     std::mt19937_64& rng) {
  std::map<int, Rat> point;
  for (int v : cell.levels) {
    auto eq = cell.eq.find(v);
    if (eq != cell.eq.end()) {
      point[v] = eq->second.eval(point);
    } else {
      Rat hi = cell.open_hi.at(v).eval(point);
      unsigned long k = 1 + rng() % ((1ul << 20) - 1);
      point[v] = hi * rat(static_cast<long>(k), 1l << 20);
    }
  }
  return point;
}

int eval_sign(const Polynomial& h, const std::map<int, Rat>& point) {
  return sign_of(h.substitute_rational(point).constant_value());
}

bool is_multilinear(const Polynomial& h) {
  for (int v : h.variables())
    if (h.degree_in(v) > 1) return false;
  return true;
}

struct CellVerdict {
  bool invariant = false;
  bool exact = false;
  int sign = 0;
  std::string cert;
  std::map<int, Rat> wa, wb;
  int sa = 0, sb = 0;
};

// Witness pair for a cell known (or suspected) to see both strict signs:
// scan the deterministic probes, then walk from extreme vertices toward
// the interior sample along straight segments (the cells are polytopes, so
// the segment stays interior).
bool find_witnesses(const Polynomial& h, const AlphaCell& cell,
                    const std::vector<std::map<int, Rat>>& vertices,
                    CellVerdict& out) {
  auto record = [&](const std::map<int, Rat>& p, int s) {
    if (s > 0 && out.sa == 0) {
      out.wa = p;
      out.sa = s;
    } else if (s < 0 && out.sb == 0) {
      out.wb = p;
      out.sb = s;
    }
    return out.sa != 0 && out.sb != 0;
  };
  for (const auto& p : cell_probes(cell, {rat(1, 5), rat(1, 2), rat(4, 5)}))
    if (record(p, eval_sign(h, p))) return true;
  // Segment walk from a strictly signed vertex toward the interior sample.
  for (int want : {+1, -1}) {
    if ((want > 0 && out.sa != 0) || (want < 0 && out.sb != 0)) continue;
    for (const auto& v : vertices) {
      if (eval_sign(h, v) != want) continue;
      Rat t(1, 2);
      for (int it = 0; it < 64; ++it) {
        std::map<int, Rat> p;
        for (const auto& [id, val] : v)
          p[id] = val + t * (cell.sample.at(id) - val);
        if (eval_sign(h, p) == want) {
          record(p, want);
          break;
        }
        t /= 2;
      }
      if ((want > 0 && out.sa != 0) || (want < 0 && out.sb != 0)) break;
    }
  }
  return out.sa != 0 && out.sb != 0;
}

CellVerdict judge_cell(const Polynomial& g, const AlphaCell& cell,
                       const std::map<int, Rat>& box_hi,
                       std::mt19937_64& rng) {
  CellVerdict out;
  Polynomial h = g.substitute(cell.eq);
  if (h.is_constant()) {
    out = {true, true, h.is_zero() ? 0 : sign_of(h.constant_value()),
           "constant", {}, {}, 0, 0};
    return out;
  }
  bool all_pos = true, all_neg = true;
  for (const auto& t : h.terms()) {
    if (t.second < 0) all_pos = false;
    if (t.second > 0) all_neg = false;
  }
  if (all_pos || all_neg) {
    // Every remaining variable is strictly positive on the open cell.
    out = {true, true, all_pos ? 1 : -1, "uniform-coefficient-sign",
           {}, {}, 0, 0};
    return out;
  }
  std::vector<std::map<int, Rat>> vertices = cell_vertices(cell);
  // Vertex certificates.  The sequential endpoint enumeration covers every
  // vertex of the cell closure (the bounds are affine and nonnegative over
  // the parent region), so an affine h attains its extremes there on any
  // cell; a multilinear h needs a box domain (every open bound constant).
  bool box = true;
  for (int v : cell.open_vars)
    if (!cell.open_hi.at(v).is_constant()) box = false;
  const bool affine = h.total_degree() <= 1;
  if (affine || (box && is_multilinear(h))) {
    bool nonneg = true, nonpos = true;
    for (const auto& v : vertices) {
      int s = eval_sign(h, v);
      if (s < 0) nonneg = false;
      if (s > 0) nonpos = false;
    }
    const char* cert = affine ? "affine-vertex" : "multilinear-vertex";
    if (nonneg || nonpos) {
      // One weak sign at every vertex plus h != 0 gives the strict sign on
      // the open cell.
      out = {true, true, nonneg ? 1 : -1, cert, {}, {}, 0, 0};
      return out;
    }
    if (find_witnesses(h, cell, vertices, out)) {
      out.invariant = false;
      out.cert = cert;
      return out;
    }
    throw std::logic_error("sign flip certified but no witness pair found");
  }
  // Corner-coordinate rewriting: substituting u -> B(u) - u (B the cell's
  // open upper bound) for any subset of the open coordinates, last level
  // first, maps the open cell bijectively onto itself.  If some rewriting
  // has uniform coefficient sign, every rewritten variable being strictly
  // positive on the cell gives a strict sign for h.
  {
    const std::vector<int>& opens = cell.open_vars;
    if (opens.size() <= 6) {
      for (unsigned mask = 1; mask < (1u << opens.size()); ++mask) {
        Polynomial hh = h;
        for (std::size_t k = opens.size(); k-- > 0;) {
          if (!(mask & (1u << k))) continue;
          int v = opens[k];
          std::map<int, Polynomial> flip{
              {v, cell.open_hi.at(v) - Polynomial::variable(v)}};
          hh = hh.substitute(flip);
        }
        if (hh.is_zero()) continue;
        bool pos = true, neg = true;
        for (const auto& t : hh.terms()) {
          if (t.second < 0) pos = false;
          if (t.second > 0) neg = false;
        }
        if (pos || neg) {
          out = {true, true, pos ? 1 : -1, "corner-coordinate", {}, {}, 0, 0};
          return out;
        }
      }
    }
  }
  // Interval arithmetic over the enclosing box {0 <= v <= box_hi[v]}.
  {
    Rat lo(0), hi(0);
    for (const auto& [m, c] : h.terms()) {
      Rat mhi(1);
      for (const auto& [v, e] : m)
        mhi *= rat_pow(box_hi.at(v), static_cast<unsigned long>(e));
      if (m.empty()) {
        lo += c;
        hi += c;
      } else if (c > 0) {
        hi += c * mhi;
      } else {
        lo += c * mhi;
      }
    }
    if (lo > 0 || hi < 0) {
      out = {true, true, lo > 0 ? 1 : -1, "interval-arithmetic", {}, {}, 0, 0};
      return out;
    }
  }
  // Deterministic probe scan (witness search only).
  if (find_witnesses(h, cell, vertices, out)) {
    out.invariant = false;
    out.cert = "probe-scan";
    return out;
  }
  // Seeded random probes: the only probabilistic stage.
  int seen = out.sa != 0 ? out.sa : out.sb;
  for (int i = 0; i < 50; ++i) {
    auto p = cell_random_point(cell, rng);
    int s = eval_sign(h, p);
    if (s != 0 && seen == 0) seen = s;
    if (s > 0 && out.sa == 0) {
      out.wa = p;
      out.sa = s;
    }
    if (s < 0 && out.sb == 0) {
      out.wb = p;
      out.sb = s;
    }
    if (out.sa != 0 && out.sb != 0) {
      out.invariant = false;
      out.cert = "randomized-probes";
      return out;
    }
  }
  out.invariant = true;
  out.exact = false;
  out.sign = seen;
  out.cert = "randomized-probes";
  return out;
}

}  // namespace

ExtensibilityReport check_simplex_extensible(const SystemM& sys,
                                             unsigned seed, bool parallel) {
  sys.validate();
  ExtensibilityReport rep;
  rep.seed = seed;
  rep.extensible = true;

  SimplexCad atree = simplex_cad(sys.simplices, sys.ifr);
  std::vector<AlphaCell> cells = alpha_cells(atree);
  std::map<int, Rat> box_hi;
  for (const auto& s : sys.simplices)
    for (int v : s.vars) box_hi[v] = sys.ifr ? Rat(1) : s.kappa;

  // One verdict per term coefficient, judged over every cell, plus one for
  // the offset g0 over the cells where every term coefficient vanishes (on
  // such cells the decision degenerates to the sign of g0, which must then
  // be invariant for the leaf truth to hold cell-wide).
  std::vector<AlphaCell> inactive;
  for (const auto& cell : cells) {
    bool all_zero = true;
    for (const auto& t : sys.terms)
      if (!t.g.substitute(cell.eq).is_zero()) {
        all_zero = false;
        break;
      }
    if (all_zero) inactive.push_back(cell);
  }

  auto judge_over = [&](const Polynomial& g, const std::vector<AlphaCell>& cs,
                        int term_index, const std::string& display) {
    GVerdict gv;
    gv.term_index = term_index;
    gv.var_display = display;
    gv.invariant = true;
    gv.exact = true;
    std::map<std::string, int> cert_counts;
    std::mt19937_64 rng(seed + 7919 * (term_index + 2));
    for (const auto& cell : cs) {
      CellVerdict cv = judge_cell(g, cell, box_hi, rng);
      ++cert_counts[cv.cert];
      if (!cv.invariant) {
        gv.invariant = false;
        gv.exact = false;
        gv.certificate = cv.cert;
        gv.witness_cell = cell.desc;
        gv.witness_a = cv.wa;
        gv.witness_b = cv.wb;
        gv.sign_a = cv.sa;
        gv.sign_b = cv.sb;
        break;
      }
      gv.exact = gv.exact && cv.exact;
    }
    if (gv.invariant) {
      std::string summary;
      for (const auto& [c, n] : cert_counts) {
        if (!summary.empty()) summary += ",";
        summary += c + ":" + std::to_string(n);
      }
      gv.certificate = summary;
    }
    return gv;
  };

  std::vector<std::function<GVerdict()>> tasks;
  for (std::size_t i = 0; i < sys.terms.size(); ++i)
    tasks.push_back([&, i] {
      return judge_over(sys.terms[i].g, cells, static_cast<int>(i),
                        var_name(sys.terms[i].var));
    });
  if (!inactive.empty())
    tasks.push_back([&] { return judge_over(sys.g0, inactive, -1, "g0"); });

  std::vector<GVerdict> verdicts(tasks.size());
  if (parallel && tasks.size() > 1) {
    std::vector<std::future<GVerdict>> futures;
    futures.reserve(tasks.size());
    for (auto& t : tasks)
      futures.push_back(std::async(std::launch::async, t));
    for (std::size_t i = 0; i < futures.size(); ++i)
      verdicts[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < tasks.size(); ++i) verdicts[i] = tasks[i]();
  }
  for (auto& gv : verdicts) {
    if (!gv.invariant)
      rep.extensible = false;
    else if (!gv.exact)
      rep.probabilistic = true;
    rep.g_verdicts.push_back(std::move(gv));
  }

  for (std::size_t i = 0; i < sys.terms.size(); ++i) {
    FVerdict fv;
    fv.term_index = static_cast<int>(i);
    fv.var_display = var_name(sys.terms[i].var);
    if (sys.terms[i].identity_shape()) {
      fv.ok = true;
      fv.note = "identity shape";
    } else {
      fv.ok = true;
      fv.note = "no positive real roots";
      for (const auto& root : isolate_real_roots(sys.terms[i].f)) {
        int s = compare(root, RealValue{Rat(0)});
        if (s > 0) {
          fv.ok = false;
          fv.note = "positive real root near " + real_value_str(root);
          break;
        }
        if (s == 0) fv.note = "root at 0 accepted";
      }
      if (!fv.ok) rep.extensible = false;
    }
    rep.f_verdicts.push_back(std::move(fv));
  }
  return rep;
}

std::string ExtensibilityReport::text() const {
  std::ostringstream os;
  os << "simplex-extensible: " << (extensible ? "yes" : "no");
  if (extensible && probabilistic) os << " (probabilistic)";
  if (extensible && !probabilistic) os << " (exact)";
  os << "\n";
  for (const auto& g : g_verdicts) {
    if (g.term_index < 0)
      os << "g0: ";
    else
      os << "g[" << g.term_index << "] (" << g.var_display << "): ";
    if (g.invariant) {
      os << "sign-invariant (" << (g.exact ? "exact" : "probabilistic")
         << ") - " << g.certificate << "\n";
    } else {
      os << "NOT sign-invariant on cell [" << g.witness_cell << "]: sign "
         << (g.sign_a > 0 ? "+1" : "-1") << " at " << rat_point_str(g.witness_a)
         << " vs sign " << (g.sign_b > 0 ? "+1" : "-1") << " at "
         << rat_point_str(g.witness_b) << "\n";
    }
  }
  for (const auto& f : f_verdicts)
    os << "f[" << f.term_index << "] (" << f.var_display
       << "): " << (f.ok ? "ok" : "REJECTED") << " - " << f.note << "\n";
  os << "seed: " << seed << "\n";
  return os.str();
}

// --- the specialized decomposition ----------------------------------------

namespace {

std::unique_ptr<SNode> new_x_point(int var, bool at_origin,
                                   std::optional<XBound> bound, Rat sample,
                                   int raw_index) {
  auto n = std::make_unique<SNode>();
  n->var = var;
  n->is_point = true;
  n->point_at_origin = at_origin;
  n->bound = std::move(bound);
  n->sample = std::move(sample);
  n->raw_index = raw_index;
  return n;
}

std::unique_ptr<SNode> new_x_interval(int var, SNode::End lo, SNode::End hi,
                                      std::optional<XBound> bound, Rat sample,
                                      int raw_index) {
  auto n = std::make_unique<SNode>();
  n->var = var;
  n->lo_end = lo;
  n->hi_end = hi;
  n->bound = std::move(bound);
  n->sample = std::move(sample);
  n->raw_index = raw_index;
  return n;
}

struct SpecBuilder {
  const SystemM& sys;
  long long leaves = 0;

  void build_x(SNode* parent, std::size_t i, Ctx& ctx) {
    if (i == sys.terms.size()) {
      ++leaves;
      parent->truth = sys.fstar.is_zero()
                          ? true
                          : sign_of(sys.fstar.substitute_rational(ctx.sample)
                                        .constant_value()) >= 0;
      return;
    }
    const XTerm& term = sys.terms[i];
    auto descend = [&](std::unique_ptr<SNode> cell) {
      SNode* raw = cell.get();
      parent->kids.push_back(std::move(cell));
      ctx.sample[term.var] = raw->sample;
      build_x(raw, i + 1, ctx);
      ctx.sample.erase(term.var);
    };
    Polynomial g_sub = term.g.substitute(ctx.eq);
    using E = SNode::End;
    if (g_sub.is_zero()) {
      if (term.nonneg) {
        descend(new_x_point(term.var, true, std::nullopt, Rat(0), 0));
        descend(new_x_interval(term.var, E::Origin, E::PosInf, std::nullopt,
                               Rat(1), 1));
      } else {
        descend(new_x_interval(term.var, E::NegInf, E::PosInf, std::nullopt,
                               Rat(0), 0));
      }
      return;
    }
    Rat gval = g_sub.substitute_rational(ctx.sample).constant_value();
    if (gval == 0)
      throw std::logic_error(
          "coefficient vanishes at the sample of a cell where it is not "
          "identically zero");
    XBound bnd;
    bnd.num = -sys.g0;
    for (std::size_t j = 0; j < i; ++j) {
      if (sys.terms[j].g.substitute(ctx.eq).is_zero()) continue;
      bnd.num -= sys.terms[j].shape_poly() * sys.terms[j].g;
    }
    bnd.den = term.g;
    bnd.f = term.f;
    Rat r = bnd.num.substitute_rational(ctx.sample).constant_value() / gval;
    if (bnd.den.is_constant()) {
      bnd.num = bnd.num.scaled(Rat(1) / bnd.den.constant_value());
      bnd.den = Polynomial(Rat(1));
      bnd.folded = true;
    }
    if (term.identity_shape()) {
      if (!term.nonneg) {
        descend(new_x_interval(term.var, E::NegInf, E::Bound, bnd, r - 1, 0));
        descend(new_x_point(term.var, false, bnd, r, 1));
        descend(new_x_interval(term.var, E::Bound, E::PosInf, bnd, r + 1, 2));
      } else if (r > 0) {
        descend(new_x_point(term.var, true, std::nullopt, Rat(0), 0));
        descend(new_x_interval(term.var, E::Origin, E::Bound, bnd, r / 2, 1));
        descend(new_x_point(term.var, false, bnd, r, 2));
        descend(new_x_interval(term.var, E::Bound, E::PosInf, bnd, r + 1, 3));
      } else {
        descend(new_x_point(term.var, true, std::nullopt, Rat(0), 0));
        descend(new_x_interval(term.var, E::Origin, E::PosInf, std::nullopt,
                               Rat(1), 1));
      }
      return;
    }
    // Non-identity shape: split at the roots of f(x) = r on (0, inf).
    UPoly fr = term.f - UPoly(r);
    std::vector<RealValue> pos;
    if (!fr.is_constant())
      for (const auto& root : isolate_real_roots(fr)) {
        RealValue zero{Rat(0)};
        if (compare(root, zero) > 0) pos.push_back(root);
      }
    if (pos.empty()) {
      descend(new_x_point(term.var, true, std::nullopt, Rat(0), 0));
      descend(new_x_interval(term.var, E::Origin, E::PosInf, std::nullopt,
                             Rat(1), 1));
      return;
    }
    if (pos.size() > 1)
      throw std::logic_error(
          "shape with multiple positive crossings exceeds supported scale");
    if (!is_rational(pos[0]))
      throw std::logic_error("sample tower exceeds supported scale");
    Rat rho = as_rational(pos[0]);
    descend(new_x_point(term.var, true, std::nullopt, Rat(0), 0));
    descend(new_x_interval(term.var, E::Origin, E::Bound, bnd, rho / 2, 1));
    descend(new_x_point(term.var, false, bnd, rho, 2));
    descend(new_x_interval(term.var, E::Bound, E::PosInf, bnd, rho + 1, 3));
  }
};

// Removes false leaves and then-empty interior nodes; returns whether any
// true leaf remains below n.
bool prune_false(SNode* n, long long& pruned, long long& kept) {
  if (n->kids.empty()) {
    if (n->truth) {
      ++kept;
      return true;
    }
    ++pruned;
    return false;
  }
  auto& ks = n->kids;
  ks.erase(std::remove_if(ks.begin(), ks.end(),
                          [&](std::unique_ptr<SNode>& k) {
                            return !prune_false(k.get(), pruned, kept);
                          }),
           ks.end());
  return !ks.empty();
}

}  // namespace

SpecializedCad specialized_cad(const SystemM& sys, unsigned seed,
                               bool parallel) {
  sys.validate();
  SpecializedCad cad;
  cad.system = sys;
  cad.report = check_simplex_extensible(sys, seed, parallel);
  if (!cad.report.extensible) throw NotSimplexExtensible(cad.report);
  cad.bound = cell_count_bound(sys);

  SimplexCad atree = simplex_cad(sys.simplices, sys.ifr);
  cad.level_vars = atree.level_vars;
  for (const auto& t : sys.terms) cad.level_vars.push_back(t.var);

  auto levels = alpha_levels_of(sys.simplices, sys.ifr);
  cad.root = std::make_unique<SNode>();
  SpecBuilder builder{sys};
  Ctx ctx;
  build_alpha(cad.root.get(), levels, 0, ctx,
              [&](SNode* leaf, Ctx& c) { builder.build_x(leaf, 0, c); });
  cad.leaves_before_pruning = builder.leaves;

  long long pruned = 0, kept = 0;
  prune_false(cad.root.get(), pruned, kept);
  cad.pruned_false_leaves = pruned;
  cad.true_leaves = kept;
  cad.notes.push_back("pruned " + std::to_string(pruned) +
                      " false leaves; kept " + std::to_string(kept));
  if (cad.report.probabilistic)
    cad.notes.push_back(
        "sign-invariance of some coefficient rests on random probes");
  return cad;
}

// --- point location -------------------------------------------------------

namespace {

bool x_cell_contains(const SNode& n, const std::map<int, Rat>& pt,
                     const Rat& x) {
  Rat bv;
  bool have_bv = false;
  std::optional<RealValue> rho;  // non-identity bound location
  if (n.bound) {
    Rat den = n.bound->den.substitute_rational(pt).constant_value();
    if (den == 0) return false;
    bv = n.bound->num.substitute_rational(pt).constant_value() / den;
    have_bv = true;
    if (!n.bound->f.is_zero()) {
      UPoly fr = n.bound->f - UPoly(bv);
      std::vector<RealValue> pos;
      if (!fr.is_constant())
        for (const auto& root : isolate_real_roots(fr)) {
          RealValue zero{Rat(0)};
          if (compare(root, zero) > 0) pos.push_back(root);
        }
      if (pos.size() != 1) return false;
      rho = pos[0];
    }
  }
  auto cmp_bound = [&](const Rat& v) {
    if (rho) return compare(RealValue{v}, *rho);
    return v < bv ? -1 : (v == bv ? 0 : 1);
  };
  using E = SNode::End;
  if (n.is_point) {
    if (n.point_at_origin) return x == 0;
    return have_bv && cmp_bound(x) == 0;
  }
  bool lo_ok = false, hi_ok = false;
  switch (n.lo_end) {
    case E::NegInf:
      lo_ok = true;
      break;
    case E::Origin:
      lo_ok = x > 0;
      break;
    case E::Bound:
      lo_ok = have_bv && cmp_bound(x) > 0;
      break;
    case E::PosInf:
      lo_ok = false;
      break;
  }
  switch (n.hi_end) {
    case E::PosInf:
      hi_ok = true;
      break;
    case E::Bound:
      hi_ok = have_bv && cmp_bound(x) < 0;
      break;
    default:
      hi_ok = false;
      break;
  }
  return lo_ok && hi_ok;
}

}  // namespace

LocateResult locate_point(const SpecializedCad& cad,
                          const std::map<int, Rat>& pt) {
  LocateResult res;
  const SNode* n = cad.root.get();
  while (!n->kids.empty()) {
    const SNode* next = nullptr;
    for (const auto& k : n->kids) {
      const Rat& x = pt.at(k->var);
      bool in;
      if (k->alpha_level) {
        if (k->is_point)
          in = x == k->value.substitute_rational(pt).constant_value();
        else
          in = x > 0 && x < k->hi.substitute_rational(pt).constant_value();
      } else {
        in = x_cell_contains(*k, pt, x);
      }
      if (in) {
        next = k.get();
        break;
      }
    }
    if (!next) return res;  // outside the blocks or in a pruned false region
    n = next;
  }
  res.inside = true;
  res.truth = n->truth;
  res.leaf = n;
  return res;
}

// --- rendering ------------------------------------------------------------

namespace {

void indent_into(std::vector<std::string>& out,
                 const std::vector<std::string>& sub) {
  for (const auto& line : sub) out.push_back("  " + line);
}

std::vector<std::string> render_kids(const SNode& n) {
  std::vector<std::string> out;
  if (n.kids.empty()) return out;
  const bool x_level = !n.kids.front()->alpha_level;
  if (!x_level) {
    for (const auto& k : n.kids) {
      out.push_back(alpha_cell_str(*k));
      indent_into(out, render_kids(*k));
    }
    return out;
  }
  // Group maximal runs of originally-adjacent siblings whose rendered
  // subtrees coincide and print each run as one span.
  std::vector<std::vector<std::string>> subs;
  for (const auto& k : n.kids) subs.push_back(render_kids(*k));
  std::size_t i = 0;
  while (i < n.kids.size()) {
    std::size_t j = i;
    while (j + 1 < n.kids.size() &&
           n.kids[j + 1]->raw_index == n.kids[j]->raw_index + 1 &&
           subs[j + 1] == subs[i])
      ++j;
    Span first = span_of(*n.kids[i]);
    Span last = span_of(*n.kids[j]);
    Span run = first;
    run.hi = last.hi;
    run.hi_incl = last.hi_incl;
    if (!run.bound) run.bound = last.bound;
    out.push_back(span_str(run));
    indent_into(out, subs[i]);
    i = j + 1;
  }
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += "\n";
  }
  return out;
}

}  // namespace

std::string render_tree(const SpecializedCad& cad) {
  std::vector<std::string> out{"R^1"};
  indent_into(out, render_kids(*cad.root));
  return join_lines(out);
}

std::string render_tree(const SimplexCad& cad) {
  std::vector<std::string> out{"R^1"};
  indent_into(out, render_kids(*cad.root));
  return join_lines(out);
}

std::string render_formula(const SpecializedCad& cad) {
  // Disjuncts follow the merged display tree's root-to-leaf paths.
  std::vector<std::string> disjuncts;
  std::vector<std::string> conj;
  std::function<void(const SNode&)> walk = [&](const SNode& n) {
    if (n.kids.empty()) {
      if (&n == cad.root.get() && !n.truth) return;
      std::string d;
      for (const auto& c : conj) {
        if (!d.empty()) d += " AND ";
        d += c;
      }
      disjuncts.push_back(d.empty() ? "TRUE" : "(" + d + ")");
      return;
    }
    const bool x_level = !n.kids.front()->alpha_level;
    if (!x_level) {
      for (const auto& k : n.kids) {
        conj.push_back(alpha_cell_str(*k));
        walk(*k);
        conj.pop_back();
      }
      return;
    }
    std::vector<std::vector<std::string>> subs;
    for (const auto& k : n.kids) subs.push_back(render_kids(*k));
    std::size_t i = 0;
    while (i < n.kids.size()) {
      std::size_t j = i;
      while (j + 1 < n.kids.size() &&
             n.kids[j + 1]->raw_index == n.kids[j]->raw_index + 1 &&
             subs[j + 1] == subs[i])
        ++j;
      Span first = span_of(*n.kids[i]);
      Span last = span_of(*n.kids[j]);
      Span run = first;
      run.hi = last.hi;
      run.hi_incl = last.hi_incl;
      if (!run.bound) run.bound = last.bound;
      conj.push_back(span_str(run));
      walk(*n.kids[i]);
      conj.pop_back();
      i = j + 1;
    }
  };
  walk(*cad.root);
  if (disjuncts.empty()) return "FALSE";
  std::string out;
  for (const auto& d : disjuncts) {
    if (!out.empty()) out += " OR ";
    out += d;
  }
  return out;
}

namespace {

nlohmann::ordered_json node_json(const SNode& n) {
  nlohmann::ordered_json j;
  if (n.var < 0) {
    j["cell"] = "R^1";
    j["var"] = nullptr;
  } else {
    j["cell"] = cell_str(n);
    j["var"] = var_name(n.var);
    j["kind"] = n.alpha_level ? (n.is_point ? "alpha-point" : "alpha-open")
                              : (n.is_point ? "x-point" : "x-interval");
    j["sample"] = rat_str(n.sample);
    if (n.bound) {
      nlohmann::ordered_json b;
      b["num"] = budget_str(n.bound->num);
      b["den"] = budget_str(n.bound->den);
      if (!n.bound->f.is_zero()) b["shape"] = n.bound->f.str(var_name(n.var));
      j["bound"] = b;
    }
  }
  if (n.kids.empty()) {
    j["truth"] = n.truth;
  } else {
    nlohmann::ordered_json kids = nlohmann::ordered_json::array();
    for (const auto& k : n.kids) kids.push_back(node_json(*k));
    j["children"] = kids;
  }
  return j;
}

}  // namespace

std::string tree_json(const SpecializedCad& cad) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json vars = nlohmann::ordered_json::array();
  for (int v : cad.level_vars) vars.push_back(var_name(v));
  j["variables"] = vars;
  j["true_leaves"] = cad.true_leaves;
  j["pruned_false_leaves"] = cad.pruned_false_leaves;
  j["cell_bound"] = cad.bound.get_str();
  j["tree"] = node_json(*cad.root);
  return j.dump(2) + "\n";
}

// --- satisfiability encoding ----------------------------------------------

SystemM encode_3sat(const std::vector<std::vector<int>>& clauses,
                    int num_vars) {
  if (num_vars < 1) throw std::invalid_argument("need at least one variable");
  std::vector<SimplexSpec> blocks;
  std::vector<std::array<int, 2>> cols;  // ids: [true column, false column]
  for (int i = 1; i <= num_vars; ++i) {
    SimplexSpec b = make_simplex(
        {"z" + std::to_string(i) + "_t", "z" + std::to_string(i) + "_f"},
        i - 1);
    cols.push_back({b.vars[0], b.vars[1]});
    blocks.push_back(std::move(b));
  }
  Polynomial f1;
  for (const auto& pair : cols)
    for (int v : pair) {
      Polynomial a = Polynomial::variable(v);
      f1 += a * (Polynomial(Rat(1)) - a);
    }
  Polynomial f2;
  for (const auto& clause : clauses) {
    if (clause.size() != 3)
      throw std::invalid_argument("clause arity must be 3");
    Polynomial prod(Rat(1));
    for (int lit : clause) {
      int v = std::abs(lit);
      if (lit == 0 || v > num_vars)
        throw std::invalid_argument("literal out of range");
      // A positive literal is falsified by the false column and vice versa.
      prod = prod * Polynomial::variable(lit > 0 ? cols[v - 1][1]
                                                 : cols[v - 1][0]);
    }
    f2 += prod;
  }
  return make_system(-(f1 + f2), {}, std::move(blocks));
}

}  // namespace mc
