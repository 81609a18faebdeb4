#include "markovcad/cad.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mc {

// ===========================================================================
// Relations and systems
// ===========================================================================

std::string rel_str(Rel r) {
  switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Eq: return "=";
    case Rel::Ge: return ">=";
    case Rel::Gt: return ">";
  }
  return "?";
}

bool rel_holds(int sign, Rel r) {
  switch (r) {
    case Rel::Lt: return sign < 0;
    case Rel::Le: return sign <= 0;
    case Rel::Eq: return sign == 0;
    case Rel::Ge: return sign >= 0;
    case Rel::Gt: return sign > 0;
  }
  return false;
}

bool system_holds(const PolySystem& sys, const std::map<int, Rat>& point) {
  for (const Atom& a : sys.atoms)
    if (!rel_holds(sign_of(a.poly.eval(point)), a.rel)) return false;
  return true;
}

// ===========================================================================
// Algebraic coordinates
// ===========================================================================

ThetaRec::ThetaRec(UPoly p, Rat l, Rat h)
    : minpoly(std::move(p)), lo(std::move(l)), hi(std::move(h)) {
  if (minpoly.is_zero() || minpoly.degree() < 1 || lo >= hi ||
      minpoly.eval(lo) == 0 || minpoly.eval(hi) == 0)
    throw std::invalid_argument("invalid algebraic coordinate record");
}

void ThetaRec::refine() const {
  Rat mid = (lo + hi) / 2;
  if (minpoly.eval(mid) != 0) {
    // Keep the half that still changes sign across the unique root.
    int slo = sign_of(minpoly.eval(lo));
    int smid = sign_of(minpoly.eval(mid));
    if (slo != smid)
      hi = mid;
    else
      lo = mid;
    return;
  }
  // The midpoint is the root itself (possible when the defining polynomial
  // has a rational root this record happens to isolate): shrink around it.
  Rat eps = (hi - lo) / 4;
  while (minpoly.eval(mid - eps) == 0 || minpoly.eval(mid + eps) == 0)
    eps /= 2;
  lo = mid - eps;
  hi = mid + eps;
}

namespace {

UPoly qt_reduce_poly(const UPoly& a, const ThetaRec& rec) {
  if (a.is_zero() || a.degree() < rec.minpoly.degree()) return a;
  return UPoly::divmod(a, rec.minpoly).second;
}

struct ExtGcd {
  UPoly g, s, t;  // s*a + t*b = g, g monic
};

ExtGcd ext_gcd(const UPoly& a, const UPoly& b) {
  UPoly r0 = a, r1 = b;
  UPoly s0{Rat(1)}, s1;
  UPoly t0, t1{Rat(1)};
  while (!r1.is_zero()) {
    auto [q, r] = UPoly::divmod(r0, r1);
    UPoly s2 = s0 - q * s1;
    UPoly t2 = t0 - q * t1;
    r0 = r1; r1 = r;
    s0 = s1; s1 = s2;
    t0 = t1; t1 = t2;
  }
  if (r0.is_zero()) return {r0, s0, t0};
  Rat inv = Rat(1) / r0.lead();
  return {r0.scaled(inv), s0.scaled(inv), t0.scaled(inv)};
}

// Exact zero test for num(theta); may shrink the record's defining
// polynomial when the gcd analysis discovers a proper divisor vanishing (or
// provably not vanishing) at theta.
bool qt_is_zero(const QTheta& q) {
  const ThetaRec& rec = *q.theta;
  for (;;) {
    UPoly num = qt_reduce_poly(q.num, rec);
    if (num.is_zero()) return true;
    if (num.degree() == 0) return false;
    UPoly g = UPoly::gcd_monic(num, rec.minpoly);
    if (g.degree() == 0) return false;
    // g divides the square-free minpoly, so g is square-free and has at
    // most one root in the isolating interval (theta itself); both interval
    // endpoints are non-roots of the minpoly, hence of g.
    int slo = sign_of(g.eval(rec.lo));
    int shi = sign_of(g.eval(rec.hi));
    if (slo * shi < 0) {
      rec.minpoly = g;  // theta is a root of g
      return true;
    }
    // theta is a root of minpoly / g; shrink and retry.
    rec.minpoly = UPoly::divmod(rec.minpoly, g).first;
  }
}

int qt_sign(const QTheta& q) {
  if (qt_is_zero(q)) return 0;
  const ThetaRec& rec = *q.theta;
  UPoly num = qt_reduce_poly(q.num, rec);
  for (;;) {
    auto [elo, ehi] = num.eval_interval(rec.lo, rec.hi);
    if (elo > 0) return 1;
    if (ehi < 0) return -1;
    rec.refine();
  }
}

void require_same_tower(const QTheta& a, const QTheta& b) {
  if (a.theta.get() != b.theta.get())
    throw std::logic_error("mixed algebraic towers");
}

QTheta qt_make(ThetaPtr t, UPoly num) {
  UPoly r = qt_reduce_poly(num, *t);
  return QTheta{std::move(t), std::move(r)};
}

QTheta qt_add(const QTheta& a, const QTheta& b) {
  require_same_tower(a, b);
  return qt_make(a.theta, a.num + b.num);
}

QTheta qt_mul(const QTheta& a, const QTheta& b) {
  require_same_tower(a, b);
  return qt_make(a.theta, a.num * b.num);
}

QTheta qt_neg(const QTheta& a) { return QTheta{a.theta, a.num.scaled(Rat(-1))}; }

QTheta qt_from_rat(const ThetaPtr& t, const Rat& r) {
  return QTheta{t, r == 0 ? UPoly{} : UPoly{r}};
}

QTheta qt_inverse(const QTheta& a) {
  const ThetaRec& rec = *a.theta;
  for (;;) {
    UPoly num = qt_reduce_poly(a.num, rec);
    if (num.is_zero())
      throw std::logic_error("division by zero in algebraic arithmetic");
    UPoly g = UPoly::gcd_monic(num, rec.minpoly);
    if (g.degree() == 0) {
      ExtGcd e = ext_gcd(num, rec.minpoly);
      return qt_make(a.theta, e.s);
    }
    int slo = sign_of(g.eval(rec.lo));
    int shi = sign_of(g.eval(rec.hi));
    if (slo * shi < 0)
      throw std::logic_error("division by zero in algebraic arithmetic");
    rec.minpoly = UPoly::divmod(rec.minpoly, g).first;
  }
}

QTheta qt_div(const QTheta& a, const QTheta& b) {
  return qt_mul(a, qt_inverse(b));
}

QTheta qt_pow(const QTheta& a, int e) {
  QTheta acc = qt_from_rat(a.theta, Rat(1));
  for (int i = 0; i < e; ++i) acc = qt_mul(acc, a);
  return acc;
}

// Collapse a field element to a rational coordinate when it plainly is one.
SampleCoord qt_normalize(QTheta q) {
  const ThetaRec& rec = *q.theta;
  UPoly num = qt_reduce_poly(q.num, rec);
  if (rec.minpoly.degree() == 1) {
    Rat theta = -rec.minpoly.coeff(0) / rec.minpoly.coeff(1);
    return num.eval(theta);
  }
  if (num.is_zero()) return Rat(0);
  if (num.degree() == 0) return num.coeff(0);
  return QTheta{q.theta, std::move(num)};
}

}  // namespace

bool coord_is_rational(const SampleCoord& c) {
  return std::holds_alternative<Rat>(c);
}

const Rat& coord_rational(const SampleCoord& c) {
  if (!coord_is_rational(c))
    throw std::logic_error("coordinate is not rational");
  return std::get<Rat>(c);
}

int coord_sign(const SampleCoord& c) {
  if (coord_is_rational(c)) return sign_of(std::get<Rat>(c));
  return qt_sign(std::get<QTheta>(c));
}

int coord_compare(const SampleCoord& a, const SampleCoord& b) {
  if (coord_is_rational(a) && coord_is_rational(b)) {
    const Rat& x = std::get<Rat>(a);
    const Rat& y = std::get<Rat>(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (coord_is_rational(a)) return -coord_compare(b, a);
  const QTheta& qa = std::get<QTheta>(a);
  if (coord_is_rational(b)) {
    QTheta diff = qt_add(qa, qt_from_rat(qa.theta, -std::get<Rat>(b)));
    return qt_sign(diff);
  }
  const QTheta& qb = std::get<QTheta>(b);
  if (qa.theta.get() == qb.theta.get()) return qt_sign(qt_add(qa, qt_neg(qb)));
  // Distinct towers: exact comparison is available when both are plain
  // roots; otherwise separate the enclosures.
  if (qa.num == UPoly::x() && qb.num == UPoly::x()) {
    RealAlgebraic ra(qa.theta->minpoly, qa.theta->lo, qa.theta->hi);
    RealAlgebraic rb(qb.theta->minpoly, qb.theta->lo, qb.theta->hi);
    return compare(RealValue{ra}, RealValue{rb});
  }
  for (int round = 0; round < 256; ++round) {
    auto [alo, ahi] = qa.num.eval_interval(qa.theta->lo, qa.theta->hi);
    auto [blo, bhi] = qb.num.eval_interval(qb.theta->lo, qb.theta->hi);
    if (ahi < blo) return -1;
    if (bhi < alo) return 1;
    qa.theta->refine();
    qb.theta->refine();
  }
  throw std::logic_error("incomparable algebraic coordinates");
}

SampleCoord coord_add_rat(const SampleCoord& c, const Rat& r) {
  if (coord_is_rational(c)) return std::get<Rat>(c) + r;
  const QTheta& q = std::get<QTheta>(c);
  return qt_normalize(qt_add(q, qt_from_rat(q.theta, r)));
}

std::pair<Rat, Rat> coord_enclosure(const SampleCoord& c, const Rat& width) {
  if (coord_is_rational(c)) {
    const Rat& r = std::get<Rat>(c);
    return {r, r};
  }
  const QTheta& q = std::get<QTheta>(c);
  const ThetaRec& rec = *q.theta;
  UPoly num = qt_reduce_poly(q.num, rec);
  for (;;) {
    auto [lo, hi] = num.eval_interval(rec.lo, rec.hi);
    if (hi - lo < width) return {lo, hi};
    rec.refine();
  }
}

double coord_approx(const SampleCoord& c) {
  auto [lo, hi] = coord_enclosure(c, rat(1, 1048576));
  Rat mid = (lo + hi) / 2;
  return mid.get_d();
}

std::string coord_str(const SampleCoord& c) {
  if (coord_is_rational(c)) return rat_str(std::get<Rat>(c));
  const QTheta& q = std::get<QTheta>(c);
  std::ostringstream os;
  os << "(" << q.num.str("t") << " @ t: " << q.theta->minpoly.str("t")
     << " = 0, t in (" << rat_str(q.theta->lo) << ", "
     << rat_str(q.theta->hi) << "))";
  return os.str();
}

// ===========================================================================
// Substitution of a sample prefix into a polynomial
// ===========================================================================

namespace {

struct SubstResult {
  bool zero = true;
  bool rational = true;
  UPoly up;                // rational case: univariate in the level variable
  ThetaPtr theta;          // algebraic case
  std::vector<QTheta> qc;  // algebraic case: ascending coefficients, reduced
};

// Substitute prefix[i] for order[i]; `var` (may be -1) is left symbolic.
SubstResult substitute_prefix(const Polynomial& f,
                              const std::vector<SampleCoord>& prefix,
                              const std::vector<int>& order, int var) {
  std::map<int, int> pos;
  for (std::size_t i = 0; i < prefix.size(); ++i) pos[order[i]] = (int)i;

  ThetaPtr theta;
  for (int v : f.variables()) {
    if (v == var) continue;
    auto it = pos.find(v);
    if (it == pos.end())
      throw std::logic_error("unsubstituted variable in lifting");
    const SampleCoord& c = prefix[it->second];
    if (!coord_is_rational(c)) {
      const ThetaPtr& t = std::get<QTheta>(c).theta;
      if (theta && theta.get() != t.get())
        throw std::logic_error("mixed algebraic towers");
      theta = t;
    }
  }

  SubstResult res;
  if (!theta) {
    std::map<int, Rat> vals;
    for (auto& [vid, idx] : pos) {
      if (vid == var) continue;
      vals[vid] = std::get<Rat>(prefix[idx]);
    }
    std::vector<Rat> coeffs;
    for (const auto& [mono, c] : f.terms()) {
      Rat val = c;
      int e = 0;
      for (const auto& [vid, exp] : mono) {
        if (vid == var) {
          e = exp;
          continue;
        }
        val *= rat_pow(vals.at(vid), static_cast<unsigned long>(exp));
      }
      if ((int)coeffs.size() <= e) coeffs.resize(e + 1, Rat(0));
      coeffs[e] += val;
    }
    res.up = UPoly(coeffs);
    res.zero = res.up.is_zero();
    res.rational = true;
    return res;
  }

  res.rational = false;
  res.theta = theta;
  std::vector<QTheta> coeffs;
  auto ensure = [&](int e) {
    while ((int)coeffs.size() <= e) coeffs.push_back(qt_from_rat(theta, Rat(0)));
  };
  for (const auto& [mono, c] : f.terms()) {
    QTheta val = qt_from_rat(theta, c);
    int e = 0;
    for (const auto& [vid, exp] : mono) {
      if (vid == var) {
        e = exp;
        continue;
      }
      const SampleCoord& coord = prefix[pos.at(vid)];
      if (coord_is_rational(coord)) {
        val = qt_mul(val, qt_from_rat(theta, rat_pow(std::get<Rat>(coord),
                                                     (unsigned long)exp)));
      } else {
        val = qt_mul(val, qt_pow(std::get<QTheta>(coord), exp));
      }
    }
    ensure(e);
    coeffs[e] = qt_add(coeffs[e], val);
  }
  while (!coeffs.empty() && qt_is_zero(coeffs.back())) coeffs.pop_back();
  if (coeffs.empty()) {
    res.zero = true;
    res.rational = true;
    return res;
  }
  res.zero = false;
  // Demote to the rational path when every coefficient is plainly rational.
  bool all_rat = true;
  for (const QTheta& q : coeffs) {
    UPoly n = qt_reduce_poly(q.num, *theta);
    all_rat = all_rat && (n.is_zero() || n.degree() == 0);
  }
  if (all_rat) {
    std::vector<Rat> rc;
    for (const QTheta& q : coeffs) {
      UPoly n = qt_reduce_poly(q.num, *theta);
      rc.push_back(n.is_zero() ? Rat(0) : n.coeff(0));
    }
    res.rational = true;
    res.up = UPoly(rc);
    res.theta.reset();
    return res;
  }
  res.qc = std::move(coeffs);
  return res;
}

}  // namespace

int sign_at_sample(const Polynomial& p, const std::vector<SampleCoord>& prefix,
                   const std::vector<int>& order) {
  SubstResult s = substitute_prefix(p, prefix, order, -1);
  if (s.zero) return 0;
  if (s.rational) {
    if (s.up.degree() > 0)
      throw std::logic_error("unsubstituted variable in lifting");
    return sign_of(s.up.coeff(0));
  }
  if (s.qc.size() != 1)
    throw std::logic_error("unsubstituted variable in lifting");
  return qt_sign(s.qc[0]);
}

// ===========================================================================
// Root collection and stack construction
// ===========================================================================

namespace {

struct StackRoots {
  std::vector<SampleCoord> roots;  // sorted, pairwise distinct
  std::vector<std::string> null_notes;
};

StackRoots collect_roots(const std::vector<SampleCoord>& prefix,
                         const ThetaPtr& branch_theta,
                         const std::vector<Polynomial>& polys,
                         const std::vector<int>& order, int var) {
  StackRoots out;
  if (!branch_theta) {
    // Rational prefix: every substitution is rational.
    std::vector<RealValue> vals;
    for (const Polynomial& p : polys) {
      SubstResult s = substitute_prefix(p, prefix, order, var);
      if (s.zero) {
        out.null_notes.push_back(poly_str(p) + " vanishes identically");
        continue;
      }
      if (s.up.degree() <= 0) continue;
      for (RealValue& rv : isolate_real_roots(s.up))
        vals.push_back(std::move(rv));
    }
    std::sort(vals.begin(), vals.end(),
              [](const RealValue& a, const RealValue& b) {
                return compare(a, b) < 0;
              });
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i > 0 && compare(vals[i - 1], vals[i]) == 0) continue;
      if (is_rational(vals[i])) {
        out.roots.emplace_back(as_rational(vals[i]));
      } else {
        const RealAlgebraic& ra = std::get<RealAlgebraic>(vals[i]);
        auto rec = std::make_shared<const ThetaRec>(ra.poly(), ra.lo(), ra.hi());
        out.roots.push_back(qt_normalize(QTheta{rec, UPoly::x()}));
      }
    }
    return out;
  }

  // Branch already carries an extension: only rational roots or roots that
  // stay inside the same extension are representable.
  std::vector<SampleCoord> raw;
  for (const Polynomial& p : polys) {
    SubstResult s = substitute_prefix(p, prefix, order, var);
    if (s.zero) {
      out.null_notes.push_back(poly_str(p) + " vanishes identically");
      continue;
    }
    if (s.rational) {
      if (s.up.degree() <= 0) continue;
      for (const RealValue& rv : isolate_real_roots(s.up)) {
        if (!is_rational(rv)) throw TowerOverflow();
        raw.emplace_back(as_rational(rv));
      }
      continue;
    }
    int deg = static_cast<int>(s.qc.size()) - 1;
    if (deg == 0) continue;
    if (deg == 1) {
      raw.push_back(qt_normalize(qt_div(qt_neg(s.qc[0]), s.qc[1])));
      continue;
    }
    throw TowerOverflow();
  }
  std::sort(raw.begin(), raw.end(), [](const SampleCoord& a,
                                       const SampleCoord& b) {
    return coord_compare(a, b) < 0;
  });
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i > 0 && coord_compare(raw[i - 1], raw[i]) == 0) continue;
    out.roots.push_back(raw[i]);
  }
  return out;
}

// A rational point strictly between two distinct coordinates.
Rat gap_rational(const SampleCoord& a, const SampleCoord& b) {
  if (coord_is_rational(a) && coord_is_rational(b))
    return (std::get<Rat>(a) + std::get<Rat>(b)) / 2;
  Rat width(1);
  for (;;) {
    auto ea = coord_enclosure(a, width);
    auto eb = coord_enclosure(b, width);
    Rat cand = (ea.second + eb.first) / 2;
    SampleCoord sc = cand;
    if (coord_compare(sc, a) > 0 && coord_compare(sc, b) < 0) return cand;
    width /= 4;
  }
}

std::vector<CadNode> build_stack(const std::vector<SampleCoord>& roots,
                                 int level) {
  std::vector<CadNode> out;
  auto push = [&](bool section, SampleCoord coord,
                  std::optional<SampleCoord> lo,
                  std::optional<SampleCoord> hi) {
    CadNode n;
    n.level = level;
    n.index_in_level = static_cast<int>(out.size()) + 1;
    n.is_section = section;
    n.coord = std::move(coord);
    n.lo_bound = std::move(lo);
    n.hi_bound = std::move(hi);
    out.push_back(std::move(n));
  };
  if (roots.empty()) {
    push(false, Rat(0), std::nullopt, std::nullopt);
    return out;
  }
  push(false, coord_add_rat(roots.front(), Rat(-1)), std::nullopt,
       roots.front());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    push(true, roots[i], roots[i], roots[i]);
    if (i + 1 < roots.size())
      push(false, Rat(gap_rational(roots[i], roots[i + 1])), roots[i],
           roots[i + 1]);
  }
  push(false, coord_add_rat(roots.back(), Rat(1)), roots.back(), std::nullopt);
  return out;
}

ThetaPtr theta_of_prefix(const std::vector<SampleCoord>& prefix) {
  ThetaPtr t;
  for (const SampleCoord& c : prefix) {
    if (coord_is_rational(c)) continue;
    const ThetaPtr& ct = std::get<QTheta>(c).theta;
    if (t && t.get() != ct.get())
      throw std::logic_error("mixed algebraic towers");
    t = ct;
  }
  return t;
}

}  // namespace

std::vector<CadNode> lift_over_cell(const std::vector<SampleCoord>& prefix,
                                    const std::vector<Polynomial>& level_polys,
                                    const std::vector<int>& order, int var) {
  ThetaPtr theta = theta_of_prefix(prefix);
  StackRoots sr = collect_roots(prefix, theta, level_polys, order, var);
  return build_stack(sr.roots, static_cast<int>(prefix.size()) + 1);
}

// ===========================================================================
// decision_cad
// ===========================================================================

std::size_t max_cells_limit() {
  const char* env = std::getenv("MARKOVCAD_MAX_CELLS");
  if (env && *env) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 1000000;
}

Cad decision_cad(const PolySystem& sys, const std::vector<int>& order) {
  if (sys.atoms.empty())
    throw std::invalid_argument("empty polynomial system");
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j)
      if (order[i] == order[j])
        throw std::invalid_argument("duplicate variable in order");
  for (const Atom& a : sys.atoms)
    for (int v : a.poly.variables())
      if (std::find(order.begin(), order.end(), v) == order.end())
        throw std::invalid_argument(
            "variable order missing a variable of the system");

  const int n = static_cast<int>(order.size());
  Cad cad;
  cad.system = sys;
  cad.order = order;
  cad.levels.resize(n);

  if (n > 0) {
    ProjectionFactorSet& top = cad.levels[n - 1];
    top.var = order[n - 1];
    for (const Atom& a : sys.atoms) {
      if (a.poly.is_zero()) continue;
      bool dup = false;
      for (const Polynomial& e : top.raw) dup = dup || e == a.poly;
      if (dup) continue;
      top.raw.push_back(a.poly);
      top.provenance.push_back({"input", poly_str(a.poly), -1});
    }
    top.factors = normalize_factors(top.raw);
    for (int k = n - 1; k >= 1; --k) {
      ProjectionFactorSet s = hong_projection(cad.levels[k].raw, order[k]);
      s.var = order[k - 1];
      cad.levels[k - 1] = std::move(s);
    }
  }

  const std::size_t limit = max_cells_limit();
  std::vector<SampleCoord> prefix;

  std::function<void(CadNode&, ThetaPtr)> lift = [&](CadNode& node,
                                                     ThetaPtr theta) {
    const int k = node.level;
    if (k == n) {
      for (const Atom& a : sys.atoms)
        node.atom_signs.push_back(sign_at_sample(a.poly, prefix, order));
      node.truth = true;
      for (std::size_t i = 0; i < sys.atoms.size(); ++i)
        node.truth = node.truth &&
                     rel_holds(node.atom_signs[i], sys.atoms[i].rel);
      return;
    }
    StackRoots sr =
        collect_roots(prefix, theta, cad.levels[k].factors, order, order[k]);
    for (const std::string& note : sr.null_notes) {
      cad.nullification_seen = true;
      cad.notes.push_back("level " + std::to_string(k + 1) + " (" +
                          var_name(order[k]) + "): " + note +
                          " at the sample of a level-" + std::to_string(k) +
                          " cell; verify results against an oracle");
    }
    node.children = build_stack(sr.roots, k + 1);
    cad.cell_count += node.children.size();
    if (cad.cell_count > limit) throw CellLimitExceeded(limit);
    for (CadNode& child : node.children) {
      ThetaPtr child_theta = theta;
      if (!coord_is_rational(child.coord))
        child_theta = std::get<QTheta>(child.coord).theta;
      prefix.push_back(child.coord);
      lift(child, child_theta);
      prefix.pop_back();
    }
  };

  cad.root.level = 0;
  lift(cad.root, nullptr);
  return cad;
}

// ===========================================================================
// Tree queries
// ===========================================================================

int Cad::leaf_count() const {
  int count = 0;
  std::function<void(const CadNode&)> rec = [&](const CadNode& node) {
    if (node.children.empty()) {
      ++count;
      return;
    }
    for (const CadNode& c : node.children) rec(c);
  };
  rec(root);
  return count;
}

std::vector<int> Cad::cells_per_level() const {
  std::vector<int> counts(order.size(), 0);
  std::function<void(const CadNode&)> rec = [&](const CadNode& node) {
    if (node.level >= 1) ++counts[node.level - 1];
    for (const CadNode& c : node.children) rec(c);
  };
  rec(root);
  return counts;
}

void walk_leaves(
    const Cad& cad,
    const std::function<void(const CadNode&, const std::vector<SampleCoord>&)>&
        visit) {
  std::vector<SampleCoord> prefix;
  std::function<void(const CadNode&)> rec = [&](const CadNode& node) {
    if (node.children.empty() && node.level == (int)cad.order.size()) {
      visit(node, prefix);
      return;
    }
    for (const CadNode& c : node.children) {
      prefix.push_back(c.coord);
      rec(c);
      prefix.pop_back();
    }
  };
  rec(cad.root);
}

// ===========================================================================
// Projection definability and solution formulas
// ===========================================================================

namespace {

std::vector<Polynomial> all_level_factors(const Cad& cad) {
  std::vector<Polynomial> out;
  for (const ProjectionFactorSet& s : cad.levels)
    for (const Polynomial& f : s.factors) out.push_back(f);
  return out;
}

DefinabilityResult check_definable(const Cad& cad,
                                   const std::vector<Polynomial>& factors) {
  struct Entry {
    const CadNode* node;
    std::vector<SampleCoord> sample;
    bool truth;
  };
  std::map<std::vector<int>, Entry> seen;
  DefinabilityResult res;
  walk_leaves(cad, [&](const CadNode& leaf,
                       const std::vector<SampleCoord>& sample) {
    if (!res.definable) return;
    std::vector<int> sig;
    sig.reserve(factors.size());
    for (const Polynomial& f : factors)
      sig.push_back(sign_at_sample(f, sample, cad.order));
    auto it = seen.find(sig);
    if (it == seen.end()) {
      seen.emplace(std::move(sig), Entry{&leaf, sample, leaf.truth});
      return;
    }
    if (it->second.truth != leaf.truth) {
      res.definable = false;
      res.cell_a = it->second.node;
      res.cell_b = &leaf;
      res.sample_a = it->second.sample;
      res.sample_b = sample;
    }
  });
  return res;
}

std::string sample_str(const std::vector<SampleCoord>& sample) {
  std::string s = "(";
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (i) s += ", ";
    s += coord_str(sample[i]);
  }
  return s + ")";
}

}  // namespace

DefinabilityResult is_projection_definable(const Cad& cad) {
  return check_definable(cad, all_level_factors(cad));
}

DefinabilityResult is_projection_definable(
    const Cad& cad, const std::vector<Polynomial>& factors) {
  return check_definable(cad, factors);
}

SignedFormula solution_formula(const Cad& cad) {
  DefinabilityResult def = is_projection_definable(cad);
  if (!def.definable) {
    throw NotProjectionDefinable(
        "solution formula requires projection definability; cells at " +
        sample_str(def.sample_a) + " and " + sample_str(def.sample_b) +
        " share every factor sign but differ in truth");
  }
  SignedFormula f;
  f.basis = all_level_factors(cad);
  walk_leaves(cad, [&](const CadNode& leaf,
                       const std::vector<SampleCoord>& sample) {
    if (!leaf.truth) return;
    std::vector<SignAtom> conj;
    for (const Polynomial& factor : f.basis)
      conj.push_back({factor, sign_at_sample(factor, sample, cad.order)});
    f.disjuncts.push_back(std::move(conj));
  });
  return f;
}

bool formula_holds(const SignedFormula& f, const std::map<int, Rat>& point) {
  for (const auto& conj : f.disjuncts) {
    bool ok = true;
    for (const SignAtom& a : conj)
      ok = ok && sign_of(a.factor.eval(point)) == a.sign;
    if (ok) return true;
  }
  return false;
}

std::string formula_str(const SignedFormula& f) {
  if (f.disjuncts.empty()) return "false";
  std::string out;
  for (std::size_t d = 0; d < f.disjuncts.size(); ++d) {
    if (d) out += " OR ";
    out += "(";
    for (std::size_t i = 0; i < f.disjuncts[d].size(); ++i) {
      if (i) out += " AND ";
      const SignAtom& a = f.disjuncts[d][i];
      out += poly_str(a.factor);
      out += a.sign < 0 ? " < 0" : a.sign > 0 ? " > 0" : " = 0";
    }
    out += ")";
  }
  return out;
}

// ===========================================================================
// Rendering
// ===========================================================================

namespace {

std::string node_desc(const Cad& cad, const CadNode& node) {
  const std::string name = var_name(cad.order[node.level - 1]);
  std::ostringstream os;
  if (node.is_section) {
    os << name << " = " << coord_str(node.coord);
  } else {
    std::string lo = node.lo_bound ? coord_str(*node.lo_bound) : "-inf";
    std::string hi = node.hi_bound ? coord_str(*node.hi_bound) : "+inf";
    os << name << " in (" << lo << ", " << hi << ") sample "
       << coord_str(node.coord);
  }
  return os.str();
}

}  // namespace

std::string cad_text(const Cad& cad) {
  std::ostringstream os;
  os << "variables:";
  for (std::size_t i = 0; i < cad.order.size(); ++i)
    os << (i ? ", " : " ") << var_name(cad.order[i]);
  os << "\n";
  for (std::size_t k = 0; k < cad.levels.size(); ++k) {
    os << "level " << (k + 1) << " (" << var_name(cad.order[k])
       << ") factors:";
    for (const Polynomial& f : cad.levels[k].factors)
      os << " {" << poly_str(f) << "}";
    os << "\n";
  }
  os << "cells: " << cad.cell_count << ", leaves: " << cad.leaf_count()
     << "\n";
  std::function<void(const CadNode&, int)> rec = [&](const CadNode& node,
                                                     int depth) {
    if (node.level == 0) {
      os << "root\n";
    } else {
      for (int i = 0; i < depth; ++i) os << "  ";
      os << node_desc(cad, node);
      if (node.children.empty() && node.level == (int)cad.order.size())
        os << " -> " << (node.truth ? "true" : "false");
      os << "\n";
    }
    for (const CadNode& c : node.children) rec(c, depth + 1);
  };
  rec(cad.root, 0);
  if (cad.nullification_seen) {
    os << "warning: nullification during lifting; verify with an oracle\n";
    for (const std::string& note : cad.notes) os << "  " << note << "\n";
  }
  return os.str();
}

std::string cad_json(const Cad& cad) {
  using json = nlohmann::ordered_json;
  json j;
  j["order"] = json::array();
  for (int v : cad.order) j["order"].push_back(var_name(v));
  j["levels"] = json::array();
  for (std::size_t k = 0; k < cad.levels.size(); ++k) {
    json lv;
    lv["variable"] = var_name(cad.order[k]);
    lv["raw"] = json::array();
    for (const Polynomial& p : cad.levels[k].raw)
      lv["raw"].push_back(poly_str(p));
    lv["factors"] = json::array();
    for (const Polynomial& p : cad.levels[k].factors)
      lv["factors"].push_back(poly_str(p));
    j["levels"].push_back(std::move(lv));
  }
  j["cell_count"] = cad.cell_count;
  j["leaf_count"] = cad.leaf_count();
  j["nullification_seen"] = cad.nullification_seen;
  j["notes"] = cad.notes;
  std::function<json(const CadNode&)> rec = [&](const CadNode& node) -> json {
    json nj;
    nj["level"] = node.level;
    if (node.level == 0) {
      nj["kind"] = "root";
    } else {
      nj["kind"] = node.is_section ? "section" : "sector";
      nj["index"] = node.index_in_level;
      nj["sample"] = coord_str(node.coord);
      nj["lo"] = node.lo_bound ? json(coord_str(*node.lo_bound)) : json();
      nj["hi"] = node.hi_bound ? json(coord_str(*node.hi_bound)) : json();
    }
    if (node.children.empty() && node.level == (int)cad.order.size()) {
      nj["truth"] = node.truth;
      nj["signs"] = node.atom_signs;
    } else {
      nj["children"] = json::array();
      for (const CadNode& c : node.children)
        nj["children"].push_back(rec(c));
    }
    return nj;
  };
  j["tree"] = rec(cad.root);
  return j.dump(2);
}

}  // namespace mc
