#include "markovcad/realalg.hpp"

#include <algorithm>
#include <stdexcept>

namespace mc {

namespace {

int sgn_rat(const Rat& q) { return sgn(q); }

// Number of sign changes in the coefficient sequence, zeros skipped.
int sign_changes(const std::vector<Rat>& c) {
  int changes = 0, prev = 0;
  for (const auto& q : c) {
    int s = sgn_rat(q);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  return changes;
}

// p(a + d*x) with d != 0.
UPoly compose_affine(const UPoly& p, const Rat& a, const Rat& d) {
  UPoly acc;
  UPoly lin({a, d});
  for (int i = p.degree(); i >= 0; --i)
    acc = acc * lin + UPoly(p.coeff(i));
  return acc;
}

// Descartes bound on the number of roots of p in the open interval (a, b):
// map (a,b) to (0,1), reverse, shift by one, count sign changes.
int descartes_count(const UPoly& p, const Rat& a, const Rat& b) {
  UPoly q = compose_affine(p, a, b - a);  // roots of interest now in (0,1)
  const int n = q.degree();
  std::vector<Rat> c(static_cast<std::size_t>(n) + 1, Rat(0));
  for (int i = 0; i <= n; ++i)
    c[static_cast<std::size_t>(n - i)] = q.coeff(i);  // reverse
  // Taylor shift by 1 in place.
  for (int i = 0; i <= n; ++i)
    for (int j = n - 1; j >= i; --j)
      c[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j) + 1];
  return sign_changes(c);
}

}  // namespace

RealAlgebraic::RealAlgebraic(UPoly p, Rat lo, Rat hi)
    : p_(std::move(p)), lo_(std::move(lo)), hi_(std::move(hi)) {
  sign_lo_ = sgn_rat(p_.eval(lo_));
  if (sign_lo_ == 0 || sgn_rat(p_.eval(hi_)) == 0 || !(lo_ < hi_))
    throw std::invalid_argument("invalid isolating interval");
}

void RealAlgebraic::refine() const {
  Rat m = (lo_ + hi_) / 2;
  int s = sgn_rat(p_.eval(m));
  if (s == 0) {
    // The root is exactly m; shrink to a tiny interval around it with
    // nonzero endpoint values.
    Rat eps = (hi_ - lo_) / 4;
    while (sgn_rat(p_.eval(m - eps)) == 0 || sgn_rat(p_.eval(m + eps)) == 0)
      eps /= 2;
    lo_ = m - eps;
    hi_ = m + eps;
    sign_lo_ = sgn_rat(p_.eval(lo_));
    return;
  }
  if (s == sign_lo_)
    lo_ = m;
  else
    hi_ = m;
}

void RealAlgebraic::refine_below_width(const Rat& width) const {
  while (hi_ - lo_ > width) refine();
}

std::string RealAlgebraic::str() const {
  return "root of " + p_.str() + " in (" + rat_str(lo_) + ", " + rat_str(hi_) +
         ")";
}

bool is_rational(const RealValue& v) {
  return std::holds_alternative<Rat>(v);
}

const Rat& as_rational(const RealValue& v) { return std::get<Rat>(v); }

double approx(const RealValue& v) {
  if (is_rational(v)) return as_rational(v).get_d();
  return std::get<RealAlgebraic>(v).approx();
}

std::string real_value_str(const RealValue& v) {
  if (is_rational(v)) return rat_str(as_rational(v));
  return std::get<RealAlgebraic>(v).str();
}

namespace {

int compare_rat_alg(const Rat& r, const RealAlgebraic& a) {
  for (;;) {
    if (r <= a.lo()) return -1;
    if (r >= a.hi()) return 1;
    if (a.poly().eval(r) == 0) return 0;  // r is the unique root in (lo,hi)
    a.refine();
  }
}

int compare_alg_alg(const RealAlgebraic& a, const RealAlgebraic& b) {
  UPoly g = UPoly::gcd_monic(a.poly(), b.poly());
  const bool may_share = g.degree() >= 1;
  for (;;) {
    if (a.hi() <= b.lo()) return -1;
    if (b.hi() <= a.lo()) return 1;
    if (may_share) {
      Rat ilo = std::max(a.lo(), b.lo());
      Rat ihi = std::min(a.hi(), b.hi());
      if (ilo < ihi) {
        int slo = sgn(g.eval(ilo)), shi = sgn(g.eval(ihi));
        if (slo != 0 && shi != 0) {
          if (slo != shi) return 0;  // shared root in the overlap
          // No shared root: fall through and keep separating.
        }
      }
    }
    a.refine();
    b.refine();
  }
}

}  // namespace

int compare(const RealValue& x, const RealValue& y) {
  if (is_rational(x) && is_rational(y)) {
    Rat d = as_rational(x) - as_rational(y);
    return sgn(d);
  }
  if (is_rational(x)) return compare_rat_alg(as_rational(x), std::get<RealAlgebraic>(y));
  if (is_rational(y)) return -compare_rat_alg(as_rational(y), std::get<RealAlgebraic>(x));
  return compare_alg_alg(std::get<RealAlgebraic>(x), std::get<RealAlgebraic>(y));
}

int sign_at(const UPoly& q, const RealValue& v) {
  if (q.is_zero()) return 0;
  if (is_rational(v)) return sgn(q.eval(as_rational(v)));
  const RealAlgebraic& a = std::get<RealAlgebraic>(v);
  UPoly g = UPoly::gcd_monic(a.poly(), q);
  if (g.degree() >= 1) {
    int slo = sgn(g.eval(a.lo())), shi = sgn(g.eval(a.hi()));
    if (slo != shi) return 0;  // q shares the root
  }
  for (;;) {
    auto box = q.eval_interval(a.lo(), a.hi());
    if (sgn(box.first) > 0) return 1;
    if (sgn(box.second) < 0) return -1;
    a.refine();
  }
}

Rat rational_between(const RealValue& lo, const RealValue& hi) {
  if (compare(lo, hi) >= 0) throw std::invalid_argument("empty interval");
  if (is_rational(lo) && is_rational(hi))
    return (as_rational(lo) + as_rational(hi)) / 2;
  if (is_rational(lo)) {
    const Rat& r = as_rational(lo);
    const RealAlgebraic& h = std::get<RealAlgebraic>(hi);
    while (!(h.lo() > r)) h.refine();
    return (r + h.lo()) / 2;
  }
  if (is_rational(hi)) {
    const Rat& r = as_rational(hi);
    const RealAlgebraic& l = std::get<RealAlgebraic>(lo);
    while (!(l.hi() < r)) l.refine();
    return (l.hi() + r) / 2;
  }
  const RealAlgebraic& l = std::get<RealAlgebraic>(lo);
  const RealAlgebraic& h = std::get<RealAlgebraic>(hi);
  while (!(l.hi() <= h.lo())) {
    l.refine();
    h.refine();
  }
  return (l.hi() + h.lo()) / 2;
}

Rat rational_below(const RealValue& v) {
  if (is_rational(v)) return as_rational(v) - 1;
  return std::get<RealAlgebraic>(v).lo() - 1;
}

Rat rational_above(const RealValue& v) {
  if (is_rational(v)) return as_rational(v) + 1;
  return std::get<RealAlgebraic>(v).hi() + 1;
}

namespace {

constexpr unsigned long kDivisorCap = 1000000000UL;

std::vector<unsigned long> divisors_of(unsigned long n) {
  std::vector<unsigned long> out;
  for (unsigned long d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      if (d != n / d) out.push_back(n / d);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Divide p (with p(r) == 0) by (x - r) exactly.
UPoly deflate(const UPoly& p, const Rat& r) {
  UPoly lin({-r, Rat(1)});
  auto qr = UPoly::divmod(p, lin);
  return qr.first;
}

struct MidpointRoot {
  Rat r;
};

void bisect_isolate(const UPoly& sf, const Rat& a, const Rat& b,
                    std::vector<std::pair<Rat, Rat>>& out) {
  int v = descartes_count(sf, a, b);
  if (v == 0) return;
  if (v == 1) {
    out.emplace_back(a, b);
    return;
  }
  Rat m = (a + b) / 2;
  if (sf.eval(m) == 0) throw MidpointRoot{m};
  bisect_isolate(sf, a, m, out);
  bisect_isolate(sf, m, b, out);
}

}  // namespace

std::vector<RealValue> isolate_real_roots(const UPoly& p) {
  if (p.is_zero())
    throw std::invalid_argument("identically zero has no isolated roots");
  UPoly sf = p.square_free_part();
  std::vector<Rat> rational_roots;
  if (sf.degree() >= 1 && sf.coeff(0) == 0) {
    rational_roots.push_back(Rat(0));
    sf = deflate(sf, Rat(0)).primitive();
  }
  // Rational-root extraction by divisor enumeration (bounded), plus the
  // always-solvable linear case.
  bool changed = true;
  while (changed && sf.degree() >= 1) {
    changed = false;
    if (sf.degree() == 1) {
      Rat r = -sf.coeff(0) / sf.coeff(1);
      rational_roots.push_back(r);
      sf = UPoly(Rat(1));
      break;
    }
    Int c0 = sf.coeff(0).get_num();  // integer-primitive: den == 1
    Int cn = sf.lead().get_num();
    Int a0 = abs(c0), an = abs(cn);
    if (a0 == 0 || !a0.fits_ulong_p() || !an.fits_ulong_p()) break;
    unsigned long u0 = a0.get_ui(), un = an.get_ui();
    if (u0 > kDivisorCap || un > kDivisorCap) break;
    auto ps = divisors_of(u0), qs = divisors_of(un);
    for (unsigned long pd : ps) {
      for (unsigned long qd : qs) {
        Rat cand(static_cast<long>(pd), static_cast<long>(qd));
        cand.canonicalize();
        for (int s = 0; s < 2 && !changed; ++s) {
          Rat r = s ? Rat(-cand) : cand;
          if (sf.eval(r) == 0) {
            rational_roots.push_back(r);
            sf = deflate(sf, r).primitive();
            changed = true;
          }
        }
        if (changed) break;
      }
      if (changed) break;
    }
  }
  // Algebraic isolation of whatever remains.
  std::vector<std::pair<Rat, Rat>> intervals;
  while (sf.degree() >= 1) {
    intervals.clear();
    Rat bound = sf.root_bound();
    try {
      bisect_isolate(sf, -bound, bound, intervals);
      break;
    } catch (const MidpointRoot& mr) {
      rational_roots.push_back(mr.r);
      sf = deflate(sf, mr.r).primitive();
    }
  }
  std::vector<RealValue> roots;
  roots.reserve(rational_roots.size() + intervals.size());
  for (auto& r : rational_roots) roots.emplace_back(std::move(r));
  for (auto& iv : intervals)
    roots.emplace_back(RealAlgebraic(sf, iv.first, iv.second));
  std::sort(roots.begin(), roots.end(),
            [](const RealValue& a, const RealValue& b) {
              return compare(a, b) < 0;
            });
  return roots;
}

}  // namespace mc
