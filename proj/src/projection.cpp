#include "markovcad/projection.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace mc {

namespace {

[[noreturn]] void degree_error() {
  throw std::invalid_argument("degree preconditions violated");
}

// Valid psc index range for degrees p >= q: 0..q when p > q, 0..p-1 when
// p == q (empty when p == q == 0).
int max_psc_index(int p, int q) { return p > q ? q : p - 1; }

}  // namespace

PolyMatrix sylvester_habicht(const Polynomial& f, const Polynomial& g, int var,
                             int i) {
  const int p = f.degree_in(var);
  const int q = g.degree_in(var);
  if (p < 0 || q < 0 || p < q) degree_error();
  if (i < 0 || i > max_psc_index(p, q)) degree_error();

  const int rows = p + q - 2 * i;
  const int cols = p + q - i;
  PolyMatrix m(rows, std::vector<Polynomial>(cols));
  // Column c holds the coefficient of var^(p+q-i-1-c).
  auto fill_row = [&](int row, const Polynomial& poly, int shift) {
    // Row polynomial is var^shift * poly.
    for (int c = 0; c < cols; ++c) {
      int power = p + q - i - 1 - c;
      int k = power - shift;
      if (k >= 0) m[row][c] = poly.coeff_of(var, k);
    }
  };
  int row = 0;
  for (int s = q - i - 1; s >= 0; --s) fill_row(row++, f, s);
  for (int s = 0; s <= p - i - 1; ++s) fill_row(row++, g, s);
  return m;
}

Polynomial psc(const Polynomial& f, const Polynomial& g, int var, int i) {
  PolyMatrix m = sylvester_habicht(f, g, var, i);
  const int n = static_cast<int>(m.size());
  PolyMatrix sq(n, std::vector<Polynomial>(n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) sq[r][c] = m[r][c];
  return det(sq);
}

std::vector<Polynomial> psc_set(const Polynomial& f, const Polynomial& g,
                                int var) {
  std::vector<Polynomial> out;
  if (f.is_zero() || g.is_zero()) return out;
  const int df = f.degree_in(var);
  const int dg = g.degree_in(var);
  if (df == 0 && dg == 0) return out;
  if (df == 0 || dg == 0) {
    const Polynomial& c = df == 0 ? f : g;
    const int d = df == 0 ? dg : df;
    if (c.is_constant()) return out;  // rational constant: nothing survives
    out.push_back(c.pow(static_cast<unsigned>(d)).primitive_positive());
    return out;
  }
  const Polynomial& hi = df >= dg ? f : g;
  const Polynomial& lo = df >= dg ? g : f;
  const int p = std::max(df, dg);
  const int q = std::min(df, dg);
  for (int i = 0; i <= max_psc_index(p, q); ++i) {
    Polynomial v = psc(hi, lo, var, i);
    if (!v.is_zero()) out.push_back(std::move(v));
  }
  return out;
}

std::vector<Polynomial> shortcut_project(const Polynomial& f, int var) {
  const int d = f.degree_in(var);
  if (d == 0 || f.is_zero()) return {f};
  if (d == 1) return {leading_coeff(f, var), reductum(f, var)};
  throw std::invalid_argument("not a shortcut case");
}

std::vector<Polynomial> shortcut_project(const Polynomial& f,
                                         const Polynomial& g, int var) {
  const int df = f.is_zero() ? 0 : f.degree_in(var);
  const int dg = g.is_zero() ? 0 : g.degree_in(var);
  if ((df == 0) == (dg == 0)) throw std::invalid_argument("not a shortcut case");
  const Polynomial& c = df == 0 ? f : g;
  const Polynomial& other = df == 0 ? g : f;
  std::vector<Polynomial> out;
  if (c.is_constant()) return out;  // constants and signs are dropped
  for (const Polynomial& r : reducta_set(other, var)) {
    int d = r.degree_in(var);
    if (d < 1) continue;
    Polynomial v = c.pow(static_cast<unsigned>(d)).primitive_positive();
    bool dup = false;
    for (const Polynomial& e : out) dup = dup || e == v;
    if (!dup) out.push_back(std::move(v));
  }
  return out;
}

std::string provenance_str(const FactorProvenance& p) {
  std::string s = p.rule;
  if (p.index >= 0) s += "_" + std::to_string(p.index);
  s += "(" + p.source + ")";
  return s;
}

std::vector<Polynomial> normalize_factors(const std::vector<Polynomial>& raw) {
  std::vector<Polynomial> out;
  for (const Polynomial& r : raw) {
    if (r.is_zero() || r.is_constant()) continue;
    Polynomial q = r.primitive_positive();
    std::vector<int> vars = q.variables();
    if (vars.size() == 1) {
      // Redundancy is reduced only through the square-free part, never a
      // full factorization.
      UPoly u = q.to_upoly(vars[0]).square_free_part();
      q = Polynomial::from_upoly(u, vars[0]).primitive_positive();
    }
    bool dup = false;
    for (const Polynomial& e : out) dup = dup || is_scalar_multiple(e, q);
    if (!dup) out.push_back(std::move(q));
  }
  return out;
}

ProjectionFactorSet hong_projection(const std::vector<Polynomial>& fs,
                                    int var) {
  ProjectionFactorSet result;
  result.var = var;
  auto add = [&](Polynomial p, FactorProvenance prov) {
    for (const Polynomial& e : result.raw)
      if (e == p) return;
    result.raw.push_back(std::move(p));
    result.provenance.push_back(std::move(prov));
  };

  // PROJ1: leading coefficients of all reducta, and psc_i(f', D f').
  for (const Polynomial& f : fs) {
    if (f.is_zero()) continue;
    for (const Polynomial& fr : reducta_set(f, var)) {
      std::string src = poly_str(fr);
      add(leading_coeff(fr, var), {"ldcf", src, -1});
      int d = fr.degree_in(var);
      if (d >= 1) {
        Polynomial dfr = fr.derivative(var);
        // deg(D f') = d - 1, so the pair (f', D f') always has p > q and the
        // index range 0..d-1.
        for (int i = 0; i <= d - 1; ++i)
          add(psc(fr, dfr, var, i),
              {"psc", src + ", D " + src, i});
      }
    }
  }

  // PROJ2: pairs in canonical rendering order; reducta of the first member.
  std::vector<const Polynomial*> sorted;
  for (const Polynomial& f : fs)
    if (!f.is_zero()) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(),
            [](const Polynomial* a, const Polynomial* b) {
              return poly_str(*a) < poly_str(*b);
            });
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      const Polynomial& g = *sorted[b];
      const int dg = g.degree_in(var);
      std::string gsrc = poly_str(g);
      for (const Polynomial& fr : reducta_set(*sorted[a], var)) {
        const int df = fr.degree_in(var);
        std::string src = poly_str(fr) + ", " + gsrc;
        if (df == 0 && dg == 0) continue;
        if (df == 0 || dg == 0) {
          const Polynomial& c = df == 0 ? fr : g;
          const int d = df == 0 ? dg : df;
          if (c.is_constant()) continue;  // rational constant contributes nothing
          add(c.pow(static_cast<unsigned>(d)).primitive_positive(),
              {"pair-const", src, -1});
          continue;
        }
        const Polynomial& hi = df >= dg ? fr : g;
        const Polynomial& lo = df >= dg ? g : fr;
        const int p = std::max(df, dg);
        const int q = std::min(df, dg);
        for (int i = 0; i <= max_psc_index(p, q); ++i)
          add(psc(hi, lo, var, i), {"pair-psc", src, i});
      }
    }
  }

  result.factors = normalize_factors(result.raw);
  return result;
}

}  // namespace mc
