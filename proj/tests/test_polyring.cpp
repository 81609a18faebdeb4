#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "markovcad/poly.hpp"
#include "markovcad/variable.hpp"

using namespace mc;

namespace {

// Interned once, in a deterministic order shared by every test below.
int vx() { static int id = intern_var("x"); return id; }
int vy() { static int id = intern_var("y"); return id; }
int vz() { static int id = intern_var("z"); return id; }

Polynomial P(const std::string& s) {
  vx();
  vy();
  vz();
  return parse_polynomial(s);
}

// Independent determinant oracle: permutation expansion.
Polynomial naive_det(const PolyMatrix& m) {
  std::size_t n = m.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Polynomial acc;
  do {
    int sign = 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) sign = -sign;
    Polynomial prod{Rat(sign)};
    for (std::size_t i = 0; i < n; ++i) prod = prod * m[i][perm[i]];
    acc += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

}  // namespace

TEST_CASE("variable registry is deterministic and idempotent") {
  int a = intern_var("reg_demo");
  int b = intern_var("reg_demo");
  CHECK(a == b);
  CHECK(var_info(a).name == "reg_demo");
  CHECK(var_name(a) == "reg_demo");
  set_var_display(a, "reg,demo");
  CHECK(var_name(a) == "reg,demo");
  CHECK(find_var("reg_demo") == a);
  CHECK(find_var("never_interned_name") == -1);
}

TEST_CASE("parsing and descending rendering round-trip") {
  CHECK(poly_str(P("x^2 + y^2 - 1")) == "x^2 + y^2 - 1");
  CHECK(poly_str(P("-4*x^2 + 4")) == "-4*x^2 + 4");
  CHECK(poly_str(P("x^4 - 2*x^2 + 1")) == "x^4 - 2*x^2 + 1");
  CHECK(poly_str(P("0")) == "0");
  CHECK(poly_str(P("x - x")) == "0");
  CHECK(poly_str(P("3/5*x")) == "3/5*x");
  CHECK(poly_str(P("-x")) == "-x");
  CHECK(poly_str(P("x*y + z")) == "x*y + z");
  CHECK(poly_str(P("(x + y)^2")) == "x^2 + 2*x*y + y^2");
  CHECK(poly_str(P("0.5*x")) == "1/2*x");
}

TEST_CASE("ascending rendering puts the constant first") {
  int a1 = intern_var("ralpha1");
  int a2 = intern_var("ralpha2");
  int x1 = intern_var("rx1");
  int x2 = intern_var("rx2");
  Polynomial p = Polynomial(Rat(1)) -
                 Polynomial::variable(a1) * Polynomial::variable(x1) -
                 Polynomial::variable(a2) * Polynomial::variable(x2);
  CHECK(poly_str(p, RenderOrder::AscendingConstFirst) ==
        "1 - ralpha1*rx1 - ralpha2*rx2");
  Polynomial q = Polynomial(Rat(1)) - Polynomial::variable(a2);
  CHECK(poly_str(q, RenderOrder::AscendingConstFirst) == "1 - ralpha2");
}

TEST_CASE("ascending rendering orders mixed-degree groups by degree") {
  int p11 = intern_var("tp11");
  int p12 = intern_var("tp12");
  int p21 = intern_var("tp21");
  int p22 = intern_var("tp22");
  Polynomial det = Polynomial(Rat(3)) -
                   Polynomial::variable(p11).scaled(rat(3)) -
                   Polynomial::variable(p22).scaled(rat(3)) +
                   (Polynomial::variable(p11) * Polynomial::variable(p22))
                       .scaled(rat(3)) -
                   (Polynomial::variable(p12) * Polynomial::variable(p21))
                       .scaled(rat(3));
  CHECK(poly_str(det, RenderOrder::AscendingConstFirst) ==
        "3 - 3*tp11 - 3*tp22 + 3*tp11*tp22 - 3*tp12*tp21");
}

TEST_CASE("degree conventions") {
  CHECK(Polynomial().total_degree() == -1);
  CHECK(Polynomial().degree_in(vx()) == -1);
  CHECK(P("5").degree_in(vx()) == 0);
  CHECK(P("x^3 + y").degree_in(vx()) == 3);
  CHECK(P("x^3 + y").degree_in(vy()) == 1);
  CHECK(P("x^3 + y").degree_in(vz()) == 0);
  CHECK(P("x*y^2").total_degree() == 3);
  CHECK(P("x + y").depends_on(vx()));
  CHECK_FALSE(P("x + y").depends_on(vz()));
}

TEST_CASE("arithmetic matches expansion") {
  CHECK(P("(x + y) * (x - y)") == P("x^2 - y^2"));
  CHECK(P("x^2 - 1") + P("1") == P("x^2"));
  CHECK(-P("x - y") == P("y - x"));
  CHECK(P("x").pow(0) == P("1"));
  CHECK(P("x + 1").pow(3) == P("x^3 + 3*x^2 + 3*x + 1"));
  CHECK(P("x").scaled(rat(-2)) == P("-2*x"));
}

TEST_CASE("coefficient extraction and reducta") {
  Polynomial h = P("y^2 + x^2 - 1");
  CHECK(leading_coeff(h, vy()) == P("1"));
  CHECK(reductum(h, vy()) == P("x^2 - 1"));
  auto rs = reducta_set(h, vy());
  REQUIRE(rs.size() == 2);
  CHECK(rs[0] == h);
  CHECK(rs[1] == P("x^2 - 1"));

  Polynomial g = P("x*y^2 + 2*y + 3");
  auto cs = g.coeffs_in(vy());
  REQUIRE(cs.size() == 3);
  CHECK(cs[0] == P("3"));
  CHECK(cs[1] == P("2"));
  CHECK(cs[2] == P("x"));
  CHECK(g.coeff_of(vy(), 1) == P("2"));

  CHECK_THROWS_AS(leading_coeff(Polynomial(), vx()), std::invalid_argument);
  CHECK(reductum(P("7"), vx()).is_zero());
}

TEST_CASE("derivatives") {
  CHECK(P("x^2 + y^2 - 1").derivative(vy()) == P("2*y"));
  CHECK(P("x*y^2").derivative(vy()) == P("2*x*y"));
  CHECK(P("x + 1").derivative(vy()).is_zero());
}

TEST_CASE("substitution and evaluation") {
  Polynomial p = P("(x + y)^2");
  std::map<int, Polynomial> sub{{vy(), P("x")}};
  CHECK(p.substitute(sub) == P("4*x^2"));
  std::map<int, Rat> rsub{{vy(), rat(2)}};
  CHECK(p.substitute_rational(rsub) == P("x^2 + 4*x + 4"));
  std::map<int, Rat> full{{vx(), rat(1)}, {vy(), rat(2)}};
  CHECK(p.eval(full) == 9);
  CHECK_THROWS_AS(p.eval(rsub), std::invalid_argument);
}

TEST_CASE("univariate bridge") {
  Polynomial p = P("x^2 - 1");
  UPoly u = p.to_upoly(vx());
  CHECK(u.degree() == 2);
  CHECK(u.coeff(0) == -1);
  CHECK(Polynomial::from_upoly(u, vx()) == p);
  CHECK_THROWS_AS(P("x + y").to_upoly(vx()), std::invalid_argument);
  CHECK(P("5").to_upoly(vx()).degree() == 0);
}

TEST_CASE("primitive positive normalization and proportionality") {
  CHECK(P("-2*x + 4*y").primitive_positive() == P("x - 2*y"));
  CHECK(P("1/2*x^2 - 3/2").primitive_positive() == P("x^2 - 3"));
  CHECK(Polynomial().primitive_positive().is_zero());
  CHECK(is_scalar_multiple(P("2*x + 2"), P("x + 1")));
  CHECK(is_scalar_multiple(P("-x"), P("x")));
  CHECK_FALSE(is_scalar_multiple(P("x + 1"), P("x - 1")));
  CHECK_FALSE(is_scalar_multiple(P("x"), P("y")));
}

TEST_CASE("parser reports malformed input") {
  CHECK_THROWS_AS(parse_polynomial("x +"), ParseError);
  CHECK_THROWS_AS(parse_polynomial("(x"), ParseError);
  CHECK_THROWS_AS(parse_polynomial("2x"), ParseError);
  CHECK_THROWS_AS(parse_polynomial("x ^ y"), ParseError);
  CHECK_THROWS_AS(parse_polynomial(""), ParseError);
  try {
    parse_polynomial("x + $");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("parser resolver controls the allowed names") {
  auto resolve = [](const std::string& name) -> int {
    if (name == "x") return vx();
    return -1;
  };
  CHECK(parse_polynomial("x^2", resolve) == P("x^2"));
  CHECK_THROWS_AS(parse_polynomial("q + 1", resolve), ParseError);
}

TEST_CASE("exact division") {
  CHECK(divide_exact(P("x^2 - y^2"), P("x - y")) == P("x + y"));
  CHECK(divide_exact(P("x^2 - 2*x + 1"), P("x - 1")) == P("x - 1"));
  CHECK_THROWS_AS(divide_exact(P("x^2 + 1"), P("x - 1")), std::runtime_error);
  CHECK_THROWS_AS(divide_exact(P("x"), Polynomial()), std::runtime_error);
}

TEST_CASE("determinant matches the permutation oracle") {
  // 5x5 exercises fraction-free elimination; entries chosen so pivots vary.
  PolyMatrix m(5, std::vector<Polynomial>(5));
  long vals[5][5] = {{2, 1, 0, 3, 1},
                     {1, 0, 2, 1, 4},
                     {0, 2, 1, 0, 1},
                     {3, 1, 0, 2, 0},
                     {1, 4, 1, 0, 2}};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) m[i][j] = Polynomial(Rat(vals[i][j]));
  CHECK(det(m) == naive_det(m));

  // A symbolic matrix with a zero pivot on the diagonal.
  PolyMatrix s(5, std::vector<Polynomial>(5));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      s[i][j] = (i == j) ? Polynomial() : P("x").scaled(rat(i + 2 * j + 1));
  s[0][1] = P("x + y");
  s[2][3] = P("y^2 - 1");
  CHECK(det(s) == naive_det(s));
}

TEST_CASE("adjugate identity") {
  int a = intern_var("ma_a"), b = intern_var("ma_b"), c = intern_var("ma_c");
  int d = intern_var("ma_d"), e = intern_var("ma_e"), f = intern_var("ma_f");
  int g = intern_var("ma_g"), h = intern_var("ma_h"), k = intern_var("ma_k");
  PolyMatrix m = {
      {Polynomial::variable(a), Polynomial::variable(b), Polynomial::variable(c)},
      {Polynomial::variable(d), Polynomial::variable(e), Polynomial::variable(f)},
      {Polynomial::variable(g), Polynomial::variable(h), Polynomial::variable(k)}};
  PolyMatrix adj = adjugate(m);
  Polynomial dd = det(m);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Polynomial sum;
      for (int t = 0; t < 3; ++t)
        sum += adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] *
               m[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
      if (i == j)
        CHECK(sum == dd);
      else
        CHECK(sum.is_zero());
    }
  }
}

TEST_CASE("determinant of the two-by-two transient fixture") {
  int p11 = intern_var("dp11"), p22 = intern_var("dp22");
  // I - Q for Q = [[p11, 2/5], [1/10, p22]].
  PolyMatrix m = {
      {Polynomial(Rat(1)) - Polynomial::variable(p11), Polynomial(rat(-2, 5))},
      {Polynomial(rat(-1, 10)), Polynomial(Rat(1)) - Polynomial::variable(p22)}};
  Polynomial dd = det(m);
  Polynomial expect = Polynomial(rat(24, 25)) -
                      Polynomial::variable(p11) - Polynomial::variable(p22) +
                      Polynomial::variable(p11) * Polynomial::variable(p22);
  CHECK(dd == expect);
}
