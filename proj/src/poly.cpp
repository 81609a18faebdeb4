#include "markovcad/poly.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "markovcad/variable.hpp"

namespace mc {

int mono_degree(const Mono& m) {
  int d = 0;
  for (const auto& [id, e] : m) d += e;
  return d;
}

bool MonoLess::operator()(const Mono& a, const Mono& b) const {
  int da = mono_degree(a), db = mono_degree(b);
  if (da != db) return da < db;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia].first == b[ib].first) {
      if (a[ia].second != b[ib].second) return a[ia].second < b[ib].second;
      ++ia;
      ++ib;
    } else if (a[ia].first < b[ib].first) {
      return false;  // a has a positive exponent where b has zero
    } else {
      return true;
    }
  }
  return ia == a.size() && ib < b.size();
}

Polynomial::Polynomial(Rat c) {
  if (c != 0) terms_.emplace(Mono{}, std::move(c));
}

Polynomial Polynomial::variable(int id) {
  Polynomial p;
  p.terms_.emplace(Mono{{id, 1}}, Rat(1));
  return p;
}

Polynomial Polynomial::term(Rat c, Mono m) {
  Polynomial p;
  p.add_term(m, c);
  return p;
}

void Polynomial::add_term(const Mono& m, const Rat& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Rat Polynomial::constant_value() const {
  if (terms_.empty()) return Rat(0);
  if (!is_constant())
    throw std::invalid_argument("polynomial is not constant");
  return terms_.begin()->second;
}

int Polynomial::total_degree() const {
  if (terms_.empty()) return -1;
  return mono_degree(terms_.rbegin()->first);
}

int Polynomial::degree_in(int var) const {
  if (terms_.empty()) return -1;
  int d = 0;
  for (const auto& [m, c] : terms_)
    for (const auto& [id, e] : m)
      if (id == var) d = std::max(d, e);
  return d;
}

std::vector<int> Polynomial::variables() const {
  std::set<int> ids;
  for (const auto& [m, c] : terms_)
    for (const auto& [id, e] : m) ids.insert(id);
  return std::vector<int>(ids.begin(), ids.end());
}

bool Polynomial::depends_on(int var) const {
  for (const auto& [m, c] : terms_)
    for (const auto& [id, e] : m)
      if (id == var) return true;
  return false;
}

Polynomial Polynomial::operator-() const {
  Polynomial r;
  for (const auto& [m, c] : terms_) r.terms_.emplace(m, Rat(-c));
  return r;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  r -= o;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, Rat(-c));
  return *this;
}

namespace {

Mono mono_mul(const Mono& a, const Mono& b) {
  Mono r;
  r.reserve(a.size() + b.size());
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    if (ib == b.size() || (ia < a.size() && a[ia].first < b[ib].first)) {
      r.push_back(a[ia++]);
    } else if (ia == a.size() || b[ib].first < a[ia].first) {
      r.push_back(b[ib++]);
    } else {
      r.emplace_back(a[ia].first, a[ia].second + b[ib].second);
      ++ia;
      ++ib;
    }
  }
  return r;
}

}  // namespace

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) r.add_term(mono_mul(ma, mb), ca * cb);
  return r;
}

Polynomial Polynomial::scaled(const Rat& c) const {
  Polynomial r;
  if (c == 0) return r;
  for (const auto& [m, co] : terms_) r.terms_.emplace(m, Rat(co * c));
  return r;
}

Polynomial Polynomial::pow(unsigned e) const {
  Polynomial r(Rat(1));
  Polynomial base = *this;
  while (e > 0) {
    if (e & 1u) r = r * base;
    base = base * base;
    e >>= 1u;
  }
  return r;
}

Polynomial Polynomial::coeff_of(int var, int k) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    int e = 0;
    Mono rest;
    rest.reserve(m.size());
    for (const auto& [id, ex] : m) {
      if (id == var)
        e = ex;
      else
        rest.push_back({id, ex});
    }
    if (e == k) r.add_term(rest, c);
  }
  return r;
}

std::vector<Polynomial> Polynomial::coeffs_in(int var) const {
  int d = std::max(degree_in(var), 0);
  std::vector<Polynomial> out(static_cast<std::size_t>(d) + 1);
  for (const auto& [m, c] : terms_) {
    int e = 0;
    Mono rest;
    rest.reserve(m.size());
    for (const auto& [id, ex] : m) {
      if (id == var)
        e = ex;
      else
        rest.push_back({id, ex});
    }
    out[static_cast<std::size_t>(e)].add_term(rest, c);
  }
  return out;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i].first != var) continue;
      Mono dm = m;
      Rat dc = c * m[i].second;
      if (dm[i].second == 1)
        dm.erase(dm.begin() + static_cast<std::ptrdiff_t>(i));
      else
        dm[i].second -= 1;
      r.add_term(dm, dc);
      break;
    }
  }
  return r;
}

Polynomial Polynomial::substitute(const std::map<int, Polynomial>& values) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    Polynomial t(c);
    for (const auto& [id, e] : m) {
      auto it = values.find(id);
      if (it != values.end())
        t = t * it->second.pow(static_cast<unsigned>(e));
      else
        t = t * Polynomial::variable(id).pow(static_cast<unsigned>(e));
    }
    r += t;
  }
  return r;
}

Polynomial Polynomial::substitute_rational(const std::map<int, Rat>& values) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    Rat coef = c;
    Mono rest;
    rest.reserve(m.size());
    for (const auto& [id, e] : m) {
      auto it = values.find(id);
      if (it != values.end())
        coef *= rat_pow(it->second, static_cast<unsigned long>(e));
      else
        rest.push_back({id, e});
    }
    r.add_term(rest, coef);
  }
  return r;
}

Rat Polynomial::eval(const std::map<int, Rat>& values) const {
  Rat acc(0);
  for (const auto& [m, c] : terms_) {
    Rat t = c;
    for (const auto& [id, e] : m) {
      auto it = values.find(id);
      if (it == values.end())
        throw std::invalid_argument("missing value for variable " +
                                    var_info(id).name);
      t *= rat_pow(it->second, static_cast<unsigned long>(e));
    }
    acc += t;
  }
  return acc;
}

UPoly Polynomial::to_upoly(int var) const {
  std::vector<Rat> coeffs(static_cast<std::size_t>(std::max(degree_in(var), 0)) + 1,
                          Rat(0));
  for (const auto& [m, c] : terms_) {
    int e = 0;
    for (const auto& [id, ex] : m) {
      if (id == var) {
        e = ex;
      } else {
        throw std::invalid_argument("polynomial is not univariate in " +
                                    var_info(var).name);
      }
    }
    coeffs[static_cast<std::size_t>(e)] = c;
  }
  return UPoly(std::move(coeffs));
}

Polynomial Polynomial::from_upoly(const UPoly& p, int var) {
  Polynomial r;
  for (int i = 0; i <= p.degree(); ++i) {
    if (p.coeff(i) == 0) continue;
    if (i == 0)
      r.add_term(Mono{}, p.coeff(i));
    else
      r.add_term(Mono{{var, i}}, p.coeff(i));
  }
  return r;
}

Polynomial Polynomial::primitive_positive() const {
  if (terms_.empty()) return Polynomial();
  Int den_lcm(1), num_gcd(0);
  for (const auto& [m, c] : terms_) {
    mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), c.get_den().get_mpz_t());
    mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), c.get_num().get_mpz_t());
  }
  Rat scale(den_lcm, num_gcd);
  scale.canonicalize();
  if (terms_.rbegin()->second * scale < 0) scale = -scale;
  return scaled(scale);
}

Polynomial leading_coeff(const Polynomial& p, int var) {
  if (p.is_zero())
    throw std::invalid_argument(
        "leading coefficient of the zero polynomial is undefined");
  return p.coeff_of(var, p.degree_in(var));
}

Polynomial leading_term(const Polynomial& p, int var) {
  int d = p.degree_in(var);
  if (d <= 0) return p;
  return leading_coeff(p, var) *
         Polynomial::variable(var).pow(static_cast<unsigned>(d));
}

Polynomial reductum(const Polynomial& p, int var) {
  if (p.is_zero()) return p;
  int d = p.degree_in(var);
  Polynomial lead = p.coeff_of(var, d);
  Polynomial lt = d == 0 ? lead : lead * Polynomial::variable(var).pow(
                                             static_cast<unsigned>(d));
  return p - lt;
}

std::vector<std::pair<int, Polynomial>> univariate_view(const Polynomial& p,
                                                        int var) {
  std::vector<std::pair<int, Polynomial>> out;
  if (p.is_zero()) return out;
  for (int e = p.degree_in(var); e >= 0; --e) {
    Polynomial c = p.coeff_of(var, e);
    if (!c.is_zero()) out.emplace_back(e, std::move(c));
  }
  return out;
}

std::vector<Polynomial> reducta_set(const Polynomial& p, int var) {
  std::vector<Polynomial> out;
  Polynomial r = p;
  while (!r.is_zero()) {
    out.push_back(r);
    r = reductum(r, var);
  }
  return out;
}

bool is_scalar_multiple(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return false;
  const auto& ta = a.terms();
  const auto& tb = b.terms();
  if (ta.size() != tb.size()) return false;
  Rat ratio = ta.begin()->second / tb.begin()->second;
  auto ia = ta.begin();
  auto ib = tb.begin();
  for (; ia != ta.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second != ratio * ib->second) return false;
  }
  return true;
}

namespace {

std::string mono_str(const Mono& m) {
  std::string out;
  for (const auto& [id, e] : m) {
    if (!out.empty()) out += "*";
    out += var_name(id);
    if (e > 1) out += "^" + std::to_string(e);
  }
  return out;
}

void append_term(std::string& out, const Mono& m, const Rat& c, bool first) {
  bool neg = c < 0;
  Rat mag = rat_abs(c);
  if (first) {
    if (neg) out += "-";
  } else {
    out += neg ? " - " : " + ";
  }
  if (m.empty()) {
    out += rat_str(mag);
  } else if (mag == 1) {
    out += mono_str(m);
  } else {
    out += rat_str(mag) + "*" + mono_str(m);
  }
}

}  // namespace

std::string poly_str(const Polynomial& p, RenderOrder order) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  if (order == RenderOrder::Descending) {
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
      append_term(out, it->first, it->second, first);
      first = false;
    }
  } else {
    // Degrees ascending (constant first); within a degree, terms whose
    // leading variable comes earlier are printed first.
    std::map<int, std::vector<const Polynomial::TermMap::value_type*>> buckets;
    for (const auto& t : p.terms()) buckets[mono_degree(t.first)].push_back(&t);
    for (const auto& [d, bucket] : buckets) {
      for (auto it = bucket.rbegin(); it != bucket.rend(); ++it) {
        append_term(out, (*it)->first, (*it)->second, first);
        first = false;
      }
    }
  }
  return out;
}

// --- parser ---------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(const std::string& text,
         const std::function<int(const std::string&)>& resolve)
      : s_(text), resolve_(resolve) {}

  Polynomial parse() {
    Polynomial p = parse_expr();
    skip_ws();
    if (pos_ != s_.size())
      throw ParseError("unexpected character '" + std::string(1, s_[pos_]) +
                           "' at position " + std::to_string(pos_),
                       pos_);
    return p;
  }

 private:
  const std::string& s_;
  const std::function<int(const std::string&)>& resolve_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(what + " at position " + std::to_string(pos_), pos_);
  }

  Polynomial parse_expr() {
    bool neg = false;
    skip_ws();
    if (consume('-'))
      neg = true;
    else
      consume('+');
    Polynomial acc = parse_term();
    if (neg) acc = -acc;
    for (;;) {
      skip_ws();
      if (consume('+'))
        acc += parse_term();
      else if (consume('-'))
        acc -= parse_term();
      else
        return acc;
    }
  }

  Polynomial parse_term() {
    Polynomial acc = parse_factor();
    while (consume('*')) acc = acc * parse_factor();
    return acc;
  }

  Polynomial parse_factor() {
    Polynomial base = parse_base();
    if (consume('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      if (pos_ == start) fail("expected exponent");
      unsigned long e = std::stoul(s_.substr(start, pos_ - start));
      return base.pow(static_cast<unsigned>(e));
    }
    return base;
  }

  Polynomial parse_base() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = parse_expr();
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    if (c == '-') {
      ++pos_;
      return -parse_factor();
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_name();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Polynomial parse_number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           std::isdigit(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      std::size_t frac = pos_;
      while (pos_ < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      if (pos_ == frac) fail("expected digits after decimal point");
    } else if (pos_ < s_.size() && s_[pos_] == '/') {
      std::size_t save = pos_;
      ++pos_;
      std::size_t den = pos_;
      while (pos_ < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      if (pos_ == den) {
        pos_ = save;  // not a rational literal; leave '/' for the caller
      } else if (std::stoul(s_.substr(den, pos_ - den)) == 0 &&
                 s_.substr(den, pos_ - den).find_first_not_of('0') ==
                     std::string::npos) {
        fail("zero denominator");
      }
    }
    return Polynomial(parse_rational(s_.substr(start, pos_ - start)));
  }

  Polynomial parse_name() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    int id;
    if (resolve_) {
      id = resolve_(name);
      if (id < 0)
        throw ParseError("unknown symbol \"" + name + "\" at position " +
                             std::to_string(start),
                         start);
    } else {
      id = intern_var(name);
    }
    return Polynomial::variable(id);
  }
};

}  // namespace

Polynomial parse_polynomial(
    const std::string& text,
    const std::function<int(const std::string&)>& resolve) {
  return Parser(text, resolve).parse();
}

// --- matrices -------------------------------------------------------------

Polynomial divide_exact(const Polynomial& a, const Polynomial& b) {
  if (b.is_zero()) throw std::runtime_error("division by the zero polynomial");
  Polynomial rem = a, quot;
  const auto& bl = *b.terms().rbegin();
  while (!rem.is_zero()) {
    const auto& rl = *rem.terms().rbegin();
    // Divide the leading monomials.
    Mono q;
    std::size_t ib = 0;
    bool ok = true;
    for (const auto& [id, e] : rl.first) {
      while (ib < bl.first.size() && bl.first[ib].first < id) {
        ok = false;  // divisor has a variable the dividend's term lacks
        break;
      }
      if (!ok) break;
      if (ib < bl.first.size() && bl.first[ib].first == id) {
        if (bl.first[ib].second > e) {
          ok = false;
          break;
        }
        if (e > bl.first[ib].second) q.push_back({id, e - bl.first[ib].second});
        ++ib;
      } else {
        q.push_back({id, e});
      }
    }
    if (ib < bl.first.size()) ok = false;
    if (!ok) throw std::runtime_error("inexact polynomial division");
    Polynomial t = Polynomial::term(rl.second / bl.second, q);
    quot += t;
    rem -= t * b;
  }
  return quot;
}

namespace {

Polynomial det_cofactor(const PolyMatrix& m) {
  std::size_t n = m.size();
  if (n == 0) return Polynomial(Rat(1));
  if (n == 1) return m[0][0];
  Polynomial acc;
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    PolyMatrix minor;
    minor.reserve(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<Polynomial> row;
      row.reserve(n - 1);
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) row.push_back(m[i][k]);
      minor.push_back(std::move(row));
    }
    Polynomial term = m[0][j] * det_cofactor(minor);
    if (j % 2 == 0)
      acc += term;
    else
      acc -= term;
  }
  return acc;
}

Polynomial det_bareiss(PolyMatrix m) {
  std::size_t n = m.size();
  int sign = 1;
  Polynomial prev(Rat(1));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k].is_zero()) {
      std::size_t swap_row = k + 1;
      while (swap_row < n && m[swap_row][k].is_zero()) ++swap_row;
      if (swap_row == n) return Polynomial();  // singular
      std::swap(m[k], m[swap_row]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        Polynomial num = m[i][j] * m[k][k] - m[i][k] * m[k][j];
        m[i][j] = divide_exact(num, prev);
      }
      m[i][k] = Polynomial();
    }
    prev = m[k][k];
  }
  Polynomial d = m[n - 1][n - 1];
  return sign < 0 ? -d : d;
}

}  // namespace

Polynomial det(const PolyMatrix& m) {
  for (const auto& row : m)
    if (row.size() != m.size())
      throw std::invalid_argument("determinant of a non-square matrix");
  if (m.size() <= 4) return det_cofactor(m);
  return det_bareiss(m);
}

PolyMatrix adjugate(const PolyMatrix& m) {
  std::size_t n = m.size();
  for (const auto& row : m)
    if (row.size() != n)
      throw std::invalid_argument("adjugate of a non-square matrix");
  PolyMatrix adj(n, std::vector<Polynomial>(n));
  if (n == 0) return adj;
  if (n == 1) {
    adj[0][0] = Polynomial(Rat(1));
    return adj;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      PolyMatrix minor;
      minor.reserve(n - 1);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        std::vector<Polynomial> row;
        row.reserve(n - 1);
        for (std::size_t c = 0; c < n; ++c)
          if (c != j) row.push_back(m[r][c]);
        minor.push_back(std::move(row));
      }
      Polynomial cof = det_cofactor(minor);
      if ((i + j) % 2 == 1) cof = -cof;
      adj[j][i] = cof;  // transpose
    }
  }
  return adj;
}

}  // namespace mc
