#include "markovcad/upoly.hpp"

#include <algorithm>
#include <stdexcept>

namespace mc {

namespace {
const Rat kZero(0);
}

UPoly::UPoly(Rat constant) {
  if (constant != 0) c_.push_back(std::move(constant));
}

UPoly::UPoly(std::vector<Rat> ascending) : c_(std::move(ascending)) { trim(); }

UPoly UPoly::x() { return monomial(Rat(1), 1); }

UPoly UPoly::monomial(Rat c, int exp) {
  UPoly p;
  if (c != 0) {
    p.c_.assign(static_cast<std::size_t>(exp) + 1, Rat(0));
    p.c_[static_cast<std::size_t>(exp)] = std::move(c);
  }
  return p;
}

void UPoly::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

const Rat& UPoly::coeff(int exp) const {
  if (exp < 0 || exp >= static_cast<int>(c_.size())) return kZero;
  return c_[static_cast<std::size_t>(exp)];
}

const Rat& UPoly::lead() const {
  if (c_.empty())
    throw std::invalid_argument(
        "leading coefficient of the zero polynomial is undefined");
  return c_.back();
}

Rat UPoly::eval(const Rat& x) const {
  Rat acc(0);
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::pair<Rat, Rat> UPoly::eval_interval(const Rat& lo, const Rat& hi) const {
  Rat alo(0), ahi(0);
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
    // [alo,ahi] * [lo,hi] + coefficient
    Rat p1 = alo * lo, p2 = alo * hi, p3 = ahi * lo, p4 = ahi * hi;
    Rat mlo = std::min(std::min(p1, p2), std::min(p3, p4));
    Rat mhi = std::max(std::max(p1, p2), std::max(p3, p4));
    alo = mlo + *it;
    ahi = mhi + *it;
  }
  return {alo, ahi};
}

UPoly UPoly::operator-() const {
  UPoly r = *this;
  for (auto& c : r.c_) c = -c;
  return r;
}

UPoly UPoly::operator+(const UPoly& o) const {
  UPoly r;
  r.c_.resize(std::max(c_.size(), o.c_.size()), Rat(0));
  for (std::size_t i = 0; i < r.c_.size(); ++i) {
    if (i < c_.size()) r.c_[i] += c_[i];
    if (i < o.c_.size()) r.c_[i] += o.c_[i];
  }
  r.trim();
  return r;
}

UPoly UPoly::operator-(const UPoly& o) const { return *this + (-o); }

UPoly UPoly::operator*(const UPoly& o) const {
  if (is_zero() || o.is_zero()) return UPoly();
  UPoly r;
  r.c_.assign(c_.size() + o.c_.size() - 1, Rat(0));
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < o.c_.size(); ++j) r.c_[i + j] += c_[i] * o.c_[j];
  r.trim();
  return r;
}

UPoly UPoly::scaled(const Rat& k) const {
  if (k == 0) return UPoly();
  UPoly r = *this;
  for (auto& c : r.c_) c *= k;
  return r;
}

UPoly UPoly::derivative() const {
  UPoly r;
  if (c_.size() <= 1) return r;
  r.c_.resize(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i)
    r.c_[i - 1] = c_[i] * Rat(static_cast<long>(i));
  r.trim();
  return r;
}

UPoly UPoly::pow(unsigned e) const {
  UPoly acc(Rat(1));
  UPoly b = *this;
  while (e > 0) {
    if (e & 1U) acc = acc * b;
    b = b * b;
    e >>= 1U;
  }
  return acc;
}

std::pair<UPoly, UPoly> UPoly::divmod(const UPoly& n, const UPoly& d) {
  if (d.is_zero()) throw std::invalid_argument("division by zero polynomial");
  UPoly q, r = n;
  const int dd = d.degree();
  const Rat& dl = d.lead();
  while (!r.is_zero() && r.degree() >= dd) {
    const int shift = r.degree() - dd;
    Rat f = r.lead() / dl;
    // r -= f * x^shift * d
    for (int i = 0; i <= dd; ++i)
      r.c_[static_cast<std::size_t>(i + shift)] -=
          f * d.c_[static_cast<std::size_t>(i)];
    r.trim();
    if (q.c_.size() < static_cast<std::size_t>(shift) + 1)
      q.c_.resize(static_cast<std::size_t>(shift) + 1, Rat(0));
    q.c_[static_cast<std::size_t>(shift)] += f;
  }
  q.trim();
  return {q, r};
}

UPoly UPoly::gcd_monic(UPoly a, UPoly b) {
  while (!b.is_zero()) {
    UPoly r = divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (a.is_zero()) return a;
  return a.scaled(Rat(1) / a.lead());  // monic
}

UPoly UPoly::square_free_part() const {
  if (is_zero()) return UPoly();
  if (degree() == 0) return UPoly(Rat(1)).primitive();
  UPoly g = gcd_monic(*this, derivative());
  UPoly sf = divmod(*this, g).first;
  return sf.primitive();
}

UPoly UPoly::primitive() const {
  if (is_zero()) return UPoly();
  // lcm of denominators
  Int den(1);
  for (const auto& c : c_) den = lcm(den, c.get_den());
  Int g(0);
  for (const auto& c : c_) {
    Int num = c.get_num() * (den / c.get_den());
    g = gcd(g, num);
  }
  if (g == 0) g = 1;
  Rat scale(den, g);
  scale.canonicalize();
  UPoly r = scaled(scale);
  if (r.lead() < 0) r = r.scaled(Rat(-1));
  return r;
}

Rat UPoly::root_bound() const {
  if (degree() <= 0) return Rat(1);
  Rat m(0);
  for (int i = 0; i < degree(); ++i) m = std::max(m, rat_abs(coeff(i)));
  return Rat(1) + m / rat_abs(lead());
}

std::string UPoly::str(const std::string& var) const {
  if (is_zero()) return "0";
  std::string out;
  for (int e = degree(); e >= 0; --e) {
    const Rat& c = coeff(e);
    if (c == 0) continue;
    Rat a = rat_abs(c);
    if (out.empty()) {
      if (c < 0) out += "-";
    } else {
      out += (c < 0) ? " - " : " + ";
    }
    const bool unit = (a == 1);
    if (e == 0) {
      out += rat_str(a);
    } else {
      if (!unit) out += rat_str(a) + "*";
      out += var;
      if (e > 1) out += "^" + std::to_string(e);
    }
  }
  return out;
}

}  // namespace mc
