#include "markovcad/markov.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "markovcad/variable.hpp"

namespace mc {

namespace {

using nlohmann::json;

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  for (char ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_')
      return false;
  return true;
}

// Parses one model entry (rational string, exact integer, or symbol name)
// at the given position path, interning symbols with the given kind.
// `roles` tracks the kinds assigned within this load so a name cannot be
// both a probability and a reward in one model.
Polynomial parse_entry(const json& j, const std::string& where, VarKind kind,
                       std::map<std::string, VarKind>& roles) {
  if (j.is_number_integer())
    return Polynomial(Rat(Int(j.dump())));
  if (j.is_number())
    throw std::invalid_argument(
        where + ": non-integer numeric literals must be rational strings");
  if (!j.is_string())
    throw std::invalid_argument(
        where + ": entry must be a rational string, integer, or identifier");
  const std::string s = j.get<std::string>();
  std::size_t fail_pos = 0;
  try {
    return Polynomial(parse_rational(s));
  } catch (const ParseError& e) {
    fail_pos = e.position();
  }
  if (!is_identifier(s))
    throw ParseError(where + ": malformed entry \"" + s + "\"", fail_pos);
  auto it = roles.find(s);
  if (it != roles.end() && it->second != kind)
    throw std::invalid_argument(where + ": symbol '" + s +
                                "' is used in conflicting roles");
  roles.emplace(s, kind);
  return Polynomial::variable(intern_var(s, kind));
}

std::vector<Polynomial> parse_vector(const json& j, const std::string& name,
                                     int n, VarKind kind,
                                     std::map<std::string, VarKind>& roles) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw std::invalid_argument("model " + name + " must be an array of " +
                                std::to_string(n) + " entries");
  std::vector<Polynomial> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(parse_entry(j[i], name + "[" + std::to_string(i) + "]",
                              kind, roles));
  return out;
}

bool numeric(const Polynomial& p) { return p.is_constant(); }

// The single variable id of a bare symbolic entry, or -1.
int bare_var(const Polynomial& p) {
  if (p.is_constant() || p.terms().size() != 1) return -1;
  const auto& [mono, coeff] = *p.terms().begin();
  if (mono.size() != 1 || mono[0].second != 1 || coeff != Rat(1)) return -1;
  return mono[0].first;
}

std::vector<int> retained_states(const MarkovModel& m) {
  std::set<int> absorbing(m.absorbing.begin(), m.absorbing.end());
  std::vector<int> out;
  for (int i = 0; i < m.n; ++i)
    if (!absorbing.count(i)) out.push_back(i);
  return out;
}

}  // namespace

MarkovModel load_model(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what(),
                     static_cast<std::size_t>(e.byte));
  }
  if (!j.is_object()) throw std::invalid_argument("model must be a JSON object");
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw std::invalid_argument("model field n must be an integer");
  MarkovModel m;
  m.n = j["n"].get<int>();
  if (m.n < 1) throw std::invalid_argument("model needs n >= 1 states");

  if (j.contains("lambda") && !j["lambda"].is_null()) {
    const json& jl = j["lambda"];
    Rat lam;
    if (jl.is_string()) {
      try {
        lam = parse_rational(jl.get<std::string>());
      } catch (const ParseError& e) {
        throw ParseError("model lambda: malformed rational", e.position());
      }
    } else {
      throw std::invalid_argument("model lambda must be a rational string or null");
    }
    if (lam <= 0 || lam >= 1)
      throw std::invalid_argument("model lambda must lie strictly in (0, 1)");
    m.lambda = lam;
  }

  std::map<std::string, VarKind> roles;

  if (!j.contains("P") || !j["P"].is_array() ||
      static_cast<int>(j["P"].size()) != m.n)
    throw std::invalid_argument("model P must be an array of " +
                                std::to_string(m.n) + " rows");
  for (int i = 0; i < m.n; ++i)
    m.P.push_back(parse_vector(j["P"][i], "P[" + std::to_string(i) + "]", m.n,
                               VarKind::Alpha, roles));

  if (j.contains("r"))
    m.r = parse_vector(j["r"], "r", m.n, VarKind::XVar, roles);
  if (j.contains("b"))
    m.b = parse_vector(j["b"], "b", m.n, VarKind::XVar, roles);
  if (j.contains("c"))
    m.c = parse_vector(j["c"], "c", m.n, VarKind::XVar, roles);
  if (m.r.empty() && (m.b.empty() || m.c.empty()))
    throw std::invalid_argument(
        "model needs a reward vector r or a benefit/cost pair b, c");
  if (m.b.empty() != m.c.empty())
    throw std::invalid_argument("model benefit and cost vectors come as a pair");

  if (!j.contains("pi"))
    throw std::invalid_argument("model needs an initial distribution pi");
  m.pi = parse_vector(j["pi"], "pi", m.n, VarKind::Alpha, roles);

  if (j.contains("absorbing")) {
    if (!j["absorbing"].is_array())
      throw std::invalid_argument("model absorbing must be an array of indices");
    for (const auto& ja : j["absorbing"]) {
      if (!ja.is_number_integer())
        throw std::invalid_argument("model absorbing indices must be integers");
      int s = ja.get<int>();
      if (s < 0 || s >= m.n)
        throw std::invalid_argument("model absorbing index " +
                                    std::to_string(s) + " is out of range");
      m.absorbing.push_back(s);
    }
    std::sort(m.absorbing.begin(), m.absorbing.end());
    m.absorbing.erase(std::unique(m.absorbing.begin(), m.absorbing.end()),
                      m.absorbing.end());
  }

  // Numeric range and row-sum validation.
  for (int i = 0; i < m.n; ++i) {
    bool all_numeric = true;
    Rat row_sum(0);
    for (int k = 0; k < m.n; ++k) {
      const Polynomial& e = m.P[i][k];
      if (!numeric(e)) {
        all_numeric = false;
        continue;
      }
      Rat v = e.constant_value();
      if (v < 0 || v > 1)
        throw std::invalid_argument("P[" + std::to_string(i) + "][" +
                                    std::to_string(k) +
                                    "]: probability outside [0, 1]");
      row_sum += v;
    }
    if (row_sum > 1)
      throw std::invalid_argument("P row " + std::to_string(i) +
                                  ": numeric entries sum beyond 1");
    if (all_numeric && m.discounted() && row_sum != 1)
      throw std::invalid_argument("P row " + std::to_string(i) +
                                  ": a numeric row must sum to 1 exactly");
  }
  {
    bool all_numeric = true;
    Rat sum(0);
    for (int i = 0; i < m.n; ++i) {
      if (!numeric(m.pi[i])) {
        all_numeric = false;
        continue;
      }
      Rat v = m.pi[i].constant_value();
      if (v < 0 || v > 1)
        throw std::invalid_argument("pi[" + std::to_string(i) +
                                    "]: probability outside [0, 1]");
      sum += v;
    }
    if (sum > 1)
      throw std::invalid_argument("pi: numeric entries sum beyond 1");
    if (all_numeric && sum != 1)
      throw std::invalid_argument("pi: a numeric distribution must sum to 1");
  }

  for (int s : m.absorbing) {
    for (int k = 0; k < m.n; ++k) {
      const Polynomial& e = m.P[s][k];
      if (!numeric(e) || e.constant_value() != Rat(k == s ? 1 : 0))
        throw std::invalid_argument("absorbing state " + std::to_string(s) +
                                    " must have a unit transition row");
    }
    for (const auto* vec : {&m.r, &m.b, &m.c}) {
      if (vec->empty()) continue;
      const Polynomial& e = (*vec)[s];
      if (!numeric(e) || e.constant_value() != 0)
        throw std::invalid_argument("absorbing state " + std::to_string(s) +
                                    " must have zero reward");
    }
  }
  if (!m.discounted() &&
      static_cast<int>(m.absorbing.size()) == m.n)
    throw std::invalid_argument(
        "transient mode needs at least one non-absorbing state");
  return m;
}

DetAdj det_adj(const PolyMatrix& m) { return DetAdj{det(m), adjugate(m)}; }

SystemMatrix system_matrix(const MarkovModel& model) {
  SystemMatrix out;
  if (model.discounted()) {
    out.states.resize(model.n);
    for (int i = 0; i < model.n; ++i) out.states[i] = i;
    Polynomial lam{*model.lambda};
    out.m.assign(model.n, std::vector<Polynomial>(model.n));
    for (int i = 0; i < model.n; ++i)
      for (int k = 0; k < model.n; ++k) {
        out.m[i][k] = -(lam * model.P[i][k]);
        if (i == k) out.m[i][k] += Polynomial(Rat(1));
      }
    return out;
  }
  out.states = retained_states(model);
  int nt = static_cast<int>(out.states.size());
  out.m.assign(nt, std::vector<Polynomial>(nt));
  for (int i = 0; i < nt; ++i) {
    bool zero_row = true;
    for (int k = 0; k < nt; ++k) {
      const Polynomial& q = model.P[out.states[i]][out.states[k]];
      if (!q.is_zero()) zero_row = false;
      out.m[i][k] = -q;
      if (i == k) out.m[i][k] += Polynomial(Rat(1));
    }
    if (zero_row)
      throw std::invalid_argument("transient state " +
                                  std::to_string(out.states[i]) +
                                  " has an identically zero Q row");
  }
  return out;
}

Polynomial finite_reward_sum(const PolyMatrix& P,
                             const std::vector<Polynomial>& pi,
                             const std::vector<Polynomial>& r,
                             const Polynomial& lambda, long t) {
  if (t < 0) throw std::invalid_argument("finite horizon must be >= 0");
  std::size_t n = P.size();
  if (pi.size() != n || r.size() != n)
    throw std::invalid_argument("finite reward: dimension mismatch");
  std::vector<Polynomial> v = r;  // Horner: v <- r + lambda P v
  for (long step = 0; step < t; ++step) {
    std::vector<Polynomial> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      Polynomial acc;
      for (std::size_t k = 0; k < n; ++k) acc += P[i][k] * v[k];
      next[i] = r[i] + lambda * acc;
    }
    v = std::move(next);
  }
  Polynomial total;
  for (std::size_t i = 0; i < n; ++i) total += pi[i] * v[i];
  return total;
}

Polynomial finite_reward_poly(const MarkovModel& model,
                              const std::vector<Polynomial>& reward, long t) {
  if (reward.empty())
    throw std::invalid_argument("query metric needs a reward vector");
  std::vector<int> states;
  if (model.discounted()) {
    states.resize(model.n);
    for (int i = 0; i < model.n; ++i) states[i] = i;
  } else {
    states = retained_states(model);
  }
  std::size_t nt = states.size();
  PolyMatrix P(nt, std::vector<Polynomial>(nt));
  std::vector<Polynomial> pi(nt), r(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    pi[i] = model.pi[states[i]];
    r[i] = reward[states[i]];
    for (std::size_t k = 0; k < nt; ++k)
      P[i][k] = model.P[states[i]][states[k]];
  }
  Polynomial lam{model.discounted() ? *model.lambda : Rat(1)};
  return finite_reward_sum(P, pi, r, lam, t);
}

Polynomial finite_reward_poly(const MarkovModel& model, long t) {
  return finite_reward_poly(model, model.r, t);
}

RewardRatio infinite_reward(const MarkovModel& model,
                            const std::vector<Polynomial>& reward) {
  if (reward.empty())
    throw std::invalid_argument("query metric needs a reward vector");
  SystemMatrix sm = system_matrix(model);
  DetAdj da = det_adj(sm.m);
  if (da.det.is_zero())
    throw std::runtime_error("system matrix is singular");
  std::size_t nt = sm.states.size();
  Polynomial num;
  for (std::size_t i = 0; i < nt; ++i) {
    Polynomial row;
    for (std::size_t k = 0; k < nt; ++k)
      row += da.adj[i][k] * reward[sm.states[k]];
    num += model.pi[sm.states[i]] * row;
  }
  return RewardRatio{num, da.det};
}

RewardRatio infinite_reward(const MarkovModel& model) {
  return infinite_reward(model, model.r);
}

Query load_query(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("query JSON: ") + e.what(),
                     static_cast<std::size_t>(e.byte));
  }
  if (!j.is_object()) throw std::invalid_argument("query must be a JSON object");
  Query q;
  if (!j.contains("metric") || !j["metric"].is_string())
    throw std::invalid_argument("query needs a metric name");
  const std::string metric = j["metric"].get<std::string>();
  if (metric == "total-reward-ge") {
    q.metric = Metric::TotalRewardGE;
  } else if (metric == "finite-reward-ge") {
    q.metric = Metric::FiniteRewardGE;
  } else if (metric == "compare-rewards") {
    q.metric = Metric::CompareRewards;
  } else if (metric == "nmb-ge") {
    q.metric = Metric::NMB_GE;
  } else if (metric == "icer-le") {
    q.metric = Metric::ICER_LE;
  } else {
    throw std::invalid_argument("unknown metric '" + metric + "'");
  }
  auto rat_field = [&](const char* name, Rat& into, bool required) {
    if (!j.contains(name)) {
      if (required)
        throw std::invalid_argument(std::string("query needs field ") + name);
      return;
    }
    if (!j[name].is_string())
      throw std::invalid_argument(std::string("query field ") + name +
                                  " must be a rational string");
    try {
      into = parse_rational(j[name].get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(std::string("query field ") + name +
                           ": malformed rational",
                       e.position());
    }
  };
  bool needs_threshold = q.metric == Metric::TotalRewardGE ||
                         q.metric == Metric::FiniteRewardGE ||
                         q.metric == Metric::NMB_GE ||
                         q.metric == Metric::ICER_LE;
  rat_field("threshold", q.threshold, needs_threshold);
  rat_field("wtp", q.wtp, q.metric == Metric::NMB_GE);
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer())
      throw std::invalid_argument("query horizon must be an integer");
    q.horizon = j["horizon"].get<long>();
  } else if (q.metric == Metric::FiniteRewardGE) {
    throw std::invalid_argument("query needs field horizon");
  }
  if (q.horizon < 0)
    throw std::invalid_argument("query horizon must be >= 0");
  if (j.contains("icer_benefit_sign")) {
    const json& js = j["icer_benefit_sign"];
    if (!js.is_string() ||
        (js.get<std::string>() != "pos" && js.get<std::string>() != "neg"))
      throw std::invalid_argument("query icer_benefit_sign must be 'pos' or 'neg'");
    q.icer_benefit_positive = js.get<std::string>() == "pos";
  }
  if (j.contains("fixed")) {
    if (!j["fixed"].is_object())
      throw std::invalid_argument("query fixed must map names to rationals");
    for (const auto& [name, jv] : j["fixed"].items()) {
      if (!jv.is_string())
        throw std::invalid_argument("query fixed." + name +
                                    " must be a rational string");
      try {
        q.fixed[name] = parse_rational(jv.get<std::string>());
      } catch (const ParseError& e) {
        throw ParseError("query fixed." + name + ": malformed rational",
                         e.position());
      }
    }
  }
  if (j.contains("ifr")) {
    if (!j["ifr"].is_boolean())
      throw std::invalid_argument("query ifr must be a boolean");
    q.ifr = j["ifr"].get<bool>();
  }
  return q;
}

namespace {

// Applies the fixed-parameter substitution to every entry of the model.
void substitute_model(MarkovModel& m, const std::map<int, Rat>& values) {
  for (auto& row : m.P)
    for (auto& e : row) e = e.substitute_rational(values);
  for (auto* vec : {&m.r, &m.b, &m.c, &m.pi})
    for (auto& e : *vec) e = e.substitute_rational(values);
}

// Registers the simplex blocks of one model: a block per transition row
// with symbolic entries, then one for a symbolic initial distribution.
void add_model_blocks(const MarkovModel& m, const std::string& tag,
                      std::vector<SimplexSpec>& blocks, int& sidx) {
  std::vector<int> states;
  if (m.discounted()) {
    states.resize(m.n);
    for (int i = 0; i < m.n; ++i) states[i] = i;
  } else {
    states = retained_states(m);
  }
  for (int i : states) {
    std::vector<std::string> names;
    Rat numeric_sum(0);
    bool fully_symbolic = true;
    for (int k = 0; k < m.n; ++k) {
      const Polynomial& e = m.P[i][k];
      if (numeric(e)) {
        fully_symbolic = false;
        numeric_sum += e.constant_value();
        continue;
      }
      bool retained_col =
          m.discounted() ||
          std::find(states.begin(), states.end(), k) != states.end();
      if (!retained_col) continue;  // symbolic leak into an absorbing state
      int v = bare_var(e);
      if (v < 0)
        throw std::invalid_argument("unsupported f* shape");
      names.push_back(var_info(v).name);
    }
    if (names.empty()) continue;
    BudgetMode mode = (m.discounted() && fully_symbolic) ? BudgetMode::Eq
                                                         : BudgetMode::Leq;
    try {
      blocks.push_back(make_simplex(names, sidx, Rat(1) - numeric_sum, mode));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("P row " + std::to_string(i) + tag + ": " +
                                  e.what());
    }
    ++sidx;
  }
  {
    std::vector<std::string> names;
    Rat numeric_sum(0);
    bool fully_symbolic = true;
    for (int i = 0; i < m.n; ++i) {
      const Polynomial& e = m.pi[i];
      if (numeric(e)) {
        fully_symbolic = false;
        numeric_sum += e.constant_value();
        continue;
      }
      bool retained_row =
          m.discounted() ||
          std::find(states.begin(), states.end(), i) != states.end();
      if (!retained_row) continue;
      int v = bare_var(e);
      if (v < 0)
        throw std::invalid_argument("unsupported f* shape");
      names.push_back(var_info(v).name);
    }
    if (!names.empty()) {
      BudgetMode mode = (m.discounted() && fully_symbolic) ? BudgetMode::Eq
                                                           : BudgetMode::Leq;
      try {
        blocks.push_back(
            make_simplex(names, sidx, Rat(1) - numeric_sum, mode));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("pi" + tag + ": " + e.what());
      }
      ++sidx;
    }
  }
}

// Symbolic reward/benefit/cost variable ids of one model in state order
// (within a state: r, then b, then c).
void collect_x_vars(const MarkovModel& m, std::vector<int>& order) {
  for (int i = 0; i < m.n; ++i)
    for (const auto* vec : {&m.r, &m.b, &m.c}) {
      if (vec->empty()) continue;
      int v = bare_var((*vec)[i]);
      if (v >= 0 && std::find(order.begin(), order.end(), v) == order.end())
        order.push_back(v);
    }
}

// True when every retained-state entry of the used reward vectors is
// symbolic; Theorem-style extensibility is asserted exactly in this case.
bool all_rewards_free(const MarkovModel& m, const Query& q) {
  std::vector<int> states;
  if (m.discounted()) {
    states.resize(m.n);
    for (int i = 0; i < m.n; ++i) states[i] = i;
  } else {
    states = retained_states(m);
  }
  std::vector<const std::vector<Polynomial>*> used;
  if (q.metric == Metric::NMB_GE || q.metric == Metric::ICER_LE) {
    used = {&m.b, &m.c};
  } else {
    used = {&m.r};
  }
  for (const auto* vec : used)
    for (int i : states)
      if (numeric((*vec)[i])) return false;
  return true;
}

}  // namespace

BuildResult build_system(const MarkovModel& a, const MarkovModel* model_b,
                         const Query& q) {
  bool needs_b =
      q.metric == Metric::CompareRewards || q.metric == Metric::ICER_LE;
  if (needs_b && model_b == nullptr)
    throw std::invalid_argument("this metric compares two models");
  if (!needs_b && model_b != nullptr)
    throw std::invalid_argument("this metric takes a single model");
  bool uses_bc = q.metric == Metric::NMB_GE || q.metric == Metric::ICER_LE;
  auto check_vectors = [&](const MarkovModel& m, const char* which) {
    if (uses_bc && (m.b.empty() || m.c.empty()))
      throw std::invalid_argument(std::string(which) +
                                  ": this metric needs benefit and cost vectors");
    if (!uses_bc && m.r.empty())
      throw std::invalid_argument(std::string(which) +
                                  ": this metric needs a reward vector");
  };
  check_vectors(a, "model");
  if (model_b) check_vectors(*model_b, "model b");

  // Resolve and apply the fixed assignment.
  std::map<int, Rat> fixed_ids;
  for (const auto& [name, value] : q.fixed) {
    int id = find_var(name);
    if (id < 0)
      throw std::invalid_argument("fixed parameter '" + name +
                                  "' names no model symbol");
    if (var_info(id).kind == VarKind::Alpha && (value < 0 || value > 1))
      throw std::invalid_argument("fixed probability '" + name +
                                  "' must lie in [0, 1]");
    fixed_ids[id] = value;
  }
  MarkovModel ma = a;
  substitute_model(ma, fixed_ids);
  MarkovModel mb_storage;
  MarkovModel* mb = nullptr;
  if (model_b) {
    mb_storage = *model_b;
    substitute_model(mb_storage, fixed_ids);
    mb = &mb_storage;
  }

  if (q.ifr) {
    if (needs_b)
      throw std::invalid_argument("IFR mode takes a single model");
    if (!ma.discounted())
      throw std::invalid_argument(
          "IFR mode needs a fully symbolic discounted transition matrix");
    for (const auto& row : ma.P)
      for (const auto& e : row)
        if (numeric(e))
          throw std::invalid_argument(
              "IFR mode needs a fully symbolic discounted transition matrix");
    for (const auto& e : ma.pi)
      if (!numeric(e))
        throw std::invalid_argument(
            "IFR mode needs a numeric initial distribution");
  }

  BuildResult out;
  Polynomial fstar;
  Polynomial T{q.threshold};
  switch (q.metric) {
    case Metric::TotalRewardGE: {
      RewardRatio rr = infinite_reward(ma);
      fstar = rr.num - T * rr.den;
      break;
    }
    case Metric::FiniteRewardGE: {
      fstar = finite_reward_poly(ma, q.horizon) - T;
      break;
    }
    case Metric::CompareRewards: {
      RewardRatio ra = infinite_reward(ma);
      RewardRatio rb = infinite_reward(*mb);
      fstar = ra.num * rb.den - rb.num * ra.den;
      break;
    }
    case Metric::NMB_GE: {
      std::vector<Polynomial> rw(ma.n);
      Polynomial W{q.wtp};
      for (int i = 0; i < ma.n; ++i) rw[i] = W * ma.b[i] - ma.c[i];
      RewardRatio rr = infinite_reward(ma, rw);
      fstar = rr.num - T * rr.den;
      out.notes.push_back("net benefit encoded with willingness-to-pay " +
                          rat_str(q.wtp));
      break;
    }
    case Metric::ICER_LE: {
      RewardRatio ba = infinite_reward(ma, ma.b);
      RewardRatio ca = infinite_reward(ma, ma.c);
      RewardRatio bb = infinite_reward(*mb, mb->b);
      RewardRatio cb = infinite_reward(*mb, mb->c);
      // ba.den == ca.den and bb.den == cb.den (same system matrix).
      Polynomial delta_b = ba.num * bb.den - bb.num * ba.den;
      Polynomial delta_c = ca.num * cb.den - cb.num * ca.den;
      fstar = q.icer_benefit_positive ? T * delta_b - delta_c
                                      : delta_c - T * delta_b;
      out.notes.push_back(
          std::string("icer orientation: incremental benefit asserted ") +
          (q.icer_benefit_positive ? "positive" : "negative") + " by caller");
      break;
    }
  }

  std::vector<SimplexSpec> blocks;
  int sidx = 0;
  add_model_blocks(ma, "", blocks, sidx);
  if (mb) add_model_blocks(*mb, " (model b)", blocks, sidx);

  std::vector<int> x_order;
  collect_x_vars(ma, x_order);
  if (mb) collect_x_vars(*mb, x_order);

  std::vector<XTerm> terms;
  Polynomial g0 = fstar;
  for (int v : x_order) {
    if (!fstar.depends_on(v)) continue;
    if (fstar.degree_in(v) > 1)
      throw std::invalid_argument("unsupported f* shape");
    Polynomial g = fstar.coeff_of(v, 1);
    for (int w : g.variables())
      if (var_info(w).kind != VarKind::Alpha)
        throw std::invalid_argument("unsupported f* shape");
    terms.push_back(XTerm{v, UPoly{}, g, true});
    g0 -= Polynomial::variable(v) * g;
  }
  for (int w : g0.variables())
    if (var_info(w).kind != VarKind::Alpha)
      throw std::invalid_argument("unsupported f* shape");

  std::set<int> block_vars;
  for (const auto& s : blocks) block_vars.insert(s.vars.begin(), s.vars.end());
  for (int w : fstar.variables())
    if (var_info(w).kind == VarKind::Alpha && !block_vars.count(w))
      throw std::invalid_argument("free parameter '" + var_info(w).name +
                                  "' belongs to no simplex block");

  out.system = make_system(g0, std::move(terms), std::move(blocks), q.ifr);
  out.system.validate();

  // For queries leaving every used reward entry symbolic, the structured
  // system is sign-invariance checkable with exact certificates; assert it.
  bool assert_scope = !out.system.terms.empty() && all_rewards_free(ma, q) &&
                      (!mb || all_rewards_free(*mb, q));
  if (assert_scope) {
    ExtensibilityReport rep = check_simplex_extensible(out.system);
    if (!rep.extensible)
      throw std::logic_error(
          "internal error: free-reward query produced a system that is not "
          "simplex-extensible");
    out.notes.push_back(std::string("extensibility asserted (") +
                        (rep.probabilistic ? "probabilistic" : "exact") + ")");
  }
  return out;
}

TwoWay classify_two_way(const SystemM& sys, int u, int v,
                        const std::map<int, Rat>& others) {
  if (u == v) throw std::invalid_argument("two-way pair must be distinct");
  std::map<int, Rat> fix;
  for (int w : sys.fstar.variables()) {
    if (w == u || w == v) continue;
    auto it = others.find(w);
    if (it == others.end())
      throw std::invalid_argument("two-way restriction is missing a value for '" +
                                  var_info(w).name + "'");
    fix[w] = it->second;
  }
  TwoWay out;
  out.restricted = sys.fstar.substitute_rational(fix);

  if (var_info(u).kind == VarKind::Alpha && var_info(v).kind == VarKind::Alpha) {
    for (const auto& s : sys.simplices) {
      bool has_u = std::find(s.vars.begin(), s.vars.end(), u) != s.vars.end();
      bool has_v = std::find(s.vars.begin(), s.vars.end(), v) != s.vars.end();
      if (has_u && has_v) {
        out.cls = TwoWayClass::LineSegment;
        out.label = "line segment (shared simplex block)";
        return out;
      }
    }
  }

  bool du = out.restricted.depends_on(u);
  bool dv = out.restricted.depends_on(v);
  if (!du && !dv) {
    out.cls = TwoWayClass::Degenerate;
    out.label = "degenerate: f* constant in pair";
    return out;
  }
  if (du != dv) {
    out.cls = TwoWayClass::UnivariateReduction;
    out.label = "univariate reduction (only '" +
                var_info(du ? u : v).name + "' appears)";
    return out;
  }
  if (out.restricted.degree_in(u) > 1 || out.restricted.degree_in(v) > 1)
    throw std::invalid_argument(
        "two-way geometry needs a restriction of degree <= 1 in each free "
        "parameter");
  if (out.restricted.coeff_of(u, 1).depends_on(v)) {
    out.cls = TwoWayClass::HyperbolaSide;
    out.label = "one side of a hyperbola";
  } else {
    out.cls = TwoWayClass::HalfPlane;
    out.label = "half-plane";
  }
  return out;
}

BoundaryCurve boundary_curve(const Polynomial& fstar, int u, int v,
                             const std::map<int, Rat>& others,
                             const Rat& u_lo, const Rat& u_hi, int samples,
                             const Rat& v_lo,
                             const std::optional<Rat>& v_hi) {
  if (samples < 2)
    throw std::invalid_argument("boundary curve needs at least 2 samples");
  if (u_lo > u_hi)
    throw std::invalid_argument("boundary curve needs u_lo <= u_hi");
  std::map<int, Rat> fix;
  for (int w : fstar.variables()) {
    if (w == u || w == v) continue;
    auto it = others.find(w);
    if (it == others.end())
      throw std::invalid_argument("boundary curve is missing a value for '" +
                                  var_info(w).name + "'");
    fix[w] = it->second;
  }
  Polynomial restricted = fstar.substitute_rational(fix);
  if (restricted.degree_in(v) != 1)
    throw std::invalid_argument("boundary curve needs f* linear in '" +
                                var_info(v).name + "'");
  Polynomial A = restricted.coeff_of(v, 1);
  Polynomial B = restricted.coeff_of(v, 0);

  BoundaryCurve out;
  {
    std::ostringstream os;
    os << var_name(v) << " = ";
    Polynomial neg_b = -B;
    if (A.is_constant()) {
      os << poly_str(neg_b.scaled(Rat(1) / A.constant_value()),
                     RenderOrder::AscendingConstFirst);
    } else {
      os << "(" << poly_str(neg_b, RenderOrder::AscendingConstFirst) << ")/("
         << poly_str(A, RenderOrder::AscendingConstFirst) << ")";
    }
    out.closed_form = os.str();
  }

  Rat span = u_hi - u_lo;
  for (int k = 0; k < samples; ++k) {
    BoundaryPoint pt;
    pt.u = u_lo + Rat(k) * span / Rat(samples - 1);
    std::map<int, Rat> at{{u, pt.u}};
    Rat av = A.substitute_rational(at).constant_value();
    Rat bv = B.substitute_rational(at).constant_value();
    if (av == 0) {
      pt.solved = false;
      pt.note = bv == 0 ? "f* vanishes identically at this abscissa"
                        : "vanishing linear coefficient; no boundary point";
    } else {
      pt.solved = true;
      pt.v = -bv / av;
      pt.in_domain = pt.v >= v_lo && (!v_hi || pt.v <= *v_hi);
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace mc
