#include "markovcad/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "markovcad/cad.hpp"
#include "markovcad/variable.hpp"

namespace mc {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// One-line machine-readable diagnostic; the return value is the exit code.
int fail(std::ostream& err, int code, const std::string& message) {
  json e{{"error", {{"code", code}, {"message", message}}}};
  err << e.dump() << "\n";
  return code;
}

void emit_text(std::ostream& out, const std::string& s) {
  out << s;
  if (s.empty() || s.back() != '\n') out << "\n";
}

Rat entry_to_rat(const json& j, const std::string& where) {
  if (j.is_number_integer())
    return Rat(Int(j.dump()));
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw std::invalid_argument(where + " must be a rational string");
}

// Parses a polynomial whose identifiers must all come from the given local
// name table (so a structured-system file cannot silently pick up symbols
// from elsewhere in the process).
Polynomial parse_local_poly(const std::string& text,
                            const std::map<std::string, int>& names,
                            const std::string& where) {
  return parse_polynomial(text, [&](const std::string& name) {
    auto it = names.find(name);
    if (it == names.end())
      throw std::invalid_argument(where + ": unknown parameter '" + name +
                                  "'");
    return it->second;
  });
}

}  // namespace

SystemM load_system(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("system JSON: ") + e.what(),
                     static_cast<std::size_t>(e.byte));
  }
  if (!j.is_object())
    throw std::invalid_argument("system must be a JSON object");

  std::map<std::string, int> names;
  std::vector<SimplexSpec> specs;
  if (j.contains("simplices")) {
    if (!j["simplices"].is_array())
      throw std::invalid_argument("system simplices must be an array");
    int index = 0;
    for (const auto& sj : j["simplices"]) {
      if (!sj.is_object() || !sj.contains("vars") || !sj["vars"].is_array())
        throw std::invalid_argument("each simplex needs a vars array");
      std::vector<std::string> vars;
      for (const auto& nv : sj["vars"]) {
        if (!nv.is_string())
          throw std::invalid_argument("simplex vars must be identifiers");
        vars.push_back(nv.get<std::string>());
      }
      Rat kappa =
          sj.contains("kappa")
              ? entry_to_rat(sj["kappa"],
                             "simplex " + std::to_string(index) + " kappa")
              : Rat(1);
      BudgetMode mode = BudgetMode::Eq;
      if (sj.contains("mode")) {
        std::string m = sj["mode"].get<std::string>();
        if (m == "eq")
          mode = BudgetMode::Eq;
        else if (m == "leq")
          mode = BudgetMode::Leq;
        else
          throw std::invalid_argument("simplex mode must be 'eq' or 'leq'");
      }
      specs.push_back(make_simplex(vars, index, kappa, mode));
      for (std::size_t p = 0; p < vars.size(); ++p)
        names[vars[p]] = specs.back().vars[p];
      ++index;
    }
  }

  std::vector<XTerm> terms;
  if (j.contains("terms")) {
    if (!j["terms"].is_array())
      throw std::invalid_argument("system terms must be an array");
    for (const auto& tj : j["terms"]) {
      if (!tj.is_object() || !tj.contains("var") || !tj["var"].is_string())
        throw std::invalid_argument("each term needs a var identifier");
      XTerm t;
      std::string vn = tj["var"].get<std::string>();
      t.var = intern_var(vn, VarKind::XVar);
      names[vn] = t.var;
      if (tj.contains("f") && !tj["f"].is_null()) {
        if (!tj["f"].is_array())
          throw std::invalid_argument(
              "term shape f must be an ascending coefficient array");
        std::vector<Rat> coeffs;
        for (const auto& cj : tj["f"])
          coeffs.push_back(entry_to_rat(cj, "term '" + vn + "' shape"));
        t.f = UPoly(std::move(coeffs));
      }
      if (!tj.contains("g") || !tj["g"].is_string())
        throw std::invalid_argument("term '" + vn +
                                    "' needs a coefficient polynomial g");
      t.g = parse_local_poly(tj["g"].get<std::string>(), names,
                             "term '" + vn + "' g");
      if (tj.contains("nonneg")) t.nonneg = tj["nonneg"].get<bool>();
      terms.push_back(std::move(t));
    }
  }

  Polynomial g0;
  if (j.contains("g0")) {
    if (!j["g0"].is_string())
      throw std::invalid_argument("system g0 must be a polynomial string");
    g0 = parse_local_poly(j["g0"].get<std::string>(), names, "g0");
  }
  bool ifr = j.contains("ifr") && j["ifr"].get<bool>();

  SystemM sys = make_system(std::move(g0), std::move(terms), std::move(specs),
                            ifr);
  if (j.contains("fstar")) {
    if (!j["fstar"].is_string())
      throw std::invalid_argument("system fstar must be a polynomial string");
    Polynomial declared =
        parse_local_poly(j["fstar"].get<std::string>(), names, "fstar");
    if (!(declared == sys.fstar))
      throw std::invalid_argument(
          "declared fstar does not match g0 + sum f_i(x_i) g_i");
  }
  sys.validate();
  return sys;
}

GridTable grid_compare(const Polynomial& fstar, int u, int v,
                       const std::map<int, Rat>& others, const Rat& u_lo,
                       const Rat& u_hi, const Rat& v_lo, const Rat& v_hi,
                       int nu, int nv) {
  if (nu < 2 || nv < 2)
    throw std::invalid_argument("grid needs at least 2 points per axis");
  if (u_lo > u_hi || v_lo > v_hi)
    throw std::invalid_argument("grid box must have lo <= hi on both axes");
  std::map<int, Rat> fix;
  for (int w : fstar.variables()) {
    if (w == u || w == v) continue;
    auto it = others.find(w);
    if (it == others.end())
      throw std::invalid_argument("grid is missing a value for '" +
                                  var_info(w).name + "'");
    fix[w] = it->second;
  }
  Polynomial restricted = fstar.substitute_rational(fix);

  GridTable out;
  out.u = u;
  out.v = v;
  Rat du = (u_hi - u_lo) / Rat(nu - 1);
  Rat dv = (v_hi - v_lo) / Rat(nv - 1);
  for (int i = 0; i < nu; ++i) {
    Rat uv = u_lo + Rat(i) * du;
    for (int jx = 0; jx < nv; ++jx) {
      GridRow row;
      row.u = uv;
      row.v = v_lo + Rat(jx) * dv;
      Rat val = restricted.eval({{u, row.u}, {v, row.v}});
      row.satisfied = val >= 0;
      row.on_boundary = val == 0;
      (row.satisfied ? out.satisfied : out.violated) += 1;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

namespace {

// The free pair for boundary/grid emission: f* must have exactly two
// remaining parameters, both probability weights from distinct blocks; the
// box is the product of their block budgets, ordered by block registration.
struct FreePair {
  int u = -1, v = -1;
  Rat u_hi, v_hi;
};

FreePair free_pair(const SystemM& sys) {
  std::vector<int> frees = sys.fstar.variables();
  for (int w : frees)
    if (var_info(w).kind != VarKind::Alpha)
      throw std::invalid_argument(
          "boundary/grid emission needs every scalar level fixed, but '" +
          var_info(w).name + "' is free");
  if (frees.size() != 2)
    throw std::invalid_argument(
        "boundary/grid emission needs exactly two free parameters, got " +
        std::to_string(frees.size()));
  FreePair fp;
  int block_u = -1, block_v = -1;
  int bi = 0;
  for (const auto& s : sys.simplices) {
    for (int w : s.vars) {
      if (w != frees[0] && w != frees[1]) continue;
      if (fp.u < 0) {
        fp.u = w;
        fp.u_hi = s.kappa;
        block_u = bi;
      } else if (fp.v < 0) {
        fp.v = w;
        fp.v_hi = s.kappa;
        block_v = bi;
      }
    }
    ++bi;
  }
  if (fp.u < 0 || fp.v < 0)
    throw std::invalid_argument(
        "free parameters must belong to simplex blocks");
  if (block_u == block_v)
    throw std::invalid_argument(
        "free parameters share a simplex block; boundary/grid need a "
        "product box");
  return fp;
}

std::string not_extensible_payload(const ExtensibilityReport& rep,
                                   const std::string& format) {
  if (format == "json") {
    json o{{"extensible", false},
           {"probabilistic", rep.probabilistic},
           {"seed", rep.seed},
           {"sign_report", rep.text()}};
    return o.dump(2);
  }
  return rep.text();
}

std::string report_payload(const SpecializedCad& cad,
                           const std::vector<std::string>& build_notes,
                           const std::string& format) {
  std::vector<std::string> notes = build_notes;
  notes.insert(notes.end(), cad.notes.begin(), cad.notes.end());
  std::vector<std::string> levels;
  for (int v : cad.level_vars) levels.push_back(var_info(v).name);
  if (format == "json") {
    json o{{"extensible", cad.report.extensible},
           {"probabilistic", cad.report.probabilistic},
           {"seed", cad.report.seed},
           {"levels", levels},
           {"cell_bound", cad.bound.get_str()},
           {"leaves_before_pruning", cad.leaves_before_pruning},
           {"pruned_false_leaves", cad.pruned_false_leaves},
           {"true_leaves", cad.true_leaves},
           {"notes", notes},
           {"sign_report", cad.report.text()}};
    return o.dump(2);
  }
  std::ostringstream os;
  os << "levels:";
  for (const auto& l : levels) os << " " << l;
  os << "\n";
  os << "cell bound: " << cad.bound.get_str() << "\n";
  os << "leaves before pruning: " << cad.leaves_before_pruning << "\n";
  os << "pruned false leaves: " << cad.pruned_false_leaves << "\n";
  os << "true leaves: " << cad.true_leaves << "\n";
  for (const auto& n : notes) os << "note: " << n << "\n";
  os << cad.report.text();
  return os.str();
}

void emit_boundary(std::ostream& out, const BoundaryCurve& bc, int u, int v,
                   bool floats, const std::string& format) {
  const std::string un = var_info(u).name;
  const std::string vn = var_info(v).name;
  if (format == "json") {
    json rows = json::array();
    for (const auto& p : bc.points) {
      json row{{"solved", p.solved},
               {"in_domain", p.in_domain},
               {"note", p.note},
               {un, rat_str(p.u)}};
      if (floats) row[un + "_float"] = rat_to_decimal(p.u);
      if (p.solved) {
        row[vn] = rat_str(p.v);
        if (floats) row[vn + "_float"] = rat_to_decimal(p.v);
      }
      rows.push_back(std::move(row));
    }
    json o{{"closed_form", bc.closed_form},
           {"columns", {un, vn}},
           {"points", rows}};
    out << o.dump(2) << "\n";
    return;
  }
  out << "# " << bc.closed_form << "\n";
  out << un;
  if (floats) out << "," << un << "_float";
  out << "," << vn;
  if (floats) out << "," << vn << "_float";
  out << ",in_domain,note\n";
  for (const auto& p : bc.points) {
    out << rat_str(p.u);
    if (floats) out << "," << rat_to_decimal(p.u);
    if (p.solved) {
      out << "," << rat_str(p.v);
      if (floats) out << "," << rat_to_decimal(p.v);
    } else {
      out << ",";
      if (floats) out << ",";
    }
    out << "," << (p.in_domain ? "true" : "false") << "," << p.note << "\n";
  }
}

void emit_grid(std::ostream& out, const GridTable& gt, bool floats,
               const std::string& format) {
  const std::string un = var_info(gt.u).name;
  const std::string vn = var_info(gt.v).name;
  if (format == "json") {
    json rows = json::array();
    for (const auto& r : gt.rows) {
      json row{{un, rat_str(r.u)},
               {vn, rat_str(r.v)},
               {"satisfied", r.satisfied},
               {"on_boundary", r.on_boundary}};
      if (floats) {
        row[un + "_float"] = rat_to_decimal(r.u);
        row[vn + "_float"] = rat_to_decimal(r.v);
      }
      rows.push_back(std::move(row));
    }
    json o{{"columns", {un, vn}},
           {"rows", rows},
           {"satisfied", gt.satisfied},
           {"violated", gt.violated}};
    out << o.dump(2) << "\n";
    return;
  }
  out << un;
  if (floats) out << "," << un << "_float";
  out << "," << vn;
  if (floats) out << "," << vn << "_float";
  out << ",satisfied,on_boundary\n";
  for (const auto& r : gt.rows) {
    out << rat_str(r.u);
    if (floats) out << "," << rat_to_decimal(r.u);
    out << "," << rat_str(r.v);
    if (floats) out << "," << rat_to_decimal(r.v);
    out << "," << (r.satisfied ? "true" : "false") << ","
        << (r.on_boundary ? "true" : "false") << "\n";
  }
  out << "# satisfied=" << gt.satisfied << " violated=" << gt.violated
      << "\n";
}

long long max_cells_cap() {
  const char* env = std::getenv("MARKOVCAD_MAX_CELLS");
  if (env == nullptr || *env == '\0') return 1000000;
  char* end = nullptr;
  long long cap = std::strtoll(env, &end, 10);
  if (end == nullptr || *end != '\0' || cap <= 0)
    throw std::invalid_argument(
        "MARKOVCAD_MAX_CELLS must be a positive integer");
  return cap;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  RunConfig cfg;
  CLI::App app{
      "Exact sensitivity analysis of Markov reward processes via "
      "specialized cylindrical decomposition"};
  app.add_option("--model", cfg.model_path,
                 "Model JSON file, or a structured-system JSON file")
      ->required();
  app.add_option("--model-b", cfg.model_b_path,
                 "Second model for comparison metrics");
  app.add_option("--query", cfg.query_path, "Query JSON file");
  app.add_option("--emit", cfg.emit, "What to write to stdout")
      ->check(CLI::IsMember(
          {"tree", "formula", "boundary-csv", "grid-csv", "report"}));
  app.add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  app.add_option("--grid-n", cfg.grid_n, "Lattice points per axis (>= 2)");
  app.add_option("--boundary-samples", cfg.boundary_samples,
                 "Boundary abscissae (>= 2)");
  app.add_option("--order", cfg.order,
                 "Comma-separated scalar-level order override");
  app.add_flag("--ifr", cfg.ifr,
               "Constrain transition rows to increasing failure rate");
  app.add_option("--icer-benefit-sign", cfg.icer_sign,
                 "Caller-asserted sign of the incremental benefit")
      ->check(CLI::IsMember({"pos", "neg"}));
  app.add_flag("--parallel", cfg.parallel,
               "Run the sign-invariance judgments on worker threads");
  app.add_option("--seed", cfg.seed,
                 "Seed for randomized probe certificates");
  app.add_flag("--floats", cfg.floats,
               "Add 12-significant-digit decimal columns to CSV output");
  app.add_flag("--verbose", cfg.verbose, "Write progress notes to stderr");

  std::vector<const char*> argv;
  argv.push_back("markovcad");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, 1, std::string("argument error: ") + e.what());
  }

  try {
    // --- ingest ---------------------------------------------------------
    std::string model_text = read_file(cfg.model_path);
    json probe;
    try {
      probe = json::parse(model_text);
    } catch (const json::parse_error& e) {
      return fail(err, 1,
                  "model JSON: " + std::string(e.what()) + " at byte " +
                      std::to_string(e.byte));
    }
    bool is_system = probe.is_object() && !probe.contains("P") &&
                     (probe.contains("simplices") || probe.contains("g0"));

    SystemM sys;
    std::vector<std::string> build_notes;
    if (is_system) {
      if (!cfg.query_path.empty() || !cfg.model_b_path.empty())
        return fail(err, 1,
                    "a structured-system file takes no query and no second "
                    "model");
      if (cfg.ifr || !cfg.icer_sign.empty())
        return fail(err, 1,
                    "--ifr and --icer-benefit-sign apply to model/query "
                    "input");
      sys = load_system(model_text);
    } else {
      if (cfg.query_path.empty())
        return fail(err, 1, "model input needs a query file (--query)");
      MarkovModel a = load_model(model_text);
      std::optional<MarkovModel> b;
      if (!cfg.model_b_path.empty())
        b = load_model(read_file(cfg.model_b_path));
      Query q = load_query(read_file(cfg.query_path));
      if (cfg.ifr) q.ifr = true;
      if (!cfg.icer_sign.empty()) q.icer_benefit_positive = cfg.icer_sign == "pos";
      BuildResult built = build_system(a, b ? &*b : nullptr, q);
      sys = std::move(built.system);
      build_notes = std::move(built.notes);
    }

    // --- scalar-level order override ------------------------------------
    if (!cfg.order.empty()) {
      std::vector<std::string> wanted;
      std::stringstream ss(cfg.order);
      std::string piece;
      while (std::getline(ss, piece, ',')) {
        while (!piece.empty() && piece.front() == ' ') piece.erase(0, 1);
        while (!piece.empty() && piece.back() == ' ') piece.pop_back();
        if (!piece.empty()) wanted.push_back(piece);
      }
      if (wanted.size() != sys.terms.size())
        return fail(err, 1,
                    "--order must list each scalar level exactly once (" +
                        std::to_string(sys.terms.size()) + " levels)");
      std::vector<XTerm> reordered;
      std::set<int> used;
      for (const auto& name : wanted) {
        bool found = false;
        for (std::size_t i = 0; i < sys.terms.size(); ++i) {
          if (var_info(sys.terms[i].var).name != name) continue;
          if (used.count(static_cast<int>(i)))
            return fail(err, 1, "--order repeats '" + name + "'");
          used.insert(static_cast<int>(i));
          reordered.push_back(sys.terms[i]);
          found = true;
          break;
        }
        if (!found)
          return fail(err, 1,
                      "--order names no scalar level '" + name + "'");
      }
      sys = make_system(sys.g0, std::move(reordered), sys.simplices, sys.ifr);
    }

    if (cfg.verbose)
      for (const auto& n : build_notes) err << "note: " << n << "\n";

    // --- two-way emissions (no extensibility requirement) ---------------
    if (cfg.emit == "boundary-csv" || cfg.emit == "grid-csv") {
      FreePair fp = free_pair(sys);
      if (cfg.emit == "boundary-csv") {
        BoundaryCurve bc =
            boundary_curve(sys.fstar, fp.u, fp.v, {}, Rat(0), fp.u_hi,
                           cfg.boundary_samples, Rat(0), fp.v_hi);
        emit_boundary(out, bc, fp.u, fp.v, cfg.floats, cfg.format);
      } else {
        GridTable gt = grid_compare(sys.fstar, fp.u, fp.v, {}, Rat(0),
                                    fp.u_hi, Rat(0), fp.v_hi, cfg.grid_n,
                                    cfg.grid_n);
        emit_grid(out, gt, cfg.floats, cfg.format);
      }
      return 0;
    }

    // --- specialized decomposition --------------------------------------
    Int bound = cell_count_bound(sys);
    long long cap = max_cells_cap();
    if (bound > Int(static_cast<long>(cap)))
      return fail(err, 4,
                  "projected cell count " + bound.get_str() +
                      " exceeds MARKOVCAD_MAX_CELLS=" + std::to_string(cap));

    SpecializedCad cad;
    try {
      cad = specialized_cad(sys, cfg.seed, cfg.parallel);
    } catch (const NotSimplexExtensible& e) {
      emit_text(out, not_extensible_payload(e.report, cfg.format));
      return fail(err, 2, "system is not simplex-extensible");
    } catch (const TowerOverflow& e) {
      return fail(err, 4, e.what());
    } catch (const CellLimitExceeded& e) {
      return fail(err, 4, e.what());
    } catch (const std::logic_error& e) {
      if (std::string(e.what()).find("exceeds supported scale") !=
          std::string::npos)
        return fail(err, 4, e.what());
      throw;
    }

    if (cfg.verbose)
      for (const auto& n : cad.notes) err << "note: " << n << "\n";

    if (cfg.emit == "tree") {
      emit_text(out, cfg.format == "json" ? tree_json(cad)
                                          : render_tree(cad));
    } else if (cfg.emit == "formula") {
      if (cfg.format == "json") {
        json o{{"formula", render_formula(cad)}};
        out << o.dump(2) << "\n";
      } else {
        emit_text(out, render_formula(cad));
      }
    } else {  // report
      emit_text(out, report_payload(cad, build_notes, cfg.format));
    }

    if (cad.true_leaves == 0)
      return fail(err, 3, "infeasible system: no true cells");
    return 0;
  } catch (const ParseError& e) {
    return fail(err, 1,
                std::string(e.what()) + " at position " +
                    std::to_string(e.position()));
  } catch (const std::exception& e) {
    return fail(err, 1, e.what());
  }
}

}  // namespace mc
