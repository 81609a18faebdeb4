// Command-line front door: ingest model/query (or structured-system) files,
// run the pipeline parse -> build -> sign-invariance check -> specialized
// decomposition, and emit trees, solution formulas, exact boundary data, and
// grid-comparison tables.
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "markovcad/markov.hpp"
#include "markovcad/simplex.hpp"

namespace mc {

// Parsed command-line configuration.
struct RunConfig {
  std::string model_path;
  std::string model_b_path;           // comparisons only
  std::string query_path;
  std::string emit = "tree";          // tree | formula | boundary-csv |
                                      // grid-csv | report
  std::string format = "text";        // text | json
  int grid_n = 5;                     // lattice points per axis (>= 2)
  int boundary_samples = 20;          // abscissae (>= 2)
  std::string order;                  // comma list: scalar-level override
  bool ifr = false;                   // force the IFR constraint
  std::string icer_sign;              // "", "pos", "neg": overrides the query
  bool parallel = false;
  unsigned seed = 20260822;
  bool floats = false;                // add decimal columns to CSV output
  bool verbose = false;
};

// A structured system written directly as JSON:
//   {"g0": "<polynomial>",
//    "terms": [{"var": "x1", "g": "<alpha polynomial>",
//               "f": ["0", "1"] | null, "nonneg": true}, ...],
//    "simplices": [{"vars": ["a1", "a2"], "kappa": "1",
//                   "mode": "eq" | "leq"}, ...],
//    "ifr": false, "fstar": "<optional integrity check>"}
// Shape coefficient arrays are ascending; identifiers are interned with the
// role their position implies.  An explicit "fstar" must match the
// assembled expansion exactly.
SystemM load_system(const std::string& json_text);

// Exact lattice evaluation of f* >= 0 over a box for a free pair, every
// other parameter fixed.  Lattice points are evenly spaced with endpoints
// included (nu respectively nv points per axis, each >= 2); rows are
// u-major.
struct GridRow {
  Rat u;
  Rat v;
  bool satisfied = false;    // f* >= 0
  bool on_boundary = false;  // f* == 0
};
struct GridTable {
  int u = -1, v = -1;  // variable ids
  std::vector<GridRow> rows;
  long satisfied = 0;
  long violated = 0;
};
GridTable grid_compare(const Polynomial& fstar, int u, int v,
                       const std::map<int, Rat>& others, const Rat& u_lo,
                       const Rat& u_hi, const Rat& v_lo, const Rat& v_hi,
                       int nu, int nv);

// Runs the tool: parses flags, executes the pipeline, writes the emission
// to `out` and diagnostics (as one-line error JSON) to `err`.  Exit codes:
//   0 success, 1 input error, 2 system is not simplex-extensible (the
//   check report is written to `out`), 3 infeasible system (emission still
//   written), 4 projected cell count above MARKOVCAD_MAX_CELLS or an
//   internal scale limit.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace mc
