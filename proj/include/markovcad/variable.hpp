#pragma once

#include <string>

#include "markovcad/common.hpp"

namespace mc {

// Classification of indeterminates:
//   XVar  - a nonnegative (or free) scalar unknown such as a threshold,
//           reward, or cost symbol; these occupy the outermost levels of
//           the specialized decomposition.
//   Alpha - a probability weight belonging to a simplex block.
enum class VarKind { XVar, Alpha };

struct VarInfo {
  std::string name;     // identifier as written in input ([A-Za-z_][A-Za-z0-9_]*)
  std::string display;  // rendering name (may contain characters such as ',')
  VarKind kind = VarKind::XVar;
  int simplex = -1;  // index of the owning simplex block, -1 for x-variables
  int pos = -1;      // position within the simplex block, -1 for x-variables
};

// Process-global variable registry.  Ids are assigned in interning order,
// which is deterministic for any fixed sequence of operations.  Interning
// an existing name returns its id and refreshes the stored metadata.
int intern_var(const std::string& name, VarKind kind = VarKind::XVar,
               int simplex = -1, int pos = -1);

// Id of a previously interned name, or -1.
int find_var(const std::string& name);

const VarInfo& var_info(int id);

// Display name used by renderers.
const std::string& var_name(int id);

void set_var_display(int id, const std::string& display);

int var_count();

}  // namespace mc
