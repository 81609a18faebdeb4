#include "markovcad/variable.hpp"

#include <deque>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace mc {

namespace {

struct Registry {
  std::deque<VarInfo> infos;
  std::unordered_map<std::string, int> by_name;
  std::mutex mu;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

int intern_var(const std::string& name, VarKind kind, int simplex, int pos) {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.by_name.find(name);
  if (it != r.by_name.end()) {
    VarInfo& info = r.infos[static_cast<std::size_t>(it->second)];
    info.kind = kind;
    info.simplex = simplex;
    info.pos = pos;
    return it->second;
  }
  int id = static_cast<int>(r.infos.size());
  r.infos.push_back(VarInfo{name, name, kind, simplex, pos});
  r.by_name.emplace(name, id);
  return id;
}

int find_var(const std::string& name) {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  auto it = r.by_name.find(name);
  return it == r.by_name.end() ? -1 : it->second;
}

const VarInfo& var_info(int id) {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  if (id < 0 || id >= static_cast<int>(r.infos.size()))
    throw std::out_of_range("unknown variable id");
  return r.infos[static_cast<std::size_t>(id)];
}

const std::string& var_name(int id) { return var_info(id).display; }

void set_var_display(int id, const std::string& display) {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  if (id < 0 || id >= static_cast<int>(r.infos.size()))
    throw std::out_of_range("unknown variable id");
  r.infos[static_cast<std::size_t>(id)].display = display;
}

int var_count() {
  Registry& r = registry();
  std::lock_guard<std::mutex> lock(r.mu);
  return static_cast<int>(r.infos.size());
}

}  // namespace mc
