#include "psbf/dbn.hpp"

#include <algorithm>

namespace psbf {

void ActionDbn::derive_edges() {
  edges.clear();
  for (const Cpt& c : state_cpts) {
    for (const NodeRef& p : c.parents) edges.emplace_back(p, c.child);
  }
  for (const Cpt& c : obs_cpts) {
    for (const NodeRef& p : c.parents) edges.emplace_back(p, c.child);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool ActionDbn::has_edge(const NodeRef& from, const NodeRef& to) const {
  return std::binary_search(edges.begin(), edges.end(), Edge{from, to});
}

std::vector<int> ActionDbn::intra_state_parents(int i) const {
  std::vector<int> out;
  for (const NodeRef& p : state_cpts[i].parents) {
    if (p.kind == NodeKind::state_t1) out.push_back(p.index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> ActionDbn::t_parents(int i) const {
  std::vector<int> out;
  for (const NodeRef& p : state_cpts[i].parents) {
    if (p.kind == NodeKind::state_t) out.push_back(p.index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Process::state_domains() const {
  std::vector<int> d(state_vars.size());
  for (std::size_t i = 0; i < state_vars.size(); ++i) d[i] = state_vars[i].domain;
  return d;
}

std::vector<int> Process::obs_domains() const {
  std::vector<int> d(obs_vars.size());
  for (std::size_t j = 0; j < obs_vars.size(); ++j) d[j] = obs_vars[j].domain;
  return d;
}

std::string node_handle(const NodeRef& ref,
                        const std::vector<VariableSpec>& state_vars,
                        const std::vector<VariableSpec>& obs_vars) {
  switch (ref.kind) {
    case NodeKind::state_t:
      return state_vars[ref.index].name + "@t";
    case NodeKind::state_t1:
      return state_vars[ref.index].name + "@t1";
    case NodeKind::obs:
      return obs_vars[ref.index].name;
  }
  return {};
}

Cpt identity_copy_cpt(int var, int domain) {
  Cpt c;
  c.child = state_t1(var);
  c.child_domain = domain;
  c.parents = {state_t(var)};
  c.parent_domains = {domain};
  c.table.assign(static_cast<std::size_t>(domain) * domain, 0.0);
  for (int v = 0; v < domain; ++v) c.table[static_cast<std::size_t>(v) * domain + v] = 1.0;
  return c;
}

}  // namespace psbf
