#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace psbf {

// A finite-domain variable. Values are 0..domain-1.
struct VariableSpec {
  std::string name;
  int domain = 2;
};

// Nodes of a two-slice network: state variables at time t, their t+1 copies,
// and observation variables (observations exist only at t+1).
enum class NodeKind : std::uint8_t { state_t = 0, state_t1 = 1, obs = 2 };

struct NodeRef {
  NodeKind kind = NodeKind::state_t;
  int index = 0;
  auto operator<=>(const NodeRef&) const = default;
};

inline NodeRef state_t(int i) { return {NodeKind::state_t, i}; }
inline NodeRef state_t1(int i) { return {NodeKind::state_t1, i}; }
inline NodeRef obs_node(int j) { return {NodeKind::obs, j}; }

using StateVec = std::vector<int>;
using ObsVec = std::vector<int>;
using Edge = std::pair<NodeRef, NodeRef>;

// Conditional probability table. Row index is the mixed-radix encoding of the
// parent values in declared order, first parent most significant. Each row
// holds child_domain probabilities.
struct Cpt {
  NodeRef child;
  int child_domain = 0;
  std::vector<NodeRef> parents;
  std::vector<int> parent_domains;
  std::vector<double> table;

  std::size_t rows() const {
    std::size_t r = 1;
    for (int d : parent_domains) r *= static_cast<std::size_t>(d);
    return r;
  }

  std::size_t row_index(const int* parent_values) const {
    std::size_t r = 0;
    for (std::size_t s = 0; s < parents.size(); ++s) {
      r = r * static_cast<std::size_t>(parent_domains[s]) +
          static_cast<std::size_t>(parent_values[s]);
    }
    return r;
  }

  const double* row(std::size_t r) const {
    return table.data() + r * static_cast<std::size_t>(child_domain);
  }
  double* row(std::size_t r) {
    return table.data() + r * static_cast<std::size_t>(child_domain);
  }
};

// One action's two-slice network. state_cpts[i] is the table of x_i at t+1,
// obs_cpts[j] the table of y_j. `edges` mirrors the CPT parent lists; builders
// call derive_edges() after assembling tables, validate_dbn cross-checks both.
struct ActionDbn {
  std::string name;
  std::vector<VariableSpec> state_vars;
  std::vector<VariableSpec> obs_vars;
  std::vector<Edge> edges;
  std::vector<Cpt> state_cpts;
  std::vector<Cpt> obs_cpts;

  int n() const { return static_cast<int>(state_vars.size()); }
  int m() const { return static_cast<int>(obs_vars.size()); }

  void derive_edges();
  bool has_edge(const NodeRef& from, const NodeRef& to) const;

  // Intra-slice state parents (t+1 copies) of x_i at t+1, as variable ids.
  std::vector<int> intra_state_parents(int i) const;

  // t-slice parents of x_i at t+1, as variable ids.
  std::vector<int> t_parents(int i) const;
};

struct NamedClustering {
  std::string name;
  std::vector<std::vector<int>> clusters;
};

// A process: shared variable declarations plus one two-slice network per
// action, with optional stored clusterings.
struct Process {
  std::string name;
  std::vector<VariableSpec> state_vars;
  std::vector<VariableSpec> obs_vars;
  std::vector<ActionDbn> actions;
  std::vector<NamedClustering> clusterings;

  int n() const { return static_cast<int>(state_vars.size()); }
  int m() const { return static_cast<int>(obs_vars.size()); }
  std::vector<int> state_domains() const;
  std::vector<int> obs_domains() const;
};

// Renders a node as its file handle: "name@t", "name@t1" for state copies,
// the bare name for observation variables.
std::string node_handle(const NodeRef& ref,
                        const std::vector<VariableSpec>& state_vars,
                        const std::vector<VariableSpec>& obs_vars);

// Identity-copy table for a state variable: x_i@t1 = x_i@t with probability 1.
Cpt identity_copy_cpt(int var, int domain);

}  // namespace psbf
