#include "psbf/validate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

namespace psbf {

namespace {

std::string handle(const ActionDbn& d, const NodeRef& r) {
  if ((r.kind == NodeKind::obs && r.index >= d.m()) ||
      (r.kind != NodeKind::obs && r.index >= d.n()) || r.index < 0) {
    std::ostringstream os;
    os << "<node kind=" << static_cast<int>(r.kind) << " index=" << r.index << ">";
    return os.str();
  }
  return node_handle(r, d.state_vars, d.obs_vars);
}

bool edge_class_ok(const Edge& e) {
  const NodeKind a = e.first.kind, b = e.second.kind;
  if (a == NodeKind::state_t && b == NodeKind::state_t1) return true;
  if (a == NodeKind::state_t1 && b == NodeKind::state_t1) return true;
  if (a == NodeKind::state_t1 && b == NodeKind::obs) return true;
  if (a == NodeKind::obs && b == NodeKind::obs) return true;
  return false;
}

void check_vars(const ActionDbn& d, std::vector<ValidationIssue>& out) {
  std::set<std::string> names;
  auto check_list = [&](const std::vector<VariableSpec>& vars, const char* what) {
    for (const VariableSpec& v : vars) {
      if (v.name.empty())
        out.push_back({"var-spec", std::string(what) + " variable with empty name"});
      if (v.domain < 1)
        out.push_back({"var-spec", std::string(what) + " variable '" + v.name +
                                       "' has domain " + std::to_string(v.domain)});
      if (!names.insert(v.name).second)
        out.push_back({"var-spec", "duplicate variable name '" + v.name + "'"});
    }
  };
  check_list(d.state_vars, "state");
  check_list(d.obs_vars, "observation");
}

bool index_ok(const ActionDbn& d, const NodeRef& r) {
  if (r.index < 0) return false;
  return r.kind == NodeKind::obs ? r.index < d.m() : r.index < d.n();
}

int node_domain(const ActionDbn& d, const NodeRef& r) {
  return r.kind == NodeKind::obs ? d.obs_vars[r.index].domain
                                 : d.state_vars[r.index].domain;
}

void check_cpt(const ActionDbn& d, const Cpt& c, const NodeRef& expect_child,
               std::vector<ValidationIssue>& out) {
  const std::string child_name = handle(d, expect_child);
  if (c.child != expect_child) {
    out.push_back({"cpt-child", "table stored at slot " + child_name +
                                    " declares child " + handle(d, c.child)});
    return;
  }
  if (c.child_domain != node_domain(d, expect_child)) {
    out.push_back({"cpt-child", "table for " + child_name + " has child domain " +
                                    std::to_string(c.child_domain) + ", variable has " +
                                    std::to_string(node_domain(d, expect_child))});
    return;
  }

  bool parents_ok = true;
  std::set<NodeRef> seen;
  for (std::size_t s = 0; s < c.parents.size(); ++s) {
    const NodeRef& p = c.parents[s];
    if (!index_ok(d, p)) {
      out.push_back({"cpt-parents", "table for " + child_name + " has out-of-range parent"});
      parents_ok = false;
      continue;
    }
    if (!seen.insert(p).second) {
      out.push_back({"cpt-parents",
                     "table for " + child_name + " repeats parent " + handle(d, p)});
      parents_ok = false;
    }
    if (!d.has_edge(p, expect_child)) {
      out.push_back({"cpt-parents", "table for " + child_name + " lists parent " +
                                        handle(d, p) + " with no matching edge"});
      parents_ok = false;
    }
    if (s < c.parent_domains.size() && c.parent_domains[s] != node_domain(d, p)) {
      out.push_back({"cpt-parents", "table for " + child_name +
                                        " caches wrong domain for parent " + handle(d, p)});
      parents_ok = false;
    }
  }
  if (c.parent_domains.size() != c.parents.size()) {
    out.push_back({"cpt-parents",
                   "table for " + child_name + " has mismatched parent domain cache"});
    parents_ok = false;
  }
  for (const Edge& e : d.edges) {
    if (e.second == expect_child && !seen.count(e.first)) {
      out.push_back({"cpt-parents", "edge " + handle(d, e.first) + " -> " + child_name +
                                        " missing from the parent list"});
      parents_ok = false;
    }
  }
  if (!parents_ok) return;

  const std::size_t want = c.rows() * static_cast<std::size_t>(c.child_domain);
  if (c.table.size() != want) {
    out.push_back({"cpt-shape", "table for " + child_name + " has " +
                                    std::to_string(c.table.size()) + " entries, expected " +
                                    std::to_string(want)});
    return;
  }
  const std::size_t rows = c.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    bool range_ok = true;
    for (int v = 0; v < c.child_domain; ++v) {
      double p = c.row(r)[v];
      if (!(p >= 0.0) || p > 1.0 || !std::isfinite(p)) range_ok = false;
      sum += p;
    }
    if (!range_ok) {
      out.push_back({"prob-range", "table for " + child_name + " row " +
                                       std::to_string(r) + " has entries outside [0, 1]"});
      continue;
    }
    if (std::fabs(sum - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os << "table for " << child_name << " row " << r << " sums to " << sum;
      out.push_back({"row-normalization", os.str()});
    }
  }
}

// Kahn over the intra-slice subgraph: t+1 state and obs nodes.
void check_acyclic(const ActionDbn& d, std::vector<ValidationIssue>& out) {
  const int n = d.n(), m = d.m();
  const int total = n + m;
  auto id_of = [&](const NodeRef& r) -> int {
    if (r.kind == NodeKind::state_t1) return r.index;
    if (r.kind == NodeKind::obs) return n + r.index;
    return -1;
  };
  std::vector<std::vector<int>> adj(total);
  std::vector<int> indeg(total, 0);
  for (const Edge& e : d.edges) {
    int a = id_of(e.first), b = id_of(e.second);
    if (a < 0 || b < 0 || a >= total || b >= total) continue;
    adj[a].push_back(b);
    ++indeg[b];
  }
  std::vector<int> queue;
  for (int v = 0; v < total; ++v) {
    if (indeg[v] == 0) queue.push_back(v);
  }
  int seen = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int v = queue[head];
    ++seen;
    for (int w : adj[v]) {
      if (--indeg[w] == 0) queue.push_back(w);
    }
  }
  if (seen != total) {
    out.push_back({"cycle", "intra-slice subgraph on t+1 and observation nodes is cyclic"});
  }
}

}  // namespace

std::vector<ValidationIssue> validate_dbn(const ActionDbn& d) {
  std::vector<ValidationIssue> out;
  check_vars(d, out);
  for (const VariableSpec& v : d.state_vars) {
    if (v.domain < 1) return out;  // domain errors poison everything downstream
  }

  for (const Edge& e : d.edges) {
    if (!index_ok(d, e.first) || !index_ok(d, e.second)) {
      out.push_back({"edge-range", "edge with out-of-range endpoint"});
      continue;
    }
    if (!edge_class_ok(e)) {
      out.push_back({"edge-class", "edge " + handle(d, e.first) + " -> " +
                                       handle(d, e.second) + " is not an admissible class"});
    }
    if (e.first == e.second) {
      out.push_back({"edge-class", "self edge on " + handle(d, e.first)});
    }
  }
  check_acyclic(d, out);

  if (static_cast<int>(d.state_cpts.size()) != d.n()) {
    out.push_back({"cpt-missing", "expected " + std::to_string(d.n()) +
                                      " state tables, found " +
                                      std::to_string(d.state_cpts.size())});
  }
  if (static_cast<int>(d.obs_cpts.size()) != d.m()) {
    out.push_back({"cpt-missing", "expected " + std::to_string(d.m()) +
                                      " observation tables, found " +
                                      std::to_string(d.obs_cpts.size())});
  }
  for (int i = 0; i < d.n() && i < static_cast<int>(d.state_cpts.size()); ++i) {
    check_cpt(d, d.state_cpts[i], state_t1(i), out);
  }
  for (int j = 0; j < d.m() && j < static_cast<int>(d.obs_cpts.size()); ++j) {
    check_cpt(d, d.obs_cpts[j], obs_node(j), out);
  }
  return out;
}

std::vector<ValidationIssue> validate_process(const Process& p) {
  std::vector<ValidationIssue> out;
  std::set<std::string> action_names;
  for (const ActionDbn& a : p.actions) {
    if (a.name.empty()) out.push_back({"action-name", "action with empty name"});
    if (!action_names.insert(a.name).second)
      out.push_back({"action-name", "duplicate action name '" + a.name + "'"});

    auto same_vars = [](const std::vector<VariableSpec>& x,
                        const std::vector<VariableSpec>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].name != y[i].name || x[i].domain != y[i].domain) return false;
      }
      return true;
    };
    if (!same_vars(a.state_vars, p.state_vars) || !same_vars(a.obs_vars, p.obs_vars)) {
      out.push_back({"action-vars",
                     "action '" + a.name + "' disagrees with the process variable list"});
      continue;
    }
    for (ValidationIssue& issue : validate_dbn(a)) {
      issue.message = "action '" + a.name + "': " + issue.message;
      out.push_back(std::move(issue));
    }
  }
  if (p.actions.empty()) out.push_back({"action-missing", "process declares no actions"});

  for (const NamedClustering& nc : p.clusterings) {
    std::vector<int> owner(p.n(), -1);
    bool ok = true;
    for (std::size_t k = 0; k < nc.clusters.size(); ++k) {
      if (nc.clusters[k].empty()) ok = false;
      for (int v : nc.clusters[k]) {
        if (v < 0 || v >= p.n() || owner[v] != -1) {
          ok = false;
          break;
        }
        owner[v] = static_cast<int>(k);
      }
    }
    for (int v = 0; v < p.n() && ok; ++v) ok = owner[v] != -1;
    if (!ok) {
      out.push_back({"clustering",
                     "clustering '" + nc.name + "' is not a partition of the state variables"});
    }
  }
  return out;
}

}  // namespace psbf
