#include "psbf/clustering.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "psbf/belief.hpp"
#include "psbf/eval.hpp"

namespace psbf {

Clustering Clustering::from_clusters(std::vector<std::vector<int>> clusters, int n) {
  Clustering c;
  for (auto& members : clusters) std::sort(members.begin(), members.end());
  std::sort(clusters.begin(), clusters.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) {
              return a.front() < b.front();
            });
  c.clusters = std::move(clusters);
  c.owner.assign(n, -1);
  for (std::size_t k = 0; k < c.clusters.size(); ++k) {
    for (int v : c.clusters[k]) {
      if (v < 0 || v >= n || c.owner[v] != -1)
        throw std::invalid_argument("Clustering: not a partition");
      c.owner[v] = static_cast<int>(k);
    }
  }
  for (int v = 0; v < n; ++v) {
    if (c.owner[v] == -1) throw std::invalid_argument("Clustering: uncovered variable");
  }
  return c;
}

Clustering singleton_clusters(int n) {
  std::vector<std::vector<int>> clusters(n);
  for (int v = 0; v < n; ++v) clusters[v] = {v};
  return Clustering::from_clusters(std::move(clusters), n);
}

namespace {

// Undirected union over all actions of the t+1 intra-slice state adjacency.
std::vector<std::set<int>> intra_adjacency(const Process& process) {
  std::vector<std::set<int>> adj(process.n());
  for (const ActionDbn& a : process.actions) {
    for (const Edge& e : a.edges) {
      if (e.first.kind == NodeKind::state_t1 && e.second.kind == NodeKind::state_t1) {
        adj[e.first.index].insert(e.second.index);
        adj[e.second.index].insert(e.first.index);
      }
    }
  }
  return adj;
}

}  // namespace

Clustering components_clusters(const Process& process) {
  const int n = process.n();
  const auto adj = intra_adjacency(process);
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> clusters;
  for (int v = 0; v < n; ++v) {
    if (comp[v] != -1) continue;
    std::vector<int> queue{v};
    comp[v] = static_cast<int>(clusters.size());
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (int w : adj[queue[head]]) {
        if (comp[w] == -1) {
          comp[w] = comp[v];
          queue.push_back(w);
        }
      }
    }
    std::sort(queue.begin(), queue.end());
    clusters.push_back(std::move(queue));
  }
  return Clustering::from_clusters(std::move(clusters), n);
}

Clustering max_size_clusters(const Process& process, int limit) {
  if (limit < 1) throw std::invalid_argument("max_size_clusters: limit must be positive");
  const auto adj = intra_adjacency(process);
  Clustering comps = components_clusters(process);
  std::vector<std::vector<int>> out;
  for (std::vector<int>& comp : comps.clusters) {
    while (static_cast<int>(comp.size()) > limit) {
      // Grow a part from the lowest remaining variable, preferring the
      // candidate with the most edges into the part so few edges are cut.
      std::vector<int> part{comp.front()};
      std::set<int> remaining(comp.begin() + 1, comp.end());
      while (static_cast<int>(part.size()) < limit && !remaining.empty()) {
        int best = -1, best_links = -1;
        for (int cand : remaining) {
          int links = 0;
          for (int p : part) links += adj[cand].count(p) ? 1 : 0;
          if (links > best_links) {
            best_links = links;
            best = cand;
          }
        }
        part.push_back(best);
        remaining.erase(best);
      }
      std::sort(part.begin(), part.end());
      out.push_back(part);
      comp.assign(remaining.begin(), remaining.end());
    }
    if (!comp.empty()) out.push_back(comp);
  }
  return Clustering::from_clusters(std::move(out), process.n());
}

Clustering auto_cluster(const Process& process, ClusterStrategy strategy, int limit) {
  switch (strategy) {
    case ClusterStrategy::singleton:
      return singleton_clusters(process.n());
    case ClusterStrategy::components:
      return components_clusters(process);
    case ClusterStrategy::max_size:
      return max_size_clusters(process, limit);
  }
  throw std::invalid_argument("auto_cluster: unknown strategy");
}

std::vector<A1Violation> check_a1(const ActionDbn& dbn, int action_index,
                                  const Clustering& clustering) {
  std::vector<A1Violation> out;
  for (int i = 0; i < dbn.n(); ++i) {
    const int k = clustering.owner[i];
    for (int p : dbn.intra_state_parents(i)) {
      if (clustering.owner[p] != k) out.push_back({action_index, i, p});
    }
  }
  return out;
}

std::vector<A1Violation> check_a1(const Process& process, const Clustering& clustering) {
  std::vector<A1Violation> out;
  for (std::size_t a = 0; a < process.actions.size(); ++a) {
    auto v = check_a1(process.actions[a], static_cast<int>(a), clustering);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

bool check_a2(const Clustering& clustering, int n) {
  std::vector<int> owner(n, -1);
  for (std::size_t k = 0; k < clustering.clusters.size(); ++k) {
    for (int v : clustering.clusters[k]) {
      if (v < 0 || v >= n || owner[v] != -1) return false;
      owner[v] = static_cast<int>(k);
    }
  }
  for (int v = 0; v < n; ++v) {
    if (owner[v] == -1) return false;
  }
  return true;
}

std::vector<int> marginalized_vars(const ActionDbn& dbn, const Clustering& clustering) {
  std::vector<int> out;
  for (int i = 0; i < dbn.n(); ++i) {
    for (int p : dbn.intra_state_parents(i)) {
      if (clustering.owner[p] != clustering.owner[i]) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

ActionDbn MarginalizedAction::materialize() const {
  ActionDbn copy = *base;
  for (std::size_t q = 0; q < modified.size(); ++q) {
    const int slot = slot_of[modified[q]];
    if (slot < 0) throw std::logic_error("materialize: replacement not built");
    copy.state_cpts[modified[q]] = replacements[slot];
  }
  copy.derive_edges();
  return copy;
}

namespace {

// One-step-lookahead marginals q_v of t+1 copies under the prior, for the
// variables in `need` (resolved in topological order so that intra-slice
// parents are integrated out with their own q).
std::vector<std::vector<double>> lookahead_marginals(const ActionDbn& dbn,
                                                     const FactoredBelief& prior,
                                                     MarginalizeMode mode,
                                                     const std::vector<char>& need) {
  const int n = dbn.n();
  std::vector<std::vector<double>> q(n);
  if (mode == MarginalizeMode::uniform) {
    for (int v = 0; v < n; ++v) {
      if (!need[v]) continue;
      const int dom = dbn.state_vars[v].domain;
      q[v].assign(dom, 1.0 / dom);
    }
    return q;
  }
  for (int v : state_topo_order(dbn)) {
    if (!need[v]) continue;
    const Cpt& c = dbn.state_cpts[v];
    const int dom = c.child_domain;
    q[v].assign(dom, 0.0);

    std::vector<int> tvars;
    for (const NodeRef& p : c.parents) {
      if (p.kind == NodeKind::state_t) tvars.push_back(p.index);
    }
    std::sort(tvars.begin(), tvars.end());
    GroupedMarginals gm(prior, tvars);

    std::vector<int> tvals(tvars.size(), 0);
    std::vector<int> digits(c.parents.size(), 0);
    const std::size_t rows = c.rows();
    for (std::size_t r = 0; r < rows; ++r) {
      double w = 1.0;
      for (std::size_t s = 0; s < c.parents.size(); ++s) {
        const NodeRef& p = c.parents[s];
        if (p.kind == NodeKind::state_t) {
          const auto it = std::lower_bound(tvars.begin(), tvars.end(), p.index);
          tvals[static_cast<std::size_t>(it - tvars.begin())] = digits[s];
        } else {
          w *= q[p.index][digits[s]];  // topo order guarantees this is ready
        }
      }
      if (w != 0.0) {
        w *= gm.eval(tvals.data());
        if (w != 0.0) {
          const double* row = c.row(r);
          for (int val = 0; val < dom; ++val) q[v][val] += w * row[val];
        }
      }
      for (int s = static_cast<int>(digits.size()) - 1; s >= 0; --s) {
        if (++digits[s] < c.parent_domains[s]) break;
        digits[s] = 0;
      }
    }
  }
  return q;
}

Cpt build_replacement(const ActionDbn& dbn, const Clustering& clustering, int var,
                      const std::vector<std::vector<double>>& q) {
  const Cpt& c = dbn.state_cpts[var];
  const int k = clustering.owner[var];
  std::vector<char> drop(c.parents.size(), 0);
  for (std::size_t s = 0; s < c.parents.size(); ++s) {
    const NodeRef& p = c.parents[s];
    if (p.kind == NodeKind::state_t1 && clustering.owner[p.index] != k) drop[s] = 1;
  }

  Cpt out;
  out.child = c.child;
  out.child_domain = c.child_domain;
  for (std::size_t s = 0; s < c.parents.size(); ++s) {
    if (!drop[s]) {
      out.parents.push_back(c.parents[s]);
      out.parent_domains.push_back(c.parent_domains[s]);
    }
  }
  out.table.assign(out.rows() * static_cast<std::size_t>(out.child_domain), 0.0);

  // Single pass over the original table, accumulating each row into its
  // reduced row with the product of the dropped parents' lookahead weights.
  std::vector<int> digits(c.parents.size(), 0);
  const std::size_t rows = c.rows();
  const int dom = c.child_domain;
  for (std::size_t r = 0; r < rows; ++r) {
    double w = 1.0;
    std::size_t reduced = 0;
    for (std::size_t s = 0; s < c.parents.size(); ++s) {
      if (drop[s]) {
        w *= q[c.parents[s].index][digits[s]];
      } else {
        reduced = reduced * static_cast<std::size_t>(c.parent_domains[s]) +
                  static_cast<std::size_t>(digits[s]);
      }
    }
    if (w != 0.0) {
      const double* src = c.row(r);
      double* dst = out.row(reduced);
      for (int val = 0; val < dom; ++val) dst[val] += w * src[val];
    }
    for (int s = static_cast<int>(digits.size()) - 1; s >= 0; --s) {
      if (++digits[s] < c.parent_domains[s]) break;
      digits[s] = 0;
    }
  }
  return out;
}

}  // namespace

MarginalizedAction marginalize_some(const ActionDbn& dbn, const Clustering& clustering,
                                    const FactoredBelief& prior, MarginalizeMode mode,
                                    const std::vector<int>& only_vars) {
  MarginalizedAction out;
  out.base = &dbn;
  out.modified = marginalized_vars(dbn, clustering);
  out.slot_of.assign(dbn.n(), -1);

  // Lookahead marginals are needed for each dropped parent and, recursively,
  // for the intra-slice ancestry feeding those parents' own lookaheads.
  std::vector<char> need(dbn.n(), 0);
  std::vector<int> stack;
  for (int v : only_vars) {
    const int k = clustering.owner[v];
    for (int p : dbn.intra_state_parents(v)) {
      if (clustering.owner[p] != k && !need[p]) {
        need[p] = 1;
        stack.push_back(p);
      }
    }
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int p : dbn.intra_state_parents(v)) {
      if (!need[p]) {
        need[p] = 1;
        stack.push_back(p);
      }
    }
  }
  const auto q = lookahead_marginals(dbn, prior, mode, need);

  for (int v : only_vars) {
    if (!std::binary_search(out.modified.begin(), out.modified.end(), v)) {
      throw std::invalid_argument("marginalize: variable needs no replacement");
    }
    out.slot_of[v] = static_cast<int>(out.replacements.size());
    out.replacements.push_back(build_replacement(dbn, clustering, v, q));
  }
  return out;
}

MarginalizedAction marginalize(const ActionDbn& dbn, const Clustering& clustering,
                               const FactoredBelief& prior, MarginalizeMode mode) {
  return marginalize_some(dbn, clustering, prior, mode,
                          marginalized_vars(dbn, clustering));
}

}  // namespace psbf
