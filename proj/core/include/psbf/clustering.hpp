#pragma once

#include <string>
#include <vector>

#include "psbf/dbn.hpp"

namespace psbf {

class FactoredBelief;

// A partition of the state variables. Cluster members are sorted ascending;
// a cluster's mixed-radix factor index uses that order, first member most
// significant. Clusters are sorted by smallest member.
struct Clustering {
  std::vector<std::vector<int>> clusters;
  std::vector<int> owner;  // variable id -> cluster index

  int size() const { return static_cast<int>(clusters.size()); }
  static Clustering from_clusters(std::vector<std::vector<int>> clusters, int n);
};

enum class ClusterStrategy { singleton, components, max_size };

Clustering singleton_clusters(int n);

// Connected components of the union over all actions of the undirected
// intra-slice adjacency between t+1 state copies. Cluster-local parent
// closure holds by construction.
Clustering components_clusters(const Process& process);

// Components, then any component larger than `limit` is broken up greedily:
// grow each part from its lowest remaining variable, repeatedly pulling in the
// variable with the most intra-slice edges into the part (ties to the lowest
// id), so few edges are cut.
Clustering max_size_clusters(const Process& process, int limit);

Clustering auto_cluster(const Process& process, ClusterStrategy strategy, int limit = 0);

// An intra-slice parent of a member that lives outside the member's cluster.
struct A1Violation {
  int action = 0;
  int var = 0;
  int parent = 0;
};

std::vector<A1Violation> check_a1(const Process& process, const Clustering& clustering);
std::vector<A1Violation> check_a1(const ActionDbn& dbn, int action_index,
                                  const Clustering& clustering);

// Clusters must disjointly cover all n variables.
bool check_a2(const Clustering& clustering, int n);

enum class MarginalizeMode { prior, uniform };

// An action network with the tables of offending variables replaced so every
// remaining intra-slice parent is cluster-local. Replacement tables integrate
// the removed parents out under one-step-lookahead marginals (or uniform
// weights). The base network is referenced, not copied.
struct MarginalizedAction {
  const ActionDbn* base = nullptr;
  std::vector<int> modified;             // sorted ids of structurally affected variables
  std::vector<Cpt> replacements;         // built tables (possibly a subset of modified)
  std::vector<int> slot_of;              // variable id -> index into replacements, or -1

  const Cpt& effective_cpt(int var) const {
    const int s = slot_of[var];
    return s < 0 ? base->state_cpts[var] : replacements[s];
  }

  // Full network with replaced tables and rebuilt edges; for inspection and
  // re-running the passivity detector on the modified model.
  ActionDbn materialize() const;
};

// Variables whose tables marginalize() would replace: those with at least one
// out-of-cluster intra-slice parent. Purely structural.
std::vector<int> marginalized_vars(const ActionDbn& dbn, const Clustering& clustering);

MarginalizedAction marginalize(const ActionDbn& dbn, const Clustering& clustering,
                               const FactoredBelief& prior,
                               MarginalizeMode mode = MarginalizeMode::prior);

// As above but only builds replacements for the listed variables (which must
// be a subset of marginalized_vars). The filter uses this to avoid building
// tables for clusters it skips; `modified` still lists the full structural set.
MarginalizedAction marginalize_some(const ActionDbn& dbn, const Clustering& clustering,
                                    const FactoredBelief& prior, MarginalizeMode mode,
                                    const std::vector<int>& only_vars);

}  // namespace psbf
