#pragma once

// Shared builders and brute-force oracles for the test binaries. Oracles here
// recompute results from first principles — dense joint enumeration driven by
// transition_prob/observation_prob, definition-level passivity checks — so
// library outputs are always compared against an independent path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "psbf/belief.hpp"
#include "psbf/clustering.hpp"
#include "psbf/dbn.hpp"
#include "psbf/eval.hpp"
#include "psbf/rng.hpp"

namespace ts {

using psbf::ActionDbn;
using psbf::Clustering;
using psbf::Cpt;
using psbf::FactoredBelief;
using psbf::JointBelief;
using psbf::ObsVec;
using psbf::Process;
using psbf::StateVec;

// Odometer over mixed-radix assignments; returns false after wrapping past
// the last one. Start from the all-zero vector.
inline bool next_assignment(StateVec& s, const std::vector<int>& domains) {
  for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
    if (++s[i] < domains[i]) return true;
    s[i] = 0;
  }
  return false;
}

inline std::size_t space_of(const std::vector<int>& domains) {
  std::size_t r = 1;
  for (int d : domains) r *= static_cast<std::size_t>(d);
  return r;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  if (a.size() != b.size()) return 1e18;
  return worst;
}

inline bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

inline void normalize(std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;
}

// --- brute-force oracles ----------------------------------------------------

// p'(s') = sum_s p(s) T(s, s'), normalized. Quadratic in the joint space.
inline JointBelief brute_push_forward(const ActionDbn& dbn, const JointBelief& prior) {
  JointBelief out;
  out.domains = prior.domains;
  out.p.assign(prior.p.size(), 0.0);
  StateVec s(prior.domains.size(), 0);
  do {
    const double ps = prior.p[prior.index_of(s)];
    if (ps == 0.0) continue;
    StateVec s1(prior.domains.size(), 0);
    do {
      out.p[out.index_of(s1)] += ps * psbf::transition_prob(dbn, s, s1);
    } while (next_assignment(s1, prior.domains));
  } while (next_assignment(s, prior.domains));
  normalize(out.p);
  return out;
}

// Multiplies in Omega(s', o) and renormalizes. Returns false when the
// observation has probability zero under the belief.
inline bool brute_condition(const ActionDbn& dbn, JointBelief& belief, const ObsVec& o) {
  StateVec s1(belief.domains.size(), 0);
  double total = 0.0;
  do {
    double& cell = belief.p[belief.index_of(s1)];
    cell *= psbf::observation_prob(dbn, s1, o);
    total += cell;
  } while (next_assignment(s1, belief.domains));
  if (total <= 0.0) return false;
  for (double& x : belief.p) x /= total;
  return true;
}

// Joint marginal over a sorted member list, mixed-radix indexed in member
// order (first member most significant) — the factor layout.
inline std::vector<double> brute_cluster_marginal(const JointBelief& belief,
                                                  const std::vector<int>& members) {
  std::size_t size = 1;
  for (int v : members) size *= static_cast<std::size_t>(belief.domains[v]);
  std::vector<double> out(size, 0.0);
  StateVec s(belief.domains.size(), 0);
  do {
    std::size_t idx = 0;
    for (int v : members) idx = idx * static_cast<std::size_t>(belief.domains[v]) +
                                static_cast<std::size_t>(s[v]);
    out[idx] += belief.p[belief.index_of(s)];
  } while (next_assignment(s, belief.domains));
  return out;
}

// Definition-level passivity check, independent of the CPT-row scanner:
// clause (i) requires the self t-parent (unless the domain is 1) and that
// every certificate member appears with both its t and t+1 copies; clause
// (ii) enumerates every state pair with positive transition probability and
// demands that x_var kept its value whenever all certificate members did.
// Probabilities are compared exactly: certifying rows in generated and
// hand-built networks are exact point masses.
inline bool brute_force_passive(const ActionDbn& dbn, int var,
                                const std::vector<int>& phi) {
  std::vector<int> domains;
  for (const auto& v : dbn.state_vars) domains.push_back(v.domain);
  if (domains[var] > 1 &&
      !dbn.has_edge(psbf::state_t(var), psbf::state_t1(var)))
    return false;
  for (int j : phi) {
    if (j == var) return false;
    if (!dbn.has_edge(psbf::state_t(j), psbf::state_t1(var))) return false;
    if (!dbn.has_edge(psbf::state_t1(j), psbf::state_t1(var))) return false;
  }
  StateVec s(domains.size(), 0);
  do {
    StateVec s1(domains.size(), 0);
    do {
      if (s1[var] == s[var]) continue;
      bool stable = true;
      for (int j : phi) {
        if (s1[j] != s[j]) {
          stable = false;
          break;
        }
      }
      if (!stable) continue;
      if (psbf::transition_prob(dbn, s, s1) > 0.0) return false;
    } while (next_assignment(s1, domains));
  } while (next_assignment(s, domains));
  return true;
}

// --- builders ---------------------------------------------------------------

inline ActionDbn identity_dbn(int n, int domain = 2, std::string name = "hold") {
  ActionDbn dbn;
  dbn.name = std::move(name);
  for (int i = 0; i < n; ++i) {
    dbn.state_vars.push_back({"x" + std::to_string(i), domain});
    dbn.state_cpts.push_back(psbf::identity_copy_cpt(i, domain));
  }
  dbn.derive_edges();
  return dbn;
}

// Appends an observation variable reading state var: correct with the given
// probability, remaining mass uniform over the other values.
inline void add_sensor(ActionDbn& dbn, int var, double correct,
                       std::string name = "") {
  const int d = dbn.state_vars[var].domain;
  const int j = dbn.m();
  if (name.empty()) name = "o" + std::to_string(var);
  dbn.obs_vars.push_back({std::move(name), d});
  Cpt cpt;
  cpt.child = psbf::obs_node(j);
  cpt.child_domain = d;
  cpt.parents = {psbf::state_t1(var)};
  cpt.parent_domains = {d};
  cpt.table.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int v = 0; v < d; ++v) {
    double* row = cpt.row(static_cast<std::size_t>(v));
    for (int u = 0; u < d; ++u)
      row[u] = (u == v) ? correct : (d > 1 ? (1.0 - correct) / (d - 1) : 0.0);
    if (d == 1) row[0] = 1.0;
  }
  dbn.obs_cpts.push_back(std::move(cpt));
  dbn.derive_edges();
}

// One binary variable that flips with probability p.
inline ActionDbn flip_dbn(double p, std::string name = "flip") {
  ActionDbn dbn;
  dbn.name = std::move(name);
  dbn.state_vars.push_back({"x0", 2});
  Cpt cpt;
  cpt.child = psbf::state_t1(0);
  cpt.child_domain = 2;
  cpt.parents = {psbf::state_t(0)};
  cpt.parent_domains = {2};
  cpt.table = {1.0 - p, p, p, 1.0 - p};
  dbn.state_cpts.push_back(std::move(cpt));
  dbn.derive_edges();
  return dbn;
}

// Two binary variables exchanging values every step: x0' = x1, x1' = x0.
inline ActionDbn swap_dbn(std::string name = "swap") {
  ActionDbn dbn;
  dbn.name = std::move(name);
  dbn.state_vars.push_back({"x0", 2});
  dbn.state_vars.push_back({"x1", 2});
  for (int i = 0; i < 2; ++i) {
    Cpt cpt;
    cpt.child = psbf::state_t1(i);
    cpt.child_domain = 2;
    cpt.parents = {psbf::state_t(1 - i)};
    cpt.parent_domains = {2};
    cpt.table = {1.0, 0.0, 0.0, 1.0};
    dbn.state_cpts.push_back(std::move(cpt));
  }
  dbn.derive_edges();
  return dbn;
}

inline Process wrap_process(ActionDbn dbn, std::string name = "test") {
  Process process;
  process.name = std::move(name);
  process.state_vars = dbn.state_vars;
  process.obs_vars = dbn.obs_vars;
  process.actions.push_back(std::move(dbn));
  return process;
}

// Random factored belief with strictly positive entries.
inline FactoredBelief random_belief(const std::vector<int>& domains,
                                    const Clustering& clustering, std::uint64_t seed) {
  FactoredBelief belief = FactoredBelief::uniform(domains, clustering);
  psbf::RngStream rng(seed, {0x72626c66});
  for (auto& factor : belief.factors()) {
    for (double& x : factor) x = 0.05 + rng.next_unit();
    normalize(factor);
  }
  return belief;
}

}  // namespace ts
