#include "psbf/eval.hpp"

#include <algorithm>
#include <stdexcept>

namespace psbf {

namespace {

// Longest-path depth over the given intra-slice adjacency, then (depth, index).
std::vector<int> stable_topo(const std::vector<std::vector<int>>& parents_of) {
  const int n = static_cast<int>(parents_of.size());
  std::vector<int> depth(n, -1);
  // parents_of is acyclic for validated inputs; resolve depths iteratively.
  bool changed = true;
  int guard = 0;
  while (changed) {
    changed = false;
    if (++guard > n + 1) throw std::logic_error("stable_topo: cyclic intra-slice graph");
    for (int i = 0; i < n; ++i) {
      int d = 0;
      bool ready = true;
      for (int p : parents_of[i]) {
        if (depth[p] < 0) {
          ready = false;
          break;
        }
        d = std::max(d, depth[p] + 1);
      }
      if (ready && depth[i] != d) {
        depth[i] = d;
        changed = true;
      }
    }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return depth[a] < depth[b]; });
  return order;
}

inline int parent_value(const NodeRef& p, const StateVec& s, const StateVec& s1,
                        const ObsVec* o) {
  switch (p.kind) {
    case NodeKind::state_t:
      return s[p.index];
    case NodeKind::state_t1:
      return s1[p.index];
    case NodeKind::obs:
      return (*o)[p.index];
  }
  return 0;
}

}  // namespace

double transition_prob(const ActionDbn& dbn, const StateVec& s, const StateVec& s1) {
  double prod = 1.0;
  int vals[64];
  for (int i = 0; i < dbn.n(); ++i) {
    const Cpt& c = dbn.state_cpts[i];
    if (c.parents.size() > 64) throw std::invalid_argument("transition_prob: too many parents");
    for (std::size_t k = 0; k < c.parents.size(); ++k) {
      vals[k] = parent_value(c.parents[k], s, s1, nullptr);
    }
    prod *= c.row(c.row_index(vals))[s1[i]];
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double observation_prob(const ActionDbn& dbn, const StateVec& s1, const ObsVec& o) {
  double prod = 1.0;
  int vals[64];
  for (int j = 0; j < dbn.m(); ++j) {
    const Cpt& c = dbn.obs_cpts[j];
    if (c.parents.size() > 64) throw std::invalid_argument("observation_prob: too many parents");
    for (std::size_t k = 0; k < c.parents.size(); ++k) {
      vals[k] = parent_value(c.parents[k], s1, s1, &o);
    }
    prod *= c.row(c.row_index(vals))[o[j]];
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

std::vector<int> state_topo_order(const ActionDbn& dbn) {
  std::vector<std::vector<int>> parents_of(dbn.n());
  for (int i = 0; i < dbn.n(); ++i) parents_of[i] = dbn.intra_state_parents(i);
  return stable_topo(parents_of);
}

std::vector<int> obs_topo_order(const ActionDbn& dbn) {
  std::vector<std::vector<int>> parents_of(dbn.m());
  for (int j = 0; j < dbn.m(); ++j) {
    for (const NodeRef& p : dbn.obs_cpts[j].parents) {
      if (p.kind == NodeKind::obs) parents_of[j].push_back(p.index);
    }
  }
  return stable_topo(parents_of);
}

TransitionSampler::TransitionSampler(const ActionDbn& dbn)
    : dbn_(&dbn), order_(state_topo_order(dbn)) {}

void TransitionSampler::sample(const StateVec& s, StateVec& out, RngStream& rng) const {
  out.assign(dbn_->n(), 0);
  int vals[64];
  for (int i : order_) {
    const Cpt& c = dbn_->state_cpts[i];
    for (std::size_t k = 0; k < c.parents.size(); ++k) {
      vals[k] = parent_value(c.parents[k], s, out, nullptr);
    }
    out[i] = rng.next_categorical(c.row(c.row_index(vals)), c.child_domain);
  }
}

ObservationSampler::ObservationSampler(const ActionDbn& dbn)
    : dbn_(&dbn), order_(obs_topo_order(dbn)) {}

void ObservationSampler::sample(const StateVec& s1, ObsVec& out, RngStream& rng) const {
  out.assign(dbn_->m(), 0);
  int vals[64];
  for (int j : order_) {
    const Cpt& c = dbn_->obs_cpts[j];
    for (std::size_t k = 0; k < c.parents.size(); ++k) {
      vals[k] = parent_value(c.parents[k], s1, s1, &out);
    }
    out[j] = rng.next_categorical(c.row(c.row_index(vals)), c.child_domain);
  }
}

StateVec sample_transition(const ActionDbn& dbn, const StateVec& s, RngStream& rng) {
  StateVec out;
  TransitionSampler(dbn).sample(s, out, rng);
  return out;
}

ObsVec sample_observation(const ActionDbn& dbn, const StateVec& s1, RngStream& rng) {
  ObsVec out;
  ObservationSampler(dbn).sample(s1, out, rng);
  return out;
}

}  // namespace psbf
