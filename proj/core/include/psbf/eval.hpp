#pragma once

#include "psbf/dbn.hpp"
#include "psbf/rng.hpp"

namespace psbf {

// T^a(s, s'): product over state tables with parents read from (s, s').
double transition_prob(const ActionDbn& dbn, const StateVec& s, const StateVec& s1);

// Omega^a(s', o): product over observation tables with parents read from (s', o).
double observation_prob(const ActionDbn& dbn, const StateVec& s1, const ObsVec& o);

// Topological order of the t+1 state nodes under intra-slice edges, stable by
// declaration index among nodes of equal depth.
std::vector<int> state_topo_order(const ActionDbn& dbn);

// Same for observation nodes (obs -> obs edges).
std::vector<int> obs_topo_order(const ActionDbn& dbn);

// Precomputed sampling plan; amortizes the topological sort across many draws.
class TransitionSampler {
public:
  explicit TransitionSampler(const ActionDbn& dbn);
  void sample(const StateVec& s, StateVec& out, RngStream& rng) const;

private:
  const ActionDbn* dbn_;
  std::vector<int> order_;
};

class ObservationSampler {
public:
  explicit ObservationSampler(const ActionDbn& dbn);
  void sample(const StateVec& s1, ObsVec& out, RngStream& rng) const;

private:
  const ActionDbn* dbn_;
  std::vector<int> order_;
};

StateVec sample_transition(const ActionDbn& dbn, const StateVec& s, RngStream& rng);
ObsVec sample_observation(const ActionDbn& dbn, const StateVec& s1, RngStream& rng);

}  // namespace psbf
