#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psbf/belief.hpp"
#include "psbf/clustering.hpp"
#include "psbf/dbn.hpp"
#include "psbf/passivity.hpp"

namespace psbf {

// Raised when a step hits an impossible observation (or a corrupted belief)
// and the zero-likelihood policy is `error`.
class DegenerateModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class OnZeroLikelihood { error, uniform_reset };

enum class FilterKind { psbf, bk, pf, exact };
std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& text);

struct FilterOptions {
  int threads = 1;
  OnZeroLikelihood on_zero = OnZeroLikelihood::error;
  MarginalizeMode marg = MarginalizeMode::prior;
};

struct StepStats {
  int factors_total = 0;
  int factors_skipped = 0;
  std::int64_t transition_us = 0;
  std::int64_t observation_us = 0;
  std::int64_t overhead_us = 0;  // skip decisions + marginalization bookkeeping
};

// Predicted factor for cluster k: sums the cluster's transition products over
// all assignments to the union of the members' t-parents, each weighted by
// the prior's grouped marginals, then normalizes.
std::vector<double> factor_transition(const FactoredBelief& prior,
                                      const MarginalizedAction& act, int k);

// Conditions factor k of the predicted belief on the observation variables
// that have at least one state parent inside the cluster. Out-of-cluster
// state parents are integrated out under the predicted grouped marginals;
// observation-variable parents take their observed values. When no
// observation variable touches the cluster, the factor is returned verbatim.
std::vector<double> factor_observe(const FactoredBelief& predicted,
                                   const ActionDbn& dbn, int k, const ObsVec& o,
                                   OnZeroLikelihood on_zero);

// One PSBF step: decide per-cluster skips from the passivity report, build
// replacement CPTs only where a surviving cluster needs them, run the
// transition phase (skipped clusters keep their prior factor), then condition
// every cluster on the observation.
std::pair<FactoredBelief, StepStats> psbf_step(const FactoredBelief& belief,
                                               const ActionDbn& dbn, const ObsVec& o,
                                               const PassivityReport& analysis,
                                               const FilterOptions& opt = {});

// Boyen–Koller step: identical machinery with the skip rule disabled.
std::pair<FactoredBelief, StepStats> bk_step(const FactoredBelief& belief,
                                             const ActionDbn& dbn, const ObsVec& o,
                                             const FilterOptions& opt = {});

// One exact step: b'(s') ∝ Ω(s', o) · Σ_s T(s, s') b(s). Cost is quadratic in
// the state-space size; use ExactPropagator for repeated steps.
JointBelief exact_step(const JointBelief& belief, const ActionDbn& dbn, const ObsVec& o,
                       OnZeroLikelihood on_zero = OnZeroLikelihood::error);

// Exact filter with a dense per-action transition matrix, built lazily on the
// first step that uses the action and reused afterwards. Falls back to
// on-the-fly transition evaluation when the matrix would exceed matrix_cap
// entries. Not safe for concurrent step() calls on one instance.
class ExactPropagator {
public:
  explicit ExactPropagator(const Process& process,
                           std::size_t joint_cap = kDefaultJointCap,
                           std::size_t matrix_cap = std::size_t{1} << 22);

  JointBelief step(const JointBelief& belief, int action_index, const ObsVec& o,
                   OnZeroLikelihood on_zero = OnZeroLikelihood::error);

  std::size_t state_space() const { return space_; }

private:
  const Process* process_;
  std::size_t space_;
  std::size_t matrix_cap_;
  std::vector<std::vector<double>> matrices_;  // [action][s * space_ + s']
};

// One bootstrap-SIR step: propagate every particle through the transition
// model, weight by the observation probability, systematic-resample back to
// uniform weights. Randomness is drawn from per-particle streams addressed by
// (seed, step_index, particle), so results are thread-count independent.
ParticleSet pf_step(const ParticleSet& particles, const ActionDbn& dbn, const ObsVec& o,
                    std::uint64_t seed, std::uint64_t step_index,
                    const FilterOptions& opt = {});

}  // namespace psbf
