#pragma once

#include <vector>

#include "psbf/dbn.hpp"

namespace psbf {

// A CPT row counts as deterministic when it puts at least 1 - this on one value.
inline constexpr double kDeterministicRowTol = 1e-9;

enum class Verdict { active, passive };

struct PassivityVerdict {
  Verdict verdict = Verdict::active;
  // Variable ids whose t-copies form the certifying set: x_i can only change
  // when one of these changed in the same step. Empty for variables that can
  // never change at all.
  std::vector<int> phi;

  bool passive() const { return verdict == Verdict::passive; }
};

// Classifies x_i in the given action network.
//
// Candidate set phi_max = all j != i with x_j@t a parent of x_i@t1 and the
// intra-slice edge x_j@t1 -> x_i@t1 present. The variable is passive iff its
// own t-copy is a parent (or the domain is 1, where it trivially never
// changes) and every CPT row in which each phi_max member keeps its value
// assigns probability >= 1 - kDeterministicRowTol to copying x_i@t. Checking
// only phi_max suffices: a larger certifying set only weakens the condition.
PassivityVerdict detect_passive(const ActionDbn& dbn, int var);

struct PassivityReport {
  std::vector<PassivityVerdict> verdicts;  // one per state variable
  // reachable[i] != 0 iff some variable that can actually change reaches x_i
  // along intra-slice edges through passive variables (x_(q) in phi(x_(q+1))
  // at every hop). Active variables are themselves reachable.
  std::vector<char> reachable;

  int passive_count() const;
};

PassivityReport detect_all(const ActionDbn& dbn);

// The transition of a cluster may be skipped when every unmodified member is
// passive and nothing that changes can reach the cluster. `modified` lists the
// members whose tables were replaced when restoring cluster-local parents.
bool cluster_skippable(const PassivityReport& report, const std::vector<int>& cluster,
                       const std::vector<int>& modified);

}  // namespace psbf
