#pragma once

#include <cstdint>
#include <vector>

#include "psbf/clustering.hpp"
#include "psbf/dbn.hpp"

namespace psbf {

// Belief as a product of per-cluster factors. factors[k] is a distribution
// over the joint values of cluster k's members, mixed-radix indexed in member
// order (first member most significant).
class FactoredBelief {
public:
  FactoredBelief() = default;
  FactoredBelief(std::vector<int> domains, Clustering clustering);

  static FactoredBelief uniform(std::vector<int> domains, Clustering clustering);
  static FactoredBelief delta(std::vector<int> domains, Clustering clustering,
                              const StateVec& state);

  const Clustering& clustering() const { return clustering_; }
  const std::vector<int>& domains() const { return domains_; }
  int n() const { return static_cast<int>(domains_.size()); }

  std::vector<std::vector<double>>& factors() { return factors_; }
  const std::vector<std::vector<double>>& factors() const { return factors_; }

  // Probability of a full assignment under the product form.
  double prob(const StateVec& s) const;

  // Index of a full assignment inside factor k.
  std::size_t factor_index(int k, const StateVec& s) const;

  // Marginal of factor k over a sorted subset of its members, mixed-radix
  // indexed in subset order.
  std::vector<double> marginal(int k, const std::vector<int>& subset) const;

  // Single-variable marginal.
  std::vector<double> var_marginal(int var) const;

private:
  std::vector<int> domains_;
  Clustering clustering_;
  std::vector<std::vector<double>> factors_;
};

// Product of within-cluster joint marginals of a belief over a sorted variable
// set: variables sharing a cluster are weighted by their joint marginal,
// variables in different clusters independently. This is the weight the
// factored form assigns to a partial assignment.
class GroupedMarginals {
public:
  GroupedMarginals() = default;
  GroupedMarginals(const FactoredBelief& belief, const std::vector<int>& vars);

  // vals is aligned with the `vars` list passed at construction.
  double eval(const int* vals) const;

private:
  struct Group {
    std::vector<int> positions;  // indices into the vars list
    std::vector<int> domains;
    std::vector<double> table;
  };
  std::vector<Group> groups_;
};

// Explicit joint distribution; usable only while the state space fits the cap.
inline constexpr std::size_t kDefaultJointCap = std::size_t{1} << 20;

struct JointBelief {
  std::vector<int> domains;
  std::vector<double> p;

  static std::size_t space_size(const std::vector<int>& domains);
  static JointBelief uniform(std::vector<int> domains,
                             std::size_t cap = kDefaultJointCap);
  static JointBelief from_factored(const FactoredBelief& fb,
                                   std::size_t cap = kDefaultJointCap);

  std::size_t index_of(const StateVec& s) const;
  std::vector<double> var_marginal(int var) const;
};

struct ParticleSet {
  std::vector<StateVec> states;
  std::vector<double> weights;  // kept normalized between steps

  static ParticleSet uniform_init(const std::vector<int>& domains, int count,
                                  std::uint64_t seed);
  std::vector<double> var_marginal(int var, int domain) const;
};

// Relative entropy KL(exact || approx) in bits. Zero-probability exact states
// contribute nothing; the approximation is floored at kKlEpsilon inside the log.
inline constexpr double kKlEpsilon = 1e-12;

double relative_entropy(const JointBelief& exact, const JointBelief& approx);
double relative_entropy(const JointBelief& exact, const FactoredBelief& approx);
double relative_entropy(const JointBelief& exact, const ParticleSet& approx);

}  // namespace psbf
