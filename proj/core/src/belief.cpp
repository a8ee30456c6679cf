#include "psbf/belief.hpp"

#include <cmath>
#include <stdexcept>

#include "psbf/rng.hpp"

namespace psbf {

FactoredBelief::FactoredBelief(std::vector<int> domains, Clustering clustering)
    : domains_(std::move(domains)), clustering_(std::move(clustering)) {
  factors_.resize(clustering_.clusters.size());
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    std::size_t size = 1;
    for (int v : clustering_.clusters[k]) size *= domains_[v];
    factors_[k].assign(size, 0.0);
  }
}

FactoredBelief FactoredBelief::uniform(std::vector<int> domains, Clustering clustering) {
  FactoredBelief fb;
  fb.domains_ = std::move(domains);
  fb.clustering_ = std::move(clustering);
  fb.factors_.resize(fb.clustering_.clusters.size());
  for (std::size_t k = 0; k < fb.factors_.size(); ++k) {
    std::size_t size = 1;
    for (int v : fb.clustering_.clusters[k]) size *= fb.domains_[v];
    fb.factors_[k].assign(size, 1.0 / static_cast<double>(size));
  }
  return fb;
}

FactoredBelief FactoredBelief::delta(std::vector<int> domains, Clustering clustering,
                                     const StateVec& state) {
  FactoredBelief fb = uniform(std::move(domains), std::move(clustering));
  for (std::size_t k = 0; k < fb.factors_.size(); ++k) {
    std::fill(fb.factors_[k].begin(), fb.factors_[k].end(), 0.0);
    fb.factors_[k][fb.factor_index(static_cast<int>(k), state)] = 1.0;
  }
  return fb;
}

std::size_t FactoredBelief::factor_index(int k, const StateVec& s) const {
  std::size_t idx = 0;
  for (int v : clustering_.clusters[k]) {
    idx = idx * static_cast<std::size_t>(domains_[v]) + static_cast<std::size_t>(s[v]);
  }
  return idx;
}

double FactoredBelief::prob(const StateVec& s) const {
  double p = 1.0;
  for (int k = 0; k < clustering_.size(); ++k) {
    p *= factors_[k][factor_index(k, s)];
    if (p == 0.0) return 0.0;
  }
  return p;
}

std::vector<double> FactoredBelief::marginal(int k, const std::vector<int>& subset) const {
  const std::vector<int>& cluster = clustering_.clusters[k];
  std::size_t out_size = 1;
  for (int v : subset) out_size *= domains_[v];
  std::vector<double> out(out_size, 0.0);

  // Position of each subset member inside the cluster.
  std::vector<int> member_pos(subset.size());
  for (std::size_t q = 0; q < subset.size(); ++q) {
    int pos = -1;
    for (std::size_t c = 0; c < cluster.size(); ++c) {
      if (cluster[c] == subset[q]) pos = static_cast<int>(c);
    }
    if (pos < 0) throw std::invalid_argument("marginal: variable not in cluster");
    member_pos[q] = pos;
  }

  std::vector<int> digits(cluster.size(), 0);
  const std::vector<double>& f = factors_[k];
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    std::size_t sub = 0;
    for (std::size_t q = 0; q < subset.size(); ++q) {
      sub = sub * static_cast<std::size_t>(domains_[subset[q]]) +
            static_cast<std::size_t>(digits[member_pos[q]]);
    }
    out[sub] += f[idx];
    for (int c = static_cast<int>(cluster.size()) - 1; c >= 0; --c) {
      if (++digits[c] < domains_[cluster[c]]) break;
      digits[c] = 0;
    }
  }
  return out;
}

std::vector<double> FactoredBelief::var_marginal(int var) const {
  return marginal(clustering_.owner[var], {var});
}

GroupedMarginals::GroupedMarginals(const FactoredBelief& belief,
                                   const std::vector<int>& vars) {
  const Clustering& cl = belief.clustering();
  // Gather the vars of each touched cluster in encounter order; vars is
  // sorted, so each group's member list is sorted as marginal() requires.
  std::vector<int> group_of_cluster(cl.size(), -1);
  std::vector<std::vector<int>> group_vars;
  std::vector<std::vector<int>> group_positions;
  for (std::size_t q = 0; q < vars.size(); ++q) {
    const int k = cl.owner[vars[q]];
    if (group_of_cluster[k] < 0) {
      group_of_cluster[k] = static_cast<int>(group_vars.size());
      group_vars.emplace_back();
      group_positions.emplace_back();
    }
    group_vars[group_of_cluster[k]].push_back(vars[q]);
    group_positions[group_of_cluster[k]].push_back(static_cast<int>(q));
  }
  groups_.resize(group_vars.size());
  for (std::size_t g = 0; g < group_vars.size(); ++g) {
    Group& group = groups_[g];
    group.positions = group_positions[g];
    for (int v : group_vars[g]) group.domains.push_back(belief.domains()[v]);
    group.table = belief.marginal(cl.owner[group_vars[g][0]], group_vars[g]);
  }
}

double GroupedMarginals::eval(const int* vals) const {
  double w = 1.0;
  for (const Group& g : groups_) {
    std::size_t idx = 0;
    for (std::size_t q = 0; q < g.positions.size(); ++q) {
      idx = idx * static_cast<std::size_t>(g.domains[q]) +
            static_cast<std::size_t>(vals[g.positions[q]]);
    }
    w *= g.table[idx];
    if (w == 0.0) return 0.0;
  }
  return w;
}

std::size_t JointBelief::space_size(const std::vector<int>& domains) {
  std::size_t size = 1;
  for (int d : domains) {
    if (d > 0 && size > (std::size_t{1} << 62) / static_cast<std::size_t>(d)) {
      return std::size_t{1} << 63;  // saturate; always above any sane cap
    }
    size *= static_cast<std::size_t>(d);
  }
  return size;
}

JointBelief JointBelief::uniform(std::vector<int> domains, std::size_t cap) {
  const std::size_t size = space_size(domains);
  if (size > cap) throw std::length_error("JointBelief: state space exceeds cap");
  JointBelief jb;
  jb.domains = std::move(domains);
  jb.p.assign(size, 1.0 / static_cast<double>(size));
  return jb;
}

JointBelief JointBelief::from_factored(const FactoredBelief& fb, std::size_t cap) {
  const std::size_t size = space_size(fb.domains());
  if (size > cap) throw std::length_error("JointBelief: state space exceeds cap");
  JointBelief jb;
  jb.domains = fb.domains();
  jb.p.resize(size);
  StateVec s(fb.n(), 0);
  for (std::size_t idx = 0; idx < size; ++idx) {
    jb.p[idx] = fb.prob(s);
    for (int v = fb.n() - 1; v >= 0; --v) {
      if (++s[v] < jb.domains[v]) break;
      s[v] = 0;
    }
  }
  return jb;
}

std::size_t JointBelief::index_of(const StateVec& s) const {
  std::size_t idx = 0;
  for (std::size_t v = 0; v < domains.size(); ++v) {
    idx = idx * static_cast<std::size_t>(domains[v]) + static_cast<std::size_t>(s[v]);
  }
  return idx;
}

std::vector<double> JointBelief::var_marginal(int var) const {
  std::vector<double> out(domains[var], 0.0);
  StateVec s(domains.size(), 0);
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    out[s[var]] += p[idx];
    for (int v = static_cast<int>(domains.size()) - 1; v >= 0; --v) {
      if (++s[v] < domains[v]) break;
      s[v] = 0;
    }
  }
  return out;
}

ParticleSet ParticleSet::uniform_init(const std::vector<int>& domains, int count,
                                      std::uint64_t seed) {
  ParticleSet ps;
  ps.states.resize(count);
  ps.weights.assign(count, 1.0 / static_cast<double>(count));
  for (int i = 0; i < count; ++i) {
    RngStream rng(seed, {0x1717u, static_cast<std::uint64_t>(i)});
    StateVec& s = ps.states[i];
    s.resize(domains.size());
    for (std::size_t v = 0; v < domains.size(); ++v) {
      s[v] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(domains[v])));
    }
  }
  return ps;
}

std::vector<double> ParticleSet::var_marginal(int var, int domain) const {
  std::vector<double> out(domain, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) out[states[i][var]] += weights[i];
  return out;
}

namespace {

template <typename ApproxFn>
double kl_bits(const JointBelief& exact, ApproxFn&& approx_prob) {
  double kl = 0.0;
  StateVec s(exact.domains.size(), 0);
  for (std::size_t idx = 0; idx < exact.p.size(); ++idx) {
    const double e = exact.p[idx];
    if (e > 0.0) {
      const double a = std::max(approx_prob(idx, s), kKlEpsilon);
      kl += e * std::log2(e / a);
    }
    for (int v = static_cast<int>(exact.domains.size()) - 1; v >= 0; --v) {
      if (++s[v] < exact.domains[v]) break;
      s[v] = 0;
    }
  }
  return kl;
}

}  // namespace

double relative_entropy(const JointBelief& exact, const JointBelief& approx) {
  if (exact.p.size() != approx.p.size())
    throw std::invalid_argument("relative_entropy: mismatched state spaces");
  return kl_bits(exact, [&](std::size_t idx, const StateVec&) { return approx.p[idx]; });
}

double relative_entropy(const JointBelief& exact, const FactoredBelief& approx) {
  return kl_bits(exact, [&](std::size_t, const StateVec& s) { return approx.prob(s); });
}

double relative_entropy(const JointBelief& exact, const ParticleSet& approx) {
  // Histogram of particle mass over the joint space.
  std::vector<double> hist(exact.p.size(), 0.0);
  for (std::size_t i = 0; i < approx.states.size(); ++i) {
    hist[exact.index_of(approx.states[i])] += approx.weights[i];
  }
  return kl_bits(exact, [&](std::size_t idx, const StateVec&) { return hist[idx]; });
}

}  // namespace psbf
