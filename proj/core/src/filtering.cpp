#include "psbf/filtering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "psbf/eval.hpp"
#include "psbf/rng.hpp"
#include "psbf/worker_pool.hpp"

namespace psbf {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_us(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start)
      .count();
}

// Stream address tags for the particle filter (arbitrary fixed constants).
constexpr std::uint64_t kPfPropagateTag = 0x70667072;
constexpr std::uint64_t kPfResampleTag = 0x70667273;
constexpr std::uint64_t kPfResetTag = 0x70667265;

int position_in(const std::vector<int>& sorted, int value) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
  return static_cast<int>(it - sorted.begin());
}

// Row-index plan for one table inside a cluster loop: every parent digit
// comes either from the outer assignment (t-parents / out-of-cluster sums),
// the cluster assignment, or a fixed observed value.
struct RowPlan {
  const Cpt* cpt = nullptr;
  std::size_t fixed = 0;                        // contribution of fixed digits
  std::vector<std::pair<int, std::size_t>> outer;    // (outer pos, stride)
  std::vector<std::pair<int, std::size_t>> cluster;  // (member pos, stride)

  std::size_t outer_base(const std::vector<int>& ovals) const {
    std::size_t row = fixed;
    for (const auto& [pos, stride] : outer)
      row += static_cast<std::size_t>(ovals[pos]) * stride;
    return row;
  }
  std::size_t cluster_part(const std::vector<int>& cvals) const {
    std::size_t row = 0;
    for (const auto& [pos, stride] : cluster)
      row += static_cast<std::size_t>(cvals[pos]) * stride;
    return row;
  }
};

std::vector<std::size_t> row_strides(const Cpt& cpt) {
  std::vector<std::size_t> strides(cpt.parents.size());
  std::size_t acc = 1;
  for (int s = static_cast<int>(cpt.parents.size()) - 1; s >= 0; --s) {
    strides[static_cast<std::size_t>(s)] = acc;
    acc *= static_cast<std::size_t>(cpt.parent_domains[static_cast<std::size_t>(s)]);
  }
  return strides;
}

// Advances a mixed-radix odometer; returns false once every value rolled over.
bool advance(std::vector<int>& vals, const std::vector<int>& domains) {
  for (int d = static_cast<int>(vals.size()) - 1; d >= 0; --d) {
    if (++vals[static_cast<std::size_t>(d)] < domains[static_cast<std::size_t>(d)])
      return true;
    vals[static_cast<std::size_t>(d)] = 0;
  }
  return false;
}

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::psbf: return "psbf";
    case FilterKind::bk: return "bk";
    case FilterKind::pf: return "pf";
    case FilterKind::exact: return "exact";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& text) {
  if (text == "psbf") return FilterKind::psbf;
  if (text == "bk") return FilterKind::bk;
  if (text == "pf") return FilterKind::pf;
  if (text == "exact") return FilterKind::exact;
  throw std::invalid_argument("unknown filter: " + text);
}

std::vector<double> factor_transition(const FactoredBelief& prior,
                                      const MarginalizedAction& act, int k) {
  const ActionDbn& dbn = *act.base;
  const Clustering& cl = prior.clustering();
  const std::vector<int>& members = cl.clusters[static_cast<std::size_t>(k)];

  // Union of the members' t-parents; their joint prior weight is the grouped
  // marginal of the previous belief.
  std::vector<int> tvars;
  for (int i : members) {
    for (const NodeRef& p : act.effective_cpt(i).parents) {
      if (p.kind == NodeKind::state_t) tvars.push_back(p.index);
    }
  }
  std::sort(tvars.begin(), tvars.end());
  tvars.erase(std::unique(tvars.begin(), tvars.end()), tvars.end());

  std::vector<RowPlan> plans;
  plans.reserve(members.size());
  for (int i : members) {
    const Cpt& cpt = act.effective_cpt(i);
    RowPlan plan;
    plan.cpt = &cpt;
    const auto strides = row_strides(cpt);
    for (std::size_t s = 0; s < cpt.parents.size(); ++s) {
      const NodeRef& p = cpt.parents[s];
      if (p.kind == NodeKind::state_t) {
        plan.outer.emplace_back(position_in(tvars, p.index), strides[s]);
      } else {
        // A1 holds for the effective tables: intra parents are cluster-local.
        plan.cluster.emplace_back(position_in(members, p.index), strides[s]);
      }
    }
    plans.push_back(std::move(plan));
  }

  std::vector<int> tdoms;
  tdoms.reserve(tvars.size());
  for (int v : tvars) tdoms.push_back(dbn.state_vars[static_cast<std::size_t>(v)].domain);
  std::vector<int> mdoms;
  mdoms.reserve(members.size());
  for (int v : members) mdoms.push_back(dbn.state_vars[static_cast<std::size_t>(v)].domain);

  const std::size_t fsize = prior.factors()[static_cast<std::size_t>(k)].size();
  std::vector<double> out(fsize, 0.0);
  GroupedMarginals weights(prior, tvars);

  std::vector<int> tvals(tvars.size(), 0);
  std::vector<int> cvals(members.size(), 0);
  std::vector<std::size_t> bases(members.size(), 0);
  do {
    const double w = weights.eval(tvals.data());
    if (w != 0.0) {
      for (std::size_t mi = 0; mi < members.size(); ++mi)
        bases[mi] = plans[mi].outer_base(tvals);
      std::fill(cvals.begin(), cvals.end(), 0);
      std::size_t ci = 0;
      do {
        double p = w;
        for (std::size_t mi = 0; mi < members.size(); ++mi) {
          const RowPlan& plan = plans[mi];
          const std::size_t row = bases[mi] + plan.cluster_part(cvals);
          p *= plan.cpt->table[row * static_cast<std::size_t>(plan.cpt->child_domain) +
                               static_cast<std::size_t>(cvals[mi])];
          if (p == 0.0) break;
        }
        out[ci++] += p;
      } while (advance(cvals, mdoms));
    }
  } while (advance(tvals, tdoms));

  double total = 0.0;
  for (double v : out) total += v;
  if (!(total > 0.0))
    throw DegenerateModelError("transition step produced an all-zero factor");
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> factor_observe(const FactoredBelief& predicted,
                                   const ActionDbn& dbn, int k, const ObsVec& o,
                                   OnZeroLikelihood on_zero) {
  const Clustering& cl = predicted.clustering();
  const std::vector<int>& members = cl.clusters[static_cast<std::size_t>(k)];
  std::vector<double> factor = predicted.factors()[static_cast<std::size_t>(k)];

  // Observation variables with at least one state parent inside the cluster.
  std::vector<int> relevant;
  for (std::size_t j = 0; j < dbn.obs_cpts.size(); ++j) {
    for (const NodeRef& p : dbn.obs_cpts[j].parents) {
      if (p.kind == NodeKind::state_t1 &&
          std::binary_search(members.begin(), members.end(), p.index)) {
        relevant.push_back(static_cast<int>(j));
        break;
      }
    }
  }
  if (relevant.empty()) return factor;  // untouched, deliberately unrenormalized

  std::vector<int> mdoms;
  mdoms.reserve(members.size());
  for (int v : members) mdoms.push_back(dbn.state_vars[static_cast<std::size_t>(v)].domain);

  std::vector<double> likelihood(factor.size());
  for (int j : relevant) {
    const Cpt& cpt = dbn.obs_cpts[static_cast<std::size_t>(j)];
    const auto strides = row_strides(cpt);

    // Out-of-cluster state parents get summed out under the predicted
    // marginals; observation parents are pinned to their observed values.
    std::vector<int> dvars;
    for (const NodeRef& p : cpt.parents) {
      if (p.kind == NodeKind::state_t1 &&
          !std::binary_search(members.begin(), members.end(), p.index)) {
        dvars.push_back(p.index);
      }
    }
    std::sort(dvars.begin(), dvars.end());
    dvars.erase(std::unique(dvars.begin(), dvars.end()), dvars.end());

    RowPlan plan;
    plan.cpt = &cpt;
    for (std::size_t s = 0; s < cpt.parents.size(); ++s) {
      const NodeRef& p = cpt.parents[s];
      if (p.kind == NodeKind::obs) {
        plan.fixed += static_cast<std::size_t>(o[static_cast<std::size_t>(p.index)]) *
                      strides[s];
      } else if (std::binary_search(members.begin(), members.end(), p.index)) {
        plan.cluster.emplace_back(position_in(members, p.index), strides[s]);
      } else {
        plan.outer.emplace_back(position_in(dvars, p.index), strides[s]);
      }
    }

    std::vector<int> ddoms;
    ddoms.reserve(dvars.size());
    for (int v : dvars)
      ddoms.push_back(dbn.state_vars[static_cast<std::size_t>(v)].domain);
    GroupedMarginals weights(predicted, dvars);

    std::fill(likelihood.begin(), likelihood.end(), 0.0);
    const std::size_t observed =
        static_cast<std::size_t>(o[static_cast<std::size_t>(j)]);
    std::vector<int> dvals(dvars.size(), 0);
    std::vector<int> cvals(members.size(), 0);
    do {
      const double w = weights.eval(dvals.data());
      if (w != 0.0) {
        const std::size_t base = plan.outer_base(dvals);
        std::fill(cvals.begin(), cvals.end(), 0);
        std::size_t ci = 0;
        do {
          const std::size_t row = base + plan.cluster_part(cvals);
          likelihood[ci++] +=
              w * cpt.table[row * static_cast<std::size_t>(cpt.child_domain) + observed];
        } while (advance(cvals, mdoms));
      }
    } while (advance(dvals, ddoms));

    for (std::size_t ci = 0; ci < factor.size(); ++ci) factor[ci] *= likelihood[ci];
  }

  double total = 0.0;
  for (double v : factor) total += v;
  if (!(total > 0.0)) {
    if (on_zero == OnZeroLikelihood::error)
      throw DegenerateModelError("observation has zero likelihood under factor " +
                                 std::to_string(k));
    const double uniform = 1.0 / static_cast<double>(factor.size());
    std::fill(factor.begin(), factor.end(), uniform);
    return factor;
  }
  for (double& v : factor) v /= total;
  return factor;
}

namespace {

std::pair<FactoredBelief, StepStats> step_impl(const FactoredBelief& belief,
                                               const ActionDbn& dbn, const ObsVec& o,
                                               const PassivityReport* analysis,
                                               const FilterOptions& opt,
                                               bool enable_skip) {
  StepStats stats;
  const Clustering& cl = belief.clustering();
  const std::size_t clusters = cl.clusters.size();
  stats.factors_total = static_cast<int>(clusters);

  const auto overhead_start = Clock::now();
  const std::vector<int> structural = marginalized_vars(dbn, cl);
  std::vector<char> skipped(clusters, 0);
  if (enable_skip) {
    for (std::size_t k = 0; k < clusters; ++k) {
      std::vector<int> modified;
      std::set_intersection(structural.begin(), structural.end(),
                            cl.clusters[k].begin(), cl.clusters[k].end(),
                            std::back_inserter(modified));
      skipped[k] = cluster_skippable(*analysis, cl.clusters[k], modified) ? 1 : 0;
    }
  }
  std::vector<int> needed;
  for (int v : structural) {
    if (!skipped[static_cast<std::size_t>(cl.owner[static_cast<std::size_t>(v)])])
      needed.push_back(v);
  }
  const MarginalizedAction act =
      marginalize_some(dbn, cl, belief, opt.marg, needed);
  stats.overhead_us = elapsed_us(overhead_start);

  const auto transition_start = Clock::now();
  FactoredBelief predicted = belief;  // skipped clusters keep the prior factor
  parallel_for(opt.threads, clusters, [&](std::size_t k) {
    if (!skipped[k])
      predicted.factors()[k] = factor_transition(belief, act, static_cast<int>(k));
  });
  for (char s : skipped) stats.factors_skipped += s ? 1 : 0;
  stats.transition_us = elapsed_us(transition_start);

  const auto observe_start = Clock::now();
  FactoredBelief posterior = predicted;
  parallel_for(opt.threads, clusters, [&](std::size_t k) {
    posterior.factors()[k] =
        factor_observe(predicted, dbn, static_cast<int>(k), o, opt.on_zero);
  });
  stats.observation_us = elapsed_us(observe_start);

  return {std::move(posterior), stats};
}

}  // namespace

std::pair<FactoredBelief, StepStats> psbf_step(const FactoredBelief& belief,
                                               const ActionDbn& dbn, const ObsVec& o,
                                               const PassivityReport& analysis,
                                               const FilterOptions& opt) {
  return step_impl(belief, dbn, o, &analysis, opt, true);
}

std::pair<FactoredBelief, StepStats> bk_step(const FactoredBelief& belief,
                                             const ActionDbn& dbn, const ObsVec& o,
                                             const FilterOptions& opt) {
  return step_impl(belief, dbn, o, nullptr, opt, false);
}

namespace {

JointBelief finish_exact(std::vector<double> weighted, std::vector<int> domains,
                         OnZeroLikelihood on_zero) {
  double total = 0.0;
  for (double v : weighted) total += v;
  JointBelief out;
  out.domains = std::move(domains);
  if (!(total > 0.0)) {
    if (on_zero == OnZeroLikelihood::error)
      throw DegenerateModelError("observation impossible under exact belief");
    out.p.assign(weighted.size(), 1.0 / static_cast<double>(weighted.size()));
    return out;
  }
  for (double& v : weighted) v /= total;
  out.p = std::move(weighted);
  return out;
}

}  // namespace

JointBelief exact_step(const JointBelief& belief, const ActionDbn& dbn, const ObsVec& o,
                       OnZeroLikelihood on_zero) {
  const std::size_t space = belief.p.size();
  const std::vector<int>& domains = belief.domains;
  std::vector<double> predicted(space, 0.0);

  StateVec s(domains.size(), 0);
  do {
    const double bs = belief.p[belief.index_of(s)];
    if (bs == 0.0) continue;
    StateVec s1(domains.size(), 0);
    std::size_t t = 0;
    do {
      predicted[t++] += bs * transition_prob(dbn, s, s1);
    } while (advance(s1, domains));
  } while (advance(s, domains));

  StateVec s1(domains.size(), 0);
  std::size_t t = 0;
  do {
    if (predicted[t] != 0.0) predicted[t] *= observation_prob(dbn, s1, o);
    ++t;
  } while (advance(s1, domains));

  return finish_exact(std::move(predicted), domains, on_zero);
}

ExactPropagator::ExactPropagator(const Process& process, std::size_t joint_cap,
                                 std::size_t matrix_cap)
    : process_(&process),
      space_(JointBelief::space_size(process.state_domains())),
      matrix_cap_(matrix_cap),
      matrices_(process.actions.size()) {
  if (space_ > joint_cap)
    throw std::length_error("state space exceeds the exact-filter cap");
}

JointBelief ExactPropagator::step(const JointBelief& belief, int action_index,
                                  const ObsVec& o, OnZeroLikelihood on_zero) {
  const ActionDbn& dbn = process_->actions[static_cast<std::size_t>(action_index)];
  const std::vector<int>& domains = belief.domains;
  std::vector<double>& matrix = matrices_[static_cast<std::size_t>(action_index)];

  if (matrix.empty() && space_ <= matrix_cap_ / space_) {
    matrix.resize(space_ * space_);
    StateVec s(domains.size(), 0);
    std::size_t si = 0;
    do {
      StateVec s1(domains.size(), 0);
      std::size_t t = 0;
      do {
        matrix[si * space_ + t++] = transition_prob(dbn, s, s1);
      } while (advance(s1, domains));
      ++si;
    } while (advance(s, domains));
  }
  if (matrix.empty()) return exact_step(belief, dbn, o, on_zero);

  std::vector<double> predicted(space_, 0.0);
  for (std::size_t si = 0; si < space_; ++si) {
    const double bs = belief.p[si];
    if (bs == 0.0) continue;
    const double* row = matrix.data() + si * space_;
    for (std::size_t t = 0; t < space_; ++t) predicted[t] += bs * row[t];
  }

  StateVec s1(domains.size(), 0);
  std::size_t t = 0;
  do {
    if (predicted[t] != 0.0) predicted[t] *= observation_prob(dbn, s1, o);
    ++t;
  } while (advance(s1, domains));

  return finish_exact(std::move(predicted), domains, on_zero);
}

ParticleSet pf_step(const ParticleSet& particles, const ActionDbn& dbn, const ObsVec& o,
                    std::uint64_t seed, std::uint64_t step_index,
                    const FilterOptions& opt) {
  const std::size_t count = particles.states.size();
  if (count == 0) return particles;
  ParticleSet moved;
  moved.states.resize(count);
  moved.weights.resize(count);
  const TransitionSampler sampler(dbn);

  parallel_for(opt.threads, count, [&](std::size_t i) {
    RngStream rng(seed, {kPfPropagateTag, step_index, static_cast<std::uint64_t>(i)});
    sampler.sample(particles.states[i], moved.states[i], rng);
    moved.weights[i] =
        particles.weights[i] * observation_prob(dbn, moved.states[i], o);
  });

  // Serial accumulation in index order keeps the total thread-count
  // independent.
  double total = 0.0;
  for (double w : moved.weights) total += w;
  if (!(total > 0.0)) {
    if (opt.on_zero == OnZeroLikelihood::error)
      throw DegenerateModelError("observation killed every particle");
    std::vector<int> domains;
    domains.reserve(dbn.state_vars.size());
    for (const VariableSpec& v : dbn.state_vars) domains.push_back(v.domain);
    RngStream reset(seed, {kPfResetTag, step_index});
    return ParticleSet::uniform_init(domains, static_cast<int>(count),
                                     reset.next_u64());
  }

  // Systematic resampling with a single uniform draw.
  RngStream pick(seed, {kPfResampleTag, step_index});
  const double stride = total / static_cast<double>(count);
  double position = pick.next_unit() * stride;

  ParticleSet out;
  out.states.resize(count);
  out.weights.assign(count, 1.0 / static_cast<double>(count));
  double cumulative = moved.weights[0];
  std::size_t index = 0;
  for (std::size_t j = 0; j < count; ++j) {
    while (cumulative < position && index + 1 < count)
      cumulative += moved.weights[++index];
    out.states[j] = moved.states[index];
    position += stride;
  }
  return out;
}

}  // namespace psbf
