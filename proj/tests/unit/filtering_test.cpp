#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "psbf/belief.hpp"
#include "psbf/clustering.hpp"
#include "psbf/eval.hpp"
#include "psbf/filtering.hpp"
#include "psbf/passivity.hpp"
#include "psbf/rng.hpp"
#include "psbf/synthgen.hpp"
#include "psbf/validate.hpp"
#include "support.hpp"

using namespace psbf;

namespace {

Clustering stored_components(const Process& process) {
  for (const NamedClustering& nc : process.clusterings) {
    if (nc.name == "components") return Clustering::from_clusters(nc.clusters, process.n());
  }
  return components_clusters(process);
}

// Posterior joint from first principles: push forward, weight by the
// observation, normalize.
JointBelief brute_posterior(const ActionDbn& dbn, const JointBelief& prior,
                            const ObsVec& o) {
  JointBelief next = ts::brute_push_forward(dbn, prior);
  REQUIRE(ts::brute_condition(dbn, next, o));
  return next;
}

}  // namespace

TEST_CASE("factor_transition: identity dynamics keep every factor") {
  const ActionDbn dbn = ts::identity_dbn(4);
  const Clustering c = Clustering::from_clusters({{0, 1}, {2}, {3}}, 4);
  const FactoredBelief prior = ts::random_belief({2, 2, 2, 2}, c, 31);
  const MarginalizedAction act = marginalize(dbn, c, prior);
  for (int k = 0; k < c.size(); ++k) {
    const std::vector<double> out = factor_transition(prior, act, k);
    CHECK(ts::max_abs_diff(out, prior.factors()[static_cast<std::size_t>(k)]) < 1e-15);
  }
}

TEST_CASE("factor_transition: flip dynamics mix the point mass") {
  const ActionDbn dbn = ts::flip_dbn(0.3);
  const Clustering c = singleton_clusters(1);
  const FactoredBelief prior = FactoredBelief::delta({2}, c, {0});
  const MarginalizedAction act = marginalize(dbn, c, prior);
  const std::vector<double> out = factor_transition(prior, act, 0);
  CHECK(out[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("factor_transition: cluster-local networks reproduce exact marginals") {
  // When every cluster is parent-closed, the predicted factor must equal the
  // exact one-step cluster marginal of the product prior.
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    SynthParams params;
    params.n = 6;
    params.m = 2;
    params.passivity_pct = static_cast<int>((seed % 3) * 30);
    params.seed = 5000 + seed;
    const Process process = generate(params);
    const Clustering c = stored_components(process);
    const FactoredBelief prior =
        ts::random_belief(process.state_domains(), c, 5100 + seed);
    const JointBelief joint = JointBelief::from_factored(prior);
    for (const ActionDbn& dbn : process.actions) {
      const MarginalizedAction act = marginalize(dbn, c, prior);
      REQUIRE(act.modified.empty());  // components satisfy locality
      const JointBelief pushed = ts::brute_push_forward(dbn, joint);
      for (int k = 0; k < c.size(); ++k) {
        std::vector<double> expect =
            ts::brute_cluster_marginal(pushed, c.clusters[static_cast<std::size_t>(k)]);
        ts::normalize(expect);
        const std::vector<double> got = factor_transition(prior, act, k);
        CHECK(ts::max_abs_diff(got, expect) < 1e-10);
      }
    }
  }
}

TEST_CASE("factor_observe: an uninformative sensor changes nothing") {
  ActionDbn dbn = ts::identity_dbn(2);
  ts::add_sensor(dbn, 0, 0.5);  // both rows are (0.5, 0.5)
  const Clustering c = singleton_clusters(2);
  const FactoredBelief predicted = ts::random_belief({2, 2}, c, 32);
  const std::vector<double> out = factor_observe(predicted, dbn, 0, {1},
                                                 OnZeroLikelihood::error);
  CHECK(ts::max_abs_diff(out, predicted.factors()[0]) < 1e-15);
}

TEST_CASE("factor_observe: a noiseless reading collapses the factor") {
  ActionDbn dbn = ts::identity_dbn(1);
  ts::add_sensor(dbn, 0, 1.0);
  const Clustering c = singleton_clusters(1);
  const FactoredBelief predicted = FactoredBelief::uniform({2}, c);
  const std::vector<double> out = factor_observe(predicted, dbn, 0, {1},
                                                 OnZeroLikelihood::error);
  CHECK(out == std::vector<double>{0.0, 1.0});
}

TEST_CASE("factor_observe: clusters without sensors are returned verbatim") {
  ActionDbn dbn = ts::identity_dbn(2);
  ts::add_sensor(dbn, 0, 0.9);
  const Clustering c = singleton_clusters(2);
  const FactoredBelief predicted = ts::random_belief({2, 2}, c, 33);
  const std::vector<double> out = factor_observe(predicted, dbn, 1, {0},
                                                 OnZeroLikelihood::error);
  CHECK(ts::bitwise_equal(out, predicted.factors()[1]));
}

TEST_CASE("factor_observe: out-of-cluster sensor parents use predicted weights") {
  // One sensor reads the parity-ish mix of both variables while the
  // clustering splits them, so conditioning factor 0 must integrate the
  // neighbor out under the predicted marginals. With a product belief that
  // matches the exact joint conditional's own marginal only when computed
  // the same way, so compare against the explicit sum.
  ActionDbn dbn = ts::identity_dbn(2);
  dbn.obs_vars.push_back({"pair", 2});
  Cpt cpt;
  cpt.child = obs_node(0);
  cpt.child_domain = 2;
  cpt.parents = {state_t1(0), state_t1(1)};
  cpt.parent_domains = {2, 2};
  cpt.table = {0.9, 0.1, 0.3, 0.7, 0.4, 0.6, 0.05, 0.95};
  dbn.obs_cpts.push_back(std::move(cpt));
  dbn.derive_edges();
  REQUIRE(validate_dbn(dbn).empty());

  const Clustering c = singleton_clusters(2);
  const FactoredBelief predicted = ts::random_belief({2, 2}, c, 34);
  const std::vector<double> out = factor_observe(predicted, dbn, 0, {1},
                                                 OnZeroLikelihood::error);

  const std::vector<double> m1 = predicted.var_marginal(1);
  const Cpt& table = dbn.obs_cpts[0];
  std::vector<double> expect(2, 0.0);
  for (int v0 = 0; v0 < 2; ++v0) {
    double like = 0.0;
    for (int v1 = 0; v1 < 2; ++v1) {
      const int vals[2] = {v0, v1};
      like += m1[static_cast<std::size_t>(v1)] * table.row(table.row_index(vals))[1];
    }
    expect[static_cast<std::size_t>(v0)] =
        predicted.factors()[0][static_cast<std::size_t>(v0)] * like;
  }
  ts::normalize(expect);
  CHECK(ts::max_abs_diff(out, expect) < 1e-12);
}

TEST_CASE("factor_observe: zero likelihood follows the policy") {
  ActionDbn dbn = ts::identity_dbn(1);
  ts::add_sensor(dbn, 0, 1.0);
  const Clustering c = singleton_clusters(1);
  const FactoredBelief predicted = FactoredBelief::delta({2}, c, {0});
  CHECK_THROWS_AS(factor_observe(predicted, dbn, 0, {1}, OnZeroLikelihood::error),
                  DegenerateModelError);
  const std::vector<double> reset =
      factor_observe(predicted, dbn, 0, {1}, OnZeroLikelihood::uniform_reset);
  CHECK(reset == std::vector<double>{0.5, 0.5});
}

TEST_CASE("psbf_step: fully passive processes are free of work") {
  const ActionDbn dbn = ts::identity_dbn(4);
  const PassivityReport report = detect_all(dbn);
  const Clustering c = Clustering::from_clusters({{0, 1}, {2, 3}}, 4);
  const FactoredBelief prior = ts::random_belief({2, 2, 2, 2}, c, 35);
  const auto [posterior, stats] = psbf_step(prior, dbn, {}, report);
  CHECK(stats.factors_total == 2);
  CHECK(stats.factors_skipped == 2);
  for (int k = 0; k < 2; ++k)
    CHECK(ts::bitwise_equal(posterior.factors()[static_cast<std::size_t>(k)],
                            prior.factors()[static_cast<std::size_t>(k)]));
}

TEST_CASE("psbf_step: skipped factors equal the full update") {
  // Mixed process: an active pair and two quiet variables. The skipped
  // factors must match what the disabled-skip step computes, to within
  // accumulation noise.
  ActionDbn dbn = ts::identity_dbn(4);
  dbn.state_cpts[0] = ts::flip_dbn(0.4).state_cpts[0];
  dbn.derive_edges();
  ts::add_sensor(dbn, 0, 0.8);
  ts::add_sensor(dbn, 2, 0.7);
  const PassivityReport report = detect_all(dbn);
  const Clustering c = Clustering::from_clusters({{0, 1}, {2}, {3}}, 4);
  const FactoredBelief prior = ts::random_belief({2, 2, 2, 2}, c, 36);

  const auto [with_skip, s1] = psbf_step(prior, dbn, {1, 0}, report);
  const auto [without, s2] = bk_step(prior, dbn, {1, 0});
  CHECK(s1.factors_skipped == 2);
  CHECK(s2.factors_skipped == 0);
  for (int k = 0; k < 3; ++k)
    CHECK(ts::max_abs_diff(with_skip.factors()[static_cast<std::size_t>(k)],
                           without.factors()[static_cast<std::size_t>(k)]) < 1e-12);
}

TEST_CASE("psbf_step: all-active processes degenerate to the disabled-skip step") {
  const ActionDbn dbn = ts::swap_dbn();
  const PassivityReport report = detect_all(dbn);
  const Clustering c = singleton_clusters(2);
  const FactoredBelief prior = ts::random_belief({2, 2}, c, 37);
  const auto [a, sa] = psbf_step(prior, dbn, {}, report);
  const auto [b, sb] = bk_step(prior, dbn, {});
  CHECK(sa.factors_skipped == 0);
  CHECK(sb.factors_total == sa.factors_total);
  for (int k = 0; k < 2; ++k)
    CHECK(ts::bitwise_equal(a.factors()[static_cast<std::size_t>(k)],
                            b.factors()[static_cast<std::size_t>(k)]));
}

TEST_CASE("psbf_step: generated mixed processes agree with the full update") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SynthParams params;
    params.n = 8;
    params.m = 3;
    params.passivity_pct = 50;
    params.seed = 6000 + seed;
    const Process process = generate(params);
    const Clustering c = stored_components(process);
    FactoredBelief belief = ts::random_belief(process.state_domains(), c, 6100 + seed);
    RngStream rng(6200 + seed, {1});
    StateVec truth(process.state_domains().size(), 0);
    for (int t = 0; t < 5; ++t) {
      const ActionDbn& dbn = process.actions[t % process.actions.size()];
      const PassivityReport report = detect_all(dbn);
      truth = sample_transition(dbn, truth, rng);
      const ObsVec o = sample_observation(dbn, truth, rng);
      const auto [a, sa] = psbf_step(belief, dbn, o, report);
      const auto [b, sb] = bk_step(belief, dbn, o);
      REQUIRE(a.factors().size() == b.factors().size());
      for (std::size_t k = 0; k < a.factors().size(); ++k)
        CHECK(ts::max_abs_diff(a.factors()[k], b.factors()[k]) < 1e-12);
      belief = a;
    }
  }
}

TEST_CASE("psbf_step: byte-identical across thread counts") {
  SynthParams params;
  params.n = 10;
  params.m = 3;
  params.passivity_pct = 40;
  params.seed = 6300;
  const Process process = generate(params);
  const Clustering c = stored_components(process);
  const FactoredBelief prior = ts::random_belief(process.state_domains(), c, 6301);
  const ActionDbn& dbn = process.actions[0];
  const PassivityReport report = detect_all(dbn);
  RngStream rng(6302, {2});
  const StateVec truth = sample_transition(dbn, StateVec(10, 0), rng);
  const ObsVec o = sample_observation(dbn, truth, rng);

  FilterOptions opt1;
  opt1.threads = 1;
  FilterOptions opt4;
  opt4.threads = 4;
  const auto [a, sa] = psbf_step(prior, dbn, o, report, opt1);
  const auto [b, sb] = psbf_step(prior, dbn, o, report, opt4);
  REQUIRE(a.factors().size() == b.factors().size());
  for (std::size_t k = 0; k < a.factors().size(); ++k)
    CHECK(ts::bitwise_equal(a.factors()[k], b.factors()[k]));
  CHECK(sa.factors_skipped == sb.factors_skipped);
}

TEST_CASE("bk_step: a single cluster is the exact filter") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SynthParams params;
    params.n = 5;
    params.m = 2;
    params.passivity_pct = 20;
    params.seed = 7000 + seed;
    const Process process = generate(params);
    const Clustering whole =
        Clustering::from_clusters({{0, 1, 2, 3, 4}}, process.n());
    const FactoredBelief prior =
        ts::random_belief(process.state_domains(), whole, 7100 + seed);
    const ActionDbn& dbn = process.actions[0];
    RngStream rng(7200 + seed, {3});
    const StateVec truth = sample_transition(dbn, StateVec(5, 0), rng);
    const ObsVec o = sample_observation(dbn, truth, rng);

    const auto [posterior, stats] = bk_step(prior, dbn, o);
    const JointBelief expect = brute_posterior(dbn, JointBelief::from_factored(prior), o);
    // One cluster in ascending member order shares the joint's indexing.
    CHECK(ts::max_abs_diff(posterior.factors()[0], expect.p) < 1e-10);
  }
}

TEST_CASE("exact_step: identity with a consistent reading keeps the point mass") {
  ActionDbn dbn = ts::identity_dbn(2);
  ts::add_sensor(dbn, 0, 1.0);
  JointBelief b = JointBelief::uniform({2, 2});
  b.p = {0.0, 0.0, 1.0, 0.0};  // point mass on (1, 0)
  const JointBelief out = exact_step(b, dbn, {1});
  CHECK(out.p == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}

TEST_CASE("exact_step: flip spreads the mass") {
  const ActionDbn dbn = ts::flip_dbn(0.3);
  JointBelief b = JointBelief::uniform({2});
  b.p = {1.0, 0.0};
  const JointBelief out = exact_step(b, dbn, {});
  CHECK(out.p[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(out.p[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("exact_step: matches the dense push-forward oracle") {
  SynthParams params;
  params.n = 4;
  params.m = 2;
  params.passivity_pct = 25;
  params.seed = 7500;
  const Process process = generate(params);
  const ActionDbn& dbn = process.actions[1 % process.actions.size()];
  const Clustering c = singleton_clusters(4);
  const FactoredBelief fb = ts::random_belief(process.state_domains(), c, 7501);
  const JointBelief prior = JointBelief::from_factored(fb);
  RngStream rng(7502, {4});
  const StateVec truth = sample_transition(dbn, StateVec(4, 0), rng);
  const ObsVec o = sample_observation(dbn, truth, rng);

  const JointBelief got = exact_step(prior, dbn, o);
  const JointBelief expect = brute_posterior(dbn, prior, o);
  CHECK(ts::max_abs_diff(got.p, expect.p) < 1e-12);
}

TEST_CASE("exact_step: impossible observations follow the policy") {
  ActionDbn dbn = ts::identity_dbn(1);
  ts::add_sensor(dbn, 0, 1.0);
  JointBelief b = JointBelief::uniform({2});
  b.p = {1.0, 0.0};
  CHECK_THROWS_AS(exact_step(b, dbn, {1}), DegenerateModelError);
  const JointBelief reset = exact_step(b, dbn, {1}, OnZeroLikelihood::uniform_reset);
  CHECK(reset.p == std::vector<double>{0.5, 0.5});
}

TEST_CASE("ExactPropagator: cached matrices agree with exact_step") {
  SynthParams params;
  params.n = 5;
  params.m = 2;
  params.passivity_pct = 40;
  params.actions = 2;
  params.seed = 7600;
  const Process process = generate(params);
  ExactPropagator fast(process);                     // dense matrices fit
  ExactPropagator slow(process, kDefaultJointCap, 4);  // forced fallback path
  CHECK(fast.state_space() == 32);

  JointBelief via_fast = JointBelief::uniform(process.state_domains());
  JointBelief via_slow = via_fast;
  JointBelief via_step = via_fast;
  RngStream rng(7601, {5});
  StateVec truth(5, 0);
  for (int t = 0; t < 6; ++t) {
    const int a = t % static_cast<int>(process.actions.size());
    const ActionDbn& dbn = process.actions[static_cast<std::size_t>(a)];
    truth = sample_transition(dbn, truth, rng);
    const ObsVec o = sample_observation(dbn, truth, rng);
    via_fast = fast.step(via_fast, a, o);
    via_slow = slow.step(via_slow, a, o);
    via_step = exact_step(via_step, dbn, o);
    CHECK(ts::max_abs_diff(via_fast.p, via_step.p) < 1e-12);
    CHECK(ts::max_abs_diff(via_slow.p, via_step.p) < 1e-12);
  }
}

TEST_CASE("ExactPropagator: refuses oversized state spaces") {
  SynthParams params;
  params.n = 12;
  params.m = 2;
  params.seed = 7700;
  const Process process = generate(params);
  CHECK_THROWS_AS(ExactPropagator(process, 1024), std::length_error);
}

TEST_CASE("pf_step: deterministic dynamics with a perfect sensor lock on") {
  ActionDbn dbn = ts::swap_dbn();
  ts::add_sensor(dbn, 0, 1.0);
  ts::add_sensor(dbn, 1, 1.0);
  ParticleSet particles;
  const int count = 500;
  particles.states.assign(count, {0, 1});
  particles.weights.assign(count, 1.0 / count);
  const ParticleSet out = pf_step(particles, dbn, {1, 0}, 99, 0);
  for (const StateVec& s : out.states) CHECK(s == StateVec{1, 0});
  const std::vector<double> marginal = out.var_marginal(0, 2);
  CHECK(marginal[0] == 0.0);
  CHECK(marginal[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pf_step: a single particle walks one trajectory") {
  const ActionDbn dbn = ts::flip_dbn(0.5);
  ParticleSet particles;
  particles.states = {{0}};
  particles.weights = {1.0};
  ParticleSet a = particles, b = particles;
  for (int t = 0; t < 8; ++t) {
    a = pf_step(a, dbn, {}, 123, static_cast<std::uint64_t>(t));
    b = pf_step(b, dbn, {}, 123, static_cast<std::uint64_t>(t));
    REQUIRE(a.states.size() == 1);
    CHECK(a.states[0] == b.states[0]);  // addressed streams, not shared state
    CHECK(a.weights[0] == 1.0);
  }
}

TEST_CASE("pf_step: marginals approach the exact filter") {
  SynthParams params;
  params.n = 2;
  params.m = 1;
  params.seed = 7800;
  const Process process = generate(params);
  const ActionDbn& dbn = process.actions[0];
  JointBelief exact = JointBelief::uniform(process.state_domains());
  ParticleSet particles = ParticleSet::uniform_init(process.state_domains(), 100000, 42);
  RngStream rng(7801, {6});
  StateVec truth(2, 0);
  for (int t = 0; t < 3; ++t) {
    truth = sample_transition(dbn, truth, rng);
    const ObsVec o = sample_observation(dbn, truth, rng);
    exact = exact_step(exact, dbn, o);
    particles = pf_step(particles, dbn, o, 43, static_cast<std::uint64_t>(t));
  }
  for (int v = 0; v < 2; ++v) {
    CHECK(ts::max_abs_diff(particles.var_marginal(v, 2), exact.var_marginal(v)) < 0.01);
  }
}

TEST_CASE("pf_step: thread count never changes the result") {
  SynthParams params;
  params.n = 6;
  params.m = 2;
  params.passivity_pct = 30;
  params.seed = 7900;
  const Process process = generate(params);
  const ActionDbn& dbn = process.actions[0];
  ParticleSet a = ParticleSet::uniform_init(process.state_domains(), 2048, 7);
  ParticleSet b = a;
  FilterOptions four;
  four.threads = 4;
  RngStream rng(7901, {7});
  StateVec truth(6, 0);
  for (int t = 0; t < 4; ++t) {
    truth = sample_transition(dbn, truth, rng);
    const ObsVec o = sample_observation(dbn, truth, rng);
    a = pf_step(a, dbn, o, 17, static_cast<std::uint64_t>(t));
    b = pf_step(b, dbn, o, 17, static_cast<std::uint64_t>(t), four);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i] == b.states[i]);
    CHECK(ts::bitwise_equal(a.weights, b.weights));
  }
}

TEST_CASE("pf_step: impossible observations follow the policy") {
  ActionDbn dbn = ts::identity_dbn(1);
  ts::add_sensor(dbn, 0, 1.0);
  ParticleSet particles;
  particles.states.assign(64, {0});
  particles.weights.assign(64, 1.0 / 64.0);
  CHECK_THROWS_AS(pf_step(particles, dbn, {1}, 3, 0), DegenerateModelError);
  FilterOptions reset;
  reset.on_zero = OnZeroLikelihood::uniform_reset;
  const ParticleSet out = pf_step(particles, dbn, {1}, 3, 0, reset);
  REQUIRE(out.states.size() == 64);
  CHECK(out.weights[0] == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("filter kinds parse and print") {
  CHECK(parse_filter_kind("psbf") == FilterKind::psbf);
  CHECK(parse_filter_kind("bk") == FilterKind::bk);
  CHECK(parse_filter_kind("pf") == FilterKind::pf);
  CHECK(parse_filter_kind("exact") == FilterKind::exact);
  CHECK(to_string(FilterKind::psbf) == "psbf");
  CHECK_THROWS_AS(parse_filter_kind("kalman"), std::invalid_argument);
}
