// Microbenchmarks for the hot paths: passivity analysis, the per-cluster
// transition projection, full filter steps at varying passivity levels, the
// particle filter, and a warehouse-sized step with cross-cluster tables.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "psbf/belief.hpp"
#include "psbf/clustering.hpp"
#include "psbf/eval.hpp"
#include "psbf/filtering.hpp"
#include "psbf/passivity.hpp"
#include "psbf/rng.hpp"
#include "psbf/synthgen.hpp"
#include "psbf/warehouse.hpp"

using namespace psbf;

namespace {

struct Fixture {
  Process process;
  Clustering clustering;
  std::vector<PassivityReport> reports;
  FactoredBelief belief;
  std::vector<ObsVec> observations;

  Fixture(const char* preset, int passivity_pct) {
    SynthParams params = preset_params(preset);
    params.passivity_pct = passivity_pct;
    params.seed = 1;
    process = generate(params);
    for (const NamedClustering& nc : process.clusterings) {
      if (nc.name == "components")
        clustering = Clustering::from_clusters(nc.clusters, process.n());
    }
    for (const ActionDbn& action : process.actions)
      reports.push_back(detect_all(action));
    belief = FactoredBelief::uniform(process.state_domains(), clustering);

    // A short loop of pre-sampled observations keeps the step inputs varied
    // without timing the samplers.
    RngStream rng(7, {0xbe11u});
    StateVec truth;
    for (int d : process.state_domains()) truth.push_back(rng.next_below(d));
    for (int i = 0; i < 16; ++i) {
      const ActionDbn& dbn = process.actions[static_cast<std::size_t>(i % 2)];
      truth = sample_transition(dbn, truth, rng);
      observations.push_back(sample_observation(dbn, truth, rng));
    }
  }
};

FilterOptions robust() {
  FilterOptions opt;
  opt.on_zero = OnZeroLikelihood::uniform_reset;
  return opt;
}

void BM_detect_all(benchmark::State& state) {
  SynthParams params = preset_params("M");
  params.passivity_pct = static_cast<int>(state.range(0));
  params.seed = 1;
  const Process process = generate(params);
  for (auto _ : state)
    benchmark::DoNotOptimize(detect_all(process.actions[0]));
}
BENCHMARK(BM_detect_all)->Arg(0)->Arg(60);

void BM_factor_transition(benchmark::State& state) {
  const Fixture fx("S", static_cast<int>(state.range(0)));
  const MarginalizedAction act =
      marginalize(fx.process.actions[0], fx.clustering, fx.belief);
  int k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(factor_transition(fx.belief, act, k));
    k = (k + 1) % static_cast<int>(fx.clustering.clusters.size());
  }
}
BENCHMARK(BM_factor_transition)->Arg(0)->Arg(60);

void BM_psbf_step(benchmark::State& state) {
  Fixture fx("S", static_cast<int>(state.range(0)));
  const FilterOptions opt = robust();
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t a = i % 2;
    fx.belief = psbf_step(fx.belief, fx.process.actions[a],
                          fx.observations[i % fx.observations.size()],
                          fx.reports[a], opt)
                    .first;
    ++i;
  }
}
BENCHMARK(BM_psbf_step)->Arg(0)->Arg(20)->Arg(40)->Arg(60);

void BM_bk_step(benchmark::State& state) {
  Fixture fx("S", static_cast<int>(state.range(0)));
  const FilterOptions opt = robust();
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t a = i % 2;
    fx.belief = bk_step(fx.belief, fx.process.actions[a],
                        fx.observations[i % fx.observations.size()], opt)
                    .first;
    ++i;
  }
}
BENCHMARK(BM_bk_step)->Arg(0)->Arg(60);

void BM_psbf_step_m(benchmark::State& state) {
  Fixture fx("M", static_cast<int>(state.range(0)));
  const FilterOptions opt = robust();
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t a = i % 2;
    fx.belief = psbf_step(fx.belief, fx.process.actions[a],
                          fx.observations[i % fx.observations.size()],
                          fx.reports[a], opt)
                    .first;
    ++i;
  }
}
BENCHMARK(BM_psbf_step_m)->Arg(0)->Arg(60);

void BM_pf_step(benchmark::State& state) {
  Fixture fx("S", 40);
  ParticleSet particles = ParticleSet::uniform_init(
      fx.process.state_domains(), static_cast<int>(state.range(0)), 3);
  const FilterOptions opt = robust();
  std::uint64_t i = 0;
  for (auto _ : state) {
    const std::size_t a = static_cast<std::size_t>(i % 2);
    particles = pf_step(particles, fx.process.actions[a],
                        fx.observations[i % fx.observations.size()], 3, i, opt);
    ++i;
  }
}
BENCHMARK(BM_pf_step)->Arg(1000)->Arg(10000);

// One fleet step: cross-cluster pod tracking forces the marginalization
// machinery to rebuild tables for the moving robot's cargo.
void BM_warehouse_step(benchmark::State& state) {
  const WarehouseModel model(WarehouseConfig::kiva16());
  JointAction joint(4);
  joint[0] = {CommandKind::forward, 2, -1};
  const ActionDbn dbn = model.build_action_dbn(joint);
  const PassivityReport report = detect_all(dbn);
  std::vector<int> domains;
  for (const auto& v : dbn.state_vars) domains.push_back(v.domain);
  FactoredBelief belief = FactoredBelief::uniform(domains, model.clustering());
  RngStream rng(11, {0xfeedu});
  StateVec truth = model.initial_state();
  truth = sample_transition(dbn, truth, rng);
  const ObsVec obs = sample_observation(dbn, truth, rng);
  const FilterOptions opt = robust();
  const bool skip = state.range(0) != 0;
  for (auto _ : state) {
    if (skip)
      benchmark::DoNotOptimize(psbf_step(belief, dbn, obs, report, opt));
    else
      benchmark::DoNotOptimize(bk_step(belief, dbn, obs, opt));
  }
}
BENCHMARK(BM_warehouse_step)->Arg(1)->Arg(0);

}  // namespace

BENCHMARK_MAIN();
