#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "psbf/clustering.hpp"
#include "psbf/passivity.hpp"
#include "psbf/process_io.hpp"
#include "psbf/rng.hpp"
#include "psbf/synthgen.hpp"
#include "psbf/validate.hpp"
#include "support.hpp"

using namespace psbf;

TEST_CASE("synthgen: size presets") {
  CHECK(preset_params("S").n == 10);
  CHECK(preset_params("S").m == 3);
  CHECK(preset_params("M").n == 20);
  CHECK(preset_params("M").m == 6);
  CHECK(preset_params("L").n == 30);
  CHECK(preset_params("L").m == 9);
  CHECK(preset_params("xl").n == 40);
  CHECK(preset_params("xl").m == 12);
  CHECK_THROWS_AS(preset_params("XXL"), std::invalid_argument);
}

TEST_CASE("synthgen: preset S shape and naming") {
  SynthParams params = preset_params("S");
  params.passivity_pct = 40;
  params.seed = 7;
  const Process process = generate(params);
  CHECK(process.n() == 10);
  CHECK(process.m() == 3);
  CHECK(process.actions.size() == 2);
  for (const VariableSpec& v : process.state_vars) CHECK(v.domain == 2);
  CHECK(process.name == "synth-n10-m3-p40-seed7");
  CHECK(validate_process(process).empty());
}

TEST_CASE("synthgen: generated processes validate across the knob space") {
  for (int domain : {2, 3}) {
    for (double det : {0.0, 0.5, 1.0}) {
      SynthParams params;
      params.n = 7;
      params.m = 3;
      params.domain = domain;
      params.determinism = det;
      params.passivity_pct = 30;
      params.actions = 3;
      params.seed = 500 + domain * 10 + static_cast<std::uint64_t>(det * 4);
      const Process process = generate(params);
      CHECK(validate_process(process).empty());
      CHECK(process.actions.size() == 3);
    }
  }
}

TEST_CASE("synthgen: passivity fraction is honored exactly") {
  SynthParams params = preset_params("S");
  params.seed = 11;

  params.passivity_pct = 0;
  const Process none = generate(params);
  for (const ActionDbn& dbn : none.actions) CHECK(detect_all(dbn).passive_count() == 0);

  params.passivity_pct = 40;
  const Process some = generate(params);
  for (const ActionDbn& dbn : some.actions) {
    const PassivityReport report = detect_all(dbn);
    CHECK(report.passive_count() >= 4);  // round(0.4 * 10)
    CHECK(report.passive_count() == 4);  // actives are clamped away from 1
    // The passive prefix is exactly the low-indexed block.
    for (int i = 0; i < 4; ++i) CHECK(report.verdicts[i].passive());
    for (int i = 4; i < 10; ++i) CHECK_FALSE(report.verdicts[i].passive());
  }
}

TEST_CASE("synthgen: active rows are clamped away from determinism") {
  SynthParams params;
  params.n = 8;
  params.m = 2;
  params.passivity_pct = 0;
  params.determinism = 1.0;  // hardest case: rows pushed toward point masses
  params.seed = 13;
  const Process process = generate(params);
  for (const ActionDbn& dbn : process.actions) {
    for (const Cpt& cpt : dbn.state_cpts) {
      for (double x : cpt.table) CHECK(x <= 1.0 - 1e-6);
    }
  }
}

TEST_CASE("synthgen: passive chains certify through their block predecessor") {
  SynthParams params;
  params.n = 10;
  params.m = 3;
  params.passivity_pct = 30;  // block of three: head + two followers
  params.seed = 17;
  const Process process = generate(params);
  for (const ActionDbn& dbn : process.actions) {
    const PassivityReport report = detect_all(dbn);
    REQUIRE(report.verdicts[0].passive());
    CHECK(report.verdicts[0].phi.empty());  // block head copies itself
    REQUIRE(report.verdicts[1].passive());
    CHECK(report.verdicts[1].phi == std::vector<int>{0});
    REQUIRE(report.verdicts[2].passive());
    CHECK(report.verdicts[2].phi == std::vector<int>{1});
    // The chain is wired through intra-slice edges: a causal path from the
    // head to the block tail.
    CHECK(dbn.has_edge(state_t1(0), state_t1(1)));
    CHECK(dbn.has_edge(state_t1(1), state_t1(2)));
    // Nothing active feeds the chain, so the whole block stays unreachable.
    CHECK(report.reachable[0] == 0);
    CHECK(report.reachable[1] == 0);
    CHECK(report.reachable[2] == 0);
  }
}

TEST_CASE("synthgen: constructed passivity survives the definition-level check") {
  SynthParams params;
  params.n = 5;
  params.m = 2;
  params.passivity_pct = 60;
  params.seed = 19;
  const Process process = generate(params);
  for (const ActionDbn& dbn : process.actions) {
    const PassivityReport report = detect_all(dbn);
    for (int i = 0; i < dbn.n(); ++i) {
      if (report.verdicts[i].passive())
        CHECK(ts::brute_force_passive(dbn, i, report.verdicts[i].phi));
    }
  }
}

TEST_CASE("make_passive: rewires a variable with the requested certificate") {
  SynthParams params;
  params.n = 6;
  params.m = 2;
  params.passivity_pct = 0;
  params.seed = 23;
  Process process = generate(params);
  ActionDbn& dbn = process.actions[0];
  REQUIRE_FALSE(detect_passive(dbn, 4).passive());
  RngStream rng(1234, {9});
  make_passive(dbn, 4, {2, 3}, 1.0, rng);
  dbn.derive_edges();
  const PassivityVerdict v = detect_passive(dbn, 4);
  REQUIRE(v.passive());
  CHECK(v.phi == std::vector<int>{2, 3});
  CHECK(validate_dbn(dbn).empty());
}

TEST_CASE("synthgen: stored components clustering satisfies both assumptions") {
  SynthParams params = preset_params("M");
  params.passivity_pct = 40;
  params.seed = 29;
  const Process process = generate(params);
  REQUIRE(!process.clusterings.empty());
  const NamedClustering* stored = nullptr;
  for (const NamedClustering& nc : process.clusterings)
    if (nc.name == "components") stored = &nc;
  REQUIRE(stored != nullptr);
  const Clustering c = Clustering::from_clusters(stored->clusters, process.n());
  CHECK(check_a1(process, c).empty());
  CHECK(check_a2(c, process.n()));
  // Matches a fresh component computation.
  const Clustering fresh = components_clusters(process);
  CHECK(c.clusters == fresh.clusters);
}

TEST_CASE("synthgen: deterministic in the seed") {
  SynthParams params = preset_params("S");
  params.passivity_pct = 20;
  params.seed = 31;
  const std::string a = write_process(generate(params));
  const std::string b = write_process(generate(params));
  CHECK(a == b);
  params.seed = 32;
  CHECK(write_process(generate(params)) != a);
}
