#pragma once

#include <cstdint>
#include <string>

#include "psbf/dbn.hpp"
#include "psbf/rng.hpp"

namespace psbf {

// Knobs for the random process generator. Sizes follow the preset table
// (state vars, obs vars): S=(10,3), M=(20,6), L=(30,9), XL=(40,12).
struct SynthParams {
  int n = 10;
  int m = 3;
  int passivity_pct = 0;   // percent of state variables built passive
  int actions = 2;
  int max_parents = 3;     // cap on t-slice parents per variable
  double determinism = 0.5;  // 0 = flat random rows, 1 = near-deterministic
  double sensor_noise = 0.1;
  int block_size = 3;        // passive chains and intra edges stay inside blocks
  double extra_edge_prob = 0.1;  // chance of one extra intra-slice parent
  int domain = 2;
  std::uint64_t seed = 1;
};

// Fills n/m for one of "S", "M", "L", "XL" (case-insensitive).
SynthParams preset_params(const std::string& preset);

// Rewires variable `var` to be passive with certificate set `phi`: parents
// become {var@t} ∪ {j@t, j@t1 : j ∈ phi}, rows where every phi member kept
// its value copy var@t, all other rows are random Dirichlet(alpha) draws.
void make_passive(ActionDbn& dbn, int var, const std::vector<int>& phi,
                  double alpha, RngStream& rng);

// Random process: per action, the round(n·passivity_pct/100) lowest-indexed
// variables are built passive in block-local chains (block heads are identity
// copies), the rest get random CPTs clamped away from determinism so the
// detector's verdicts match the construction exactly. Includes a stored
// "components" clustering. Deterministic in params.seed.
Process generate(const SynthParams& params);

}  // namespace psbf
