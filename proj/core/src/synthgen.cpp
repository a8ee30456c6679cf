#include "psbf/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psbf/clustering.hpp"
#include "psbf/passivity.hpp"
#include "psbf/validate.hpp"

namespace psbf {

namespace {

constexpr std::uint64_t kStateTag = 0x73746174;  // per-variable CPT streams
constexpr std::uint64_t kObsTag = 0x6f627376;

// Keeps every row strictly away from the detector's determinism threshold so
// a variable built active can never scan as passive.
constexpr double kActiveRowCap = 1.0 - 1e-6;

double dirichlet_alpha(double determinism) {
  const double lo = std::log(5.0), hi = std::log(0.05);
  return std::exp(lo + (hi - lo) * determinism);
}

void random_row(double* row, int domain, double alpha, RngStream& rng) {
  rng.next_dirichlet(alpha, domain, row);
}

// Caps the largest entry and hands the excess to the others, keeping the row
// normalized.
void clamp_row(double* row, int domain) {
  if (domain < 2) return;
  for (int c = 0; c < domain; ++c) {
    if (row[c] > kActiveRowCap) {
      const double excess = row[c] - kActiveRowCap;
      row[c] = kActiveRowCap;
      const double share = excess / static_cast<double>(domain - 1);
      for (int d = 0; d < domain; ++d) {
        if (d != c) row[d] += share;
      }
      return;  // at most one entry can exceed the cap
    }
  }
}

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return text;
}

}  // namespace

SynthParams preset_params(const std::string& preset) {
  SynthParams params;
  const std::string p = lower(preset);
  if (p == "s") {
    params.n = 10, params.m = 3;
  } else if (p == "m") {
    params.n = 20, params.m = 6;
  } else if (p == "l") {
    params.n = 30, params.m = 9;
  } else if (p == "xl") {
    params.n = 40, params.m = 12;
  } else {
    throw std::invalid_argument("unknown preset \"" + preset + "\"");
  }
  return params;
}

void make_passive(ActionDbn& dbn, int var, const std::vector<int>& phi,
                  double alpha, RngStream& rng) {
  const int domain = dbn.state_vars[static_cast<std::size_t>(var)].domain;
  Cpt cpt;
  cpt.child = state_t1(var);
  cpt.child_domain = domain;
  cpt.parents.push_back(state_t(var));
  cpt.parent_domains.push_back(domain);
  for (int j : phi) {
    if (j == var) throw std::invalid_argument("make_passive: phi contains the variable");
    const int jdom = dbn.state_vars[static_cast<std::size_t>(j)].domain;
    cpt.parents.push_back(state_t(j));
    cpt.parent_domains.push_back(jdom);
    cpt.parents.push_back(state_t1(j));
    cpt.parent_domains.push_back(jdom);
  }
  const std::size_t rows = cpt.rows();
  cpt.table.assign(rows * static_cast<std::size_t>(domain), 0.0);

  std::vector<int> digits(cpt.parents.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    bool stable = true;
    for (std::size_t s = 1; s + 1 < cpt.parents.size() && stable; s += 2)
      stable = digits[s] == digits[s + 1];  // j@t vs j@t1 pairs
    double* row = cpt.row(r);
    if (stable) {
      row[digits[0]] = 1.0;  // copy var@t exactly
    } else {
      random_row(row, domain, alpha, rng);
    }
    for (int s = static_cast<int>(digits.size()) - 1; s >= 0; --s) {
      if (++digits[static_cast<std::size_t>(s)] <
          cpt.parent_domains[static_cast<std::size_t>(s)])
        break;
      digits[static_cast<std::size_t>(s)] = 0;
    }
  }
  dbn.state_cpts[static_cast<std::size_t>(var)] = std::move(cpt);
}

Process generate(const SynthParams& params) {
  if (params.n < 1 || params.m < 1) throw std::invalid_argument("n, m must be >= 1");
  if (params.passivity_pct < 0 || params.passivity_pct > 100)
    throw std::invalid_argument("passivity_pct out of range");
  if (params.actions < 1) throw std::invalid_argument("need at least one action");
  if (params.block_size < 1) throw std::invalid_argument("block_size must be >= 1");
  if (params.domain < 2) throw std::invalid_argument("domain must be >= 2");
  if (params.max_parents < 1)
    throw std::invalid_argument("parent budget cannot fit the self-parent");

  const int passive_count = static_cast<int>(
      std::lround(static_cast<double>(params.n) * params.passivity_pct / 100.0));
  const bool chained_passives =
      passive_count > 1 && params.block_size > 1;  // non-head members need phi
  if (chained_passives && params.max_parents < 2)
    throw std::invalid_argument("parent budget cannot fit passive certificates");

  Process process;
  process.name = "synth-n" + std::to_string(params.n) + "-m" +
                 std::to_string(params.m) + "-p" + std::to_string(params.passivity_pct) +
                 "-seed" + std::to_string(params.seed);
  for (int i = 0; i < params.n; ++i)
    process.state_vars.push_back({"x" + std::to_string(i), params.domain});
  for (int j = 0; j < params.m; ++j)
    process.obs_vars.push_back({"y" + std::to_string(j), params.domain});

  const double alpha = dirichlet_alpha(params.determinism);

  for (int a = 0; a < params.actions; ++a) {
    ActionDbn dbn;
    dbn.name = "a" + std::to_string(a);
    dbn.state_vars = process.state_vars;
    dbn.obs_vars = process.obs_vars;
    dbn.state_cpts.resize(static_cast<std::size_t>(params.n));
    dbn.obs_cpts.resize(static_cast<std::size_t>(params.m));

    for (int i = 0; i < params.n; ++i) {
      RngStream rng(params.seed, {kStateTag, static_cast<std::uint64_t>(a),
                                  static_cast<std::uint64_t>(i)});
      const int block_start = (i / params.block_size) * params.block_size;
      if (i < passive_count) {
        if (i == block_start) {
          dbn.state_cpts[static_cast<std::size_t>(i)] =
              identity_copy_cpt(i, params.domain);
        } else {
          make_passive(dbn, i, {i - 1}, alpha, rng);
        }
        continue;
      }

      // Active variable: self t-parent, extra random t-parents (cross-block
      // allowed), and occasionally one in-block intra-slice parent to give
      // non-block clusterings something to marginalize.
      Cpt cpt;
      cpt.child = state_t1(i);
      cpt.child_domain = params.domain;
      cpt.parents.push_back(state_t(i));
      cpt.parent_domains.push_back(params.domain);

      const int extra_budget = std::min(params.max_parents - 1, params.n - 1);
      const int extras =
          extra_budget > 0 ? static_cast<int>(rng.next_below(
                                 static_cast<std::uint64_t>(extra_budget) + 1))
                           : 0;
      std::vector<int> others;
      others.reserve(static_cast<std::size_t>(params.n) - 1);
      for (int j = 0; j < params.n; ++j) {
        if (j != i) others.push_back(j);
      }
      rng.shuffle(others);
      for (int e = 0; e < extras; ++e) {
        cpt.parents.push_back(state_t(others[static_cast<std::size_t>(e)]));
        cpt.parent_domains.push_back(params.domain);
      }

      if (i > block_start && rng.next_unit() < params.extra_edge_prob) {
        const int j = block_start +
                      static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(i - block_start)));
        cpt.parents.push_back(state_t1(j));
        cpt.parent_domains.push_back(params.domain);
      }

      const std::size_t rows = cpt.rows();
      cpt.table.assign(rows * static_cast<std::size_t>(params.domain), 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        random_row(cpt.row(r), params.domain, alpha, rng);
        clamp_row(cpt.row(r), params.domain);
      }
      dbn.state_cpts[static_cast<std::size_t>(i)] = std::move(cpt);
    }

    for (int j = 0; j < params.m; ++j) {
      RngStream rng(params.seed, {kObsTag, static_cast<std::uint64_t>(a),
                                  static_cast<std::uint64_t>(j)});
      Cpt cpt;
      cpt.child = obs_node(j);
      cpt.child_domain = params.domain;
      const int count = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
                                std::min(params.max_parents, params.n))));
      std::vector<int> pool(static_cast<std::size_t>(params.n));
      for (int v = 0; v < params.n; ++v) pool[static_cast<std::size_t>(v)] = v;
      rng.shuffle(pool);
      pool.resize(static_cast<std::size_t>(count));
      std::sort(pool.begin(), pool.end());
      for (int v : pool) {
        cpt.parents.push_back(state_t1(v));
        cpt.parent_domains.push_back(params.domain);
      }

      // Noisy readout of (sum of parents) mod domain.
      const std::size_t rows = cpt.rows();
      cpt.table.assign(rows * static_cast<std::size_t>(params.domain), 0.0);
      std::vector<int> digits(cpt.parents.size(), 0);
      for (std::size_t r = 0; r < rows; ++r) {
        int sum = 0;
        for (int d : digits) sum += d;
        const int value = sum % params.domain;
        double* row = cpt.row(r);
        const double spread = params.sensor_noise / (params.domain - 1);
        for (int c = 0; c < params.domain; ++c)
          row[c] = c == value ? 1.0 - params.sensor_noise : spread;
        for (int s = static_cast<int>(digits.size()) - 1; s >= 0; --s) {
          if (++digits[static_cast<std::size_t>(s)] <
              cpt.parent_domains[static_cast<std::size_t>(s)])
            break;
          digits[static_cast<std::size_t>(s)] = 0;
        }
      }
      dbn.obs_cpts[static_cast<std::size_t>(j)] = std::move(cpt);
    }

    dbn.derive_edges();
    process.actions.push_back(std::move(dbn));
  }

  const auto issues = validate_process(process);
  if (!issues.empty())
    throw std::logic_error("generated process failed validation: " +
                           issues.front().message);
  for (const ActionDbn& dbn : process.actions) {
    const PassivityReport report = detect_all(dbn);
    if (report.passive_count() < passive_count)
      throw std::logic_error("generator lost a passive variable in " + dbn.name);
  }

  const Clustering components = components_clusters(process);
  process.clusterings.push_back({"components", components.clusters});
  return process;
}

}  // namespace psbf
