// psbf: command-line front end for the belief-filtering engine.
//
// Subcommands: validate, passivity, cluster, gen, run, bench, warehouse.
// Exit codes: 0 success, 1 validation/usage failure, 2 model degeneracy at
// runtime (impossible observation under the `error` zero-likelihood policy).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psbf/belief.hpp"
#include "psbf/bench.hpp"
#include "psbf/clustering.hpp"
#include "psbf/eval.hpp"
#include "psbf/filtering.hpp"
#include "psbf/passivity.hpp"
#include "psbf/process_io.hpp"
#include "psbf/report.hpp"
#include "psbf/rng.hpp"
#include "psbf/synthgen.hpp"
#include "psbf/validate.hpp"
#include "psbf/warehouse.hpp"

namespace {

using namespace psbf;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitDegenerate = 2;

struct CliFailure {
  int code;
  std::string message;
};

struct GlobalArgs {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string format = "table";
  std::string on_zero = "error";

  OutputFormat output_format() const { return parse_output_format(format); }
  OnZeroLikelihood zero_policy() const {
    if (on_zero == "error") return OnZeroLikelihood::error;
    if (on_zero == "uniform-reset") return OnZeroLikelihood::uniform_reset;
    throw CliFailure{kExitValidation, "unknown --on-zero-likelihood: " + on_zero};
  }
  FilterOptions filter_options() const {
    FilterOptions opt;
    opt.threads = threads;
    opt.on_zero = zero_policy();
    return opt;
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw CliFailure{kExitValidation, "cannot write " + path};
}

Process load_validated(const std::string& path) {
  Process process;
  try {
    process = load_process(path);
  } catch (const std::exception& e) {
    throw CliFailure{kExitValidation, std::string("parse error: ") + e.what()};
  }
  const std::vector<ValidationIssue> issues = validate_process(process);
  if (!issues.empty()) {
    std::string message = "invalid process:";
    for (const ValidationIssue& issue : issues)
      message += "\n  [" + issue.code + "] " + issue.message;
    throw CliFailure{kExitValidation, message};
  }
  return process;
}

Clustering pick_clustering(const Process& process, const std::string& name,
                           const std::string& strategy, int limit) {
  if (!name.empty()) {
    for (const NamedClustering& nc : process.clusterings) {
      if (nc.name == name) return Clustering::from_clusters(nc.clusters, process.n());
    }
    throw CliFailure{kExitValidation, "no stored clustering named " + name};
  }
  if (strategy == "singleton") return singleton_clusters(process.n());
  if (strategy == "components") return components_clusters(process);
  if (strategy == "max-size") {
    if (limit < 1)
      throw CliFailure{kExitValidation, "--limit must be at least 1 for max-size"};
    return max_size_clusters(process, limit);
  }
  throw CliFailure{kExitValidation, "unknown clustering strategy: " + strategy};
}

FilterKind parse_filter_or_fail(const std::string& text) {
  try {
    return parse_filter_kind(text);
  } catch (const std::exception& e) {
    throw CliFailure{kExitValidation, e.what()};
  }
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  const Process process = load_validated(path);
  std::cout << process.name << ": ok (" << process.n() << " state vars, "
            << process.m() << " observation vars, " << process.actions.size()
            << " actions)\n";
  return kExitOk;
}

int cmd_passivity(const GlobalArgs& global, const std::string& path) {
  const Process process = load_validated(path);
  std::cout << render_rows(global.output_format(), passivity_header(),
                           passivity_rows(process));
  return kExitOk;
}

int cmd_cluster(const GlobalArgs& global, const std::string& path,
                const std::string& strategy, int limit) {
  const Process process = load_validated(path);
  const Clustering clustering = pick_clustering(process, "", strategy, limit);
  std::cout << render_rows(global.output_format(), cluster_header(),
                           cluster_rows(process, clustering.clusters));
  return kExitOk;
}

int cmd_gen(const GlobalArgs& global, const std::string& preset, int passivity,
            const std::string& out, const std::string& dir, int count,
            double determinism, int actions, int max_parents, int domain) {
  SynthParams params;
  try {
    params = preset_params(preset);
  } catch (const std::exception& e) {
    throw CliFailure{kExitValidation, e.what()};
  }
  params.passivity_pct = passivity;
  params.seed = global.seed;
  params.determinism = determinism;
  params.actions = actions;
  params.max_parents = max_parents;
  params.domain = domain;
  try {
    if (count > 1 || !dir.empty()) {
      if (dir.empty())
        throw CliFailure{kExitValidation, "batch generation needs --dir"};
      for (int i = 0; i < count; ++i) {
        SynthParams each = params;
        each.seed = global.seed + static_cast<std::uint64_t>(i);
        const Process process = generate(each);
        save_process(process, dir + "/" + process.name + ".spec");
      }
      std::cout << "wrote " << count << " processes to " << dir << "\n";
    } else {
      const Process process = generate(params);
      if (out.empty()) {
        std::cout << write_process(process);
      } else {
        save_process(process, out);
        std::cout << "wrote " << process.name << " to " << out << "\n";
      }
    }
  } catch (const CliFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw CliFailure{kExitValidation, e.what()};
  }
  return kExitOk;
}

// Ground truth for `run`: uniform random start, uniformly chosen action per
// step, state and observation sampled from the chosen network.
struct RunTrajectory {
  std::vector<int> actions;
  std::vector<ObsVec> observations;
};

RunTrajectory roll_run_trajectory(const Process& process, std::uint64_t seed,
                                  int steps) {
  constexpr std::uint64_t kInitTag = 0x72696e69;
  constexpr std::uint64_t kActTag = 0x72616374;
  constexpr std::uint64_t kTruthTag = 0x72747275;
  constexpr std::uint64_t kObsTag = 0x726f6273;
  RunTrajectory traj;
  RngStream init(seed, {kInitTag});
  StateVec truth(static_cast<std::size_t>(process.n()));
  for (int i = 0; i < process.n(); ++i) {
    truth[static_cast<std::size_t>(i)] = static_cast<int>(init.next_below(
        static_cast<std::uint64_t>(process.state_vars[static_cast<std::size_t>(i)].domain)));
  }
  RngStream chooser(seed, {kActTag});
  for (int t = 0; t < steps; ++t) {
    const int a = static_cast<int>(
        chooser.next_below(static_cast<std::uint64_t>(process.actions.size())));
    const ActionDbn& dbn = process.actions[static_cast<std::size_t>(a)];
    RngStream truth_rng(seed, {kTruthTag, static_cast<std::uint64_t>(t)});
    truth = sample_transition(dbn, truth, truth_rng);
    RngStream obs_rng(seed, {kObsTag, static_cast<std::uint64_t>(t)});
    traj.actions.push_back(a);
    traj.observations.push_back(sample_observation(dbn, truth, obs_rng));
  }
  return traj;
}

int cmd_run(const GlobalArgs& global, const std::string& path,
            const std::string& filter_name, int steps, const std::string& cluster_name,
            const std::string& strategy, int limit, int particles,
            std::size_t kl_cap, const std::string& out) {
  const Process process = load_validated(path);
  const FilterKind kind = parse_filter_or_fail(filter_name);
  const Clustering clustering =
      pick_clustering(process, cluster_name, strategy, limit);
  const RunTrajectory traj = roll_run_trajectory(process, global.seed, steps);
  const FilterOptions opt = global.filter_options();

  // Exact beliefs for the accuracy column whenever the joint fits the cap.
  std::vector<JointBelief> exact;
  if (JointBelief::space_size(process.state_domains()) <= kl_cap) {
    ExactPropagator prop(process, kl_cap);
    JointBelief belief = JointBelief::uniform(process.state_domains(), kl_cap);
    for (int t = 0; t < steps; ++t) {
      belief = prop.step(belief, traj.actions[static_cast<std::size_t>(t)],
                         traj.observations[static_cast<std::size_t>(t)]);
      exact.push_back(belief);
    }
  } else if (kind == FilterKind::exact) {
    throw CliFailure{kExitValidation,
                     "state space exceeds --kl-cap; the exact filter cannot run"};
  }

  std::vector<PassivityReport> reports;
  for (const ActionDbn& dbn : process.actions) reports.push_back(detect_all(dbn));

  using Clock = std::chrono::steady_clock;
  std::vector<std::vector<std::string>> rows;
  FactoredBelief belief = FactoredBelief::uniform(process.state_domains(), clustering);
  ParticleSet pf_particles;
  JointBelief exact_belief;
  std::optional<ExactPropagator> prop;
  if (kind == FilterKind::pf) {
    pf_particles =
        ParticleSet::uniform_init(process.state_domains(), particles, global.seed);
  } else if (kind == FilterKind::exact) {
    prop.emplace(process, kl_cap);
    exact_belief = JointBelief::uniform(process.state_domains(), kl_cap);
  }

  for (int t = 0; t < steps; ++t) {
    const int a = traj.actions[static_cast<std::size_t>(t)];
    const ActionDbn& dbn = process.actions[static_cast<std::size_t>(a)];
    const ObsVec& obs = traj.observations[static_cast<std::size_t>(t)];
    StepStats stats;
    std::optional<double> kl;
    switch (kind) {
      case FilterKind::psbf:
      case FilterKind::bk: {
        auto next = kind == FilterKind::psbf
                        ? psbf_step(belief, dbn, obs,
                                    reports[static_cast<std::size_t>(a)], opt)
                        : bk_step(belief, dbn, obs, opt);
        belief = std::move(next.first);
        stats = next.second;
        if (!exact.empty())
          kl = relative_entropy(exact[static_cast<std::size_t>(t)], belief);
        break;
      }
      case FilterKind::pf: {
        const auto start = Clock::now();
        pf_particles = pf_step(pf_particles, dbn, obs, global.seed,
                               static_cast<std::uint64_t>(t), opt);
        stats.transition_us = std::chrono::duration_cast<std::chrono::microseconds>(
                                  Clock::now() - start)
                                  .count();
        if (!exact.empty())
          kl = relative_entropy(exact[static_cast<std::size_t>(t)], pf_particles);
        break;
      }
      case FilterKind::exact: {
        const auto start = Clock::now();
        exact_belief = prop->step(exact_belief, a, obs, opt.on_zero);
        stats.transition_us = std::chrono::duration_cast<std::chrono::microseconds>(
                                  Clock::now() - start)
                                  .count();
        kl = 0.0;
        break;
      }
    }
    rows.push_back({std::to_string(t), dbn.name, to_string(kind),
                    std::to_string(stats.transition_us),
                    std::to_string(stats.observation_us),
                    std::to_string(stats.overhead_us),
                    std::to_string(stats.factors_skipped),
                    kl ? format_number(*kl) : std::string()});
  }

  const std::vector<std::string> header = {
      "step",          "action",         "filter",      "transition_us",
      "observation_us", "overhead_us",   "factors_skipped", "kl_bits"};
  write_output(out, render_rows(out.empty() ? global.output_format()
                                            : OutputFormat::csv,
                                header, rows));
  return kExitOk;
}

int cmd_bench(const GlobalArgs& global, BenchPlan plan, const std::string& out,
              const std::string& summary_out) {
  plan.seed = global.seed;
  plan.on_zero = OnZeroLikelihood::uniform_reset;  // batch runs keep going
  const std::vector<BenchmarkRecord> records = run_bench(plan);
  const std::vector<SummaryRow> rows = summarize(records);
  const std::string summary_text = global.output_format() == OutputFormat::csv
                                       ? summary_csv(rows)
                                       : summary_table(rows);
  if (out.empty()) {
    std::cout << records_csv(records);
  } else {
    write_output(out, records_csv(records));
    std::cout << summary_text;
  }
  if (!summary_out.empty()) write_output(summary_out, summary_csv(rows));
  return kExitOk;
}

int cmd_warehouse(const GlobalArgs& global, const std::string& preset,
                  const std::string& filter_name, const std::string& mode_name,
                  int steps, int particles, int tasks, const std::string& out,
                  const std::string& auctions_out) {
  if (preset != "kiva16")
    throw CliFailure{kExitValidation, "unknown warehouse preset: " + preset};
  WarehouseConfig config = WarehouseConfig::kiva16();
  if (tasks >= 0) config.tasks_total = tasks;
  const FilterKind kind = parse_filter_or_fail(filter_name);
  ControlMode mode;
  try {
    mode = parse_control_mode(mode_name);
  } catch (const std::exception& e) {
    throw CliFailure{kExitValidation, e.what()};
  }
  SimulationOptions options;
  options.filter = global.filter_options();
  options.particles = particles;
  SimulationResult result;
  try {
    result = simulate(config, kind, mode, steps, global.seed, options);
  } catch (const std::invalid_argument& e) {
    throw CliFailure{kExitValidation, e.what()};
  }

  std::vector<std::vector<std::string>> rows;
  for (const TraceRow& row : result.trace) {
    rows.push_back({std::to_string(row.step), row.joint_action,
                    std::to_string(row.tasks_done), std::to_string(row.filter_us),
                    format_number(row.skipped_fraction)});
  }
  const std::vector<std::string> header = {"step", "joint_action", "tasks_done",
                                           "filter_us", "skipped_fraction"};
  write_output(out, render_rows(out.empty() ? global.output_format()
                                            : OutputFormat::csv,
                                header, rows));
  if (!out.empty()) {
    std::cout << "tasks_done=" << result.summary.tasks_done
              << " mean_filter_us=" << format_number(result.summary.mean_filter_us)
              << " mean_skipped_fraction="
              << format_number(result.summary.mean_skipped_fraction) << "\n";
  }
  if (!auctions_out.empty()) {
    std::string text = csv_line({"step", "pod", "winner"});
    for (const AuctionRecord& a : result.auctions) {
      text += csv_line({std::to_string(a.step), std::to_string(a.pod),
                        std::to_string(a.winner)});
    }
    write_output(auctions_out, text);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief filtering for dynamic Bayesian networks with passivity-based "
               "selective updates"};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads for filter updates")
      ->capture_default_str();
  app.add_option("--format", global.format, "Output format: csv or table")
      ->check(CLI::IsMember({"csv", "table"}))
      ->capture_default_str();
  app.add_option("--on-zero-likelihood", global.on_zero,
                 "Policy on impossible observations: error or uniform-reset")
      ->check(CLI::IsMember({"error", "uniform-reset"}))
      ->capture_default_str();

  // validate
  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "Check a process file");
  validate->fallthrough();
  validate->add_option("file", validate_path, "Process spec file")->required();

  // passivity
  std::string passivity_path;
  CLI::App* passivity =
      app.add_subcommand("passivity", "Report per-(action, variable) passivity");
  passivity->fallthrough();
  passivity->add_option("file", passivity_path, "Process spec file")->required();

  // cluster
  std::string cluster_path, cluster_strategy = "components";
  int cluster_limit = 0;
  CLI::App* cluster =
      app.add_subcommand("cluster", "Build a clustering and report A1/A2 status");
  cluster->fallthrough();
  cluster->add_option("file", cluster_path, "Process spec file")->required();
  cluster->add_option("--strategy", cluster_strategy,
                      "singleton, components, or max-size")
      ->check(CLI::IsMember({"singleton", "components", "max-size"}))
      ->capture_default_str();
  cluster->add_option("--limit", cluster_limit, "Cluster size limit for max-size");

  // gen
  std::string gen_preset = "S", gen_out, gen_dir;
  int gen_passivity = 0, gen_count = 1, gen_actions = 2, gen_max_parents = 3,
      gen_domain = 2;
  double gen_determinism = 0.5;
  CLI::App* gen = app.add_subcommand("gen", "Generate a random synthetic process");
  gen->fallthrough();
  gen->add_option("--preset", gen_preset, "Size preset: S, M, L, XL")
      ->capture_default_str();
  gen->add_option("--passivity", gen_passivity, "Percent of passive state variables")
      ->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output file (stdout when omitted)");
  gen->add_option("--dir", gen_dir, "Output directory for batch generation");
  gen->add_option("--count", gen_count, "Batch size (needs --dir)")
      ->capture_default_str();
  gen->add_option("--determinism", gen_determinism,
                  "0 = flat random rows, 1 = near-deterministic")
      ->capture_default_str();
  gen->add_option("--actions", gen_actions, "Actions per process")
      ->capture_default_str();
  gen->add_option("--max-parents", gen_max_parents, "Per-variable t-parent cap")
      ->capture_default_str();
  gen->add_option("--domain", gen_domain, "Domain size of every variable")
      ->capture_default_str();

  // run
  std::string run_path, run_filter = "psbf", run_cluster_name,
              run_strategy = "components", run_out;
  int run_steps = 100, run_limit = 0, run_particles = 1000;
  std::size_t run_kl_cap = std::size_t{1} << 10;
  CLI::App* run = app.add_subcommand("run", "Filter a sampled trajectory");
  run->fallthrough();
  run->add_option("file", run_path, "Process spec file")->required();
  run->add_option("--filter", run_filter, "psbf, bk, pf, or exact")
      ->capture_default_str();
  run->add_option("--steps", run_steps, "Trajectory length")->capture_default_str();
  run->add_option("--clustering", run_cluster_name, "Stored clustering name");
  run->add_option("--strategy", run_strategy,
                  "Clustering strategy when no stored name is given")
      ->capture_default_str();
  run->add_option("--limit", run_limit, "Cluster size limit for max-size");
  run->add_option("--particles", run_particles, "Particle count for pf")
      ->capture_default_str();
  run->add_option("--kl-cap", run_kl_cap,
                  "Exact-oracle state-space cap for the kl_bits column")
      ->capture_default_str();
  run->add_option("-o,--out", run_out, "Write the per-step CSV here");

  // bench
  BenchPlan plan;
  std::vector<std::string> bench_filters = {"psbf", "bk"};
  std::vector<int> bench_threads = {1};
  std::string bench_out, bench_summary_out, bench_pf_match = "none";
  bool bench_no_timing = false;
  CLI::App* bench = app.add_subcommand("bench", "Run the benchmark grid");
  bench->fallthrough();
  bench->add_option("--presets", plan.presets, "Size presets")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--passivity", plan.passivity_levels, "Passivity percents")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--filters", bench_filters, "Filters to compare")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--thread-counts", bench_threads, "Filter thread counts")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--processes", plan.processes, "Processes per grid cell")
      ->capture_default_str();
  bench->add_option("--steps", plan.steps, "Steps per run")->capture_default_str();
  bench->add_option("--particles", plan.pf_particles, "Particle count for pf")
      ->capture_default_str();
  bench->add_option("--pf-match", bench_pf_match,
                    "Calibrate the particle count: none, speed, or accuracy")
      ->check(CLI::IsMember({"none", "speed", "accuracy"}))
      ->capture_default_str();
  bench->add_option("--kl-cap", plan.kl_cap, "Exact-oracle state-space cap")
      ->capture_default_str();
  bench->add_option("--workers", plan.workers, "Grid cells processed in parallel")
      ->capture_default_str();
  bench->add_flag("--no-timing", bench_no_timing,
                  "Zero the timing columns (golden runs)");
  bench->add_option("-o,--out", bench_out, "Write the record CSV here");
  bench->add_option("--summary-out", bench_summary_out, "Write the summary CSV here");

  // warehouse
  std::string wh_preset = "kiva16", wh_filter = "psbf", wh_mode = "centralised",
              wh_out, wh_auctions_out;
  int wh_steps = 100, wh_particles = 1000, wh_tasks = -1;
  CLI::App* warehouse =
      app.add_subcommand("warehouse", "Simulate the multi-robot warehouse");
  warehouse->fallthrough();
  warehouse->add_option("--preset", wh_preset, "Scenario preset")
      ->capture_default_str();
  warehouse->add_option("--filter", wh_filter, "psbf, bk, or pf")
      ->capture_default_str();
  warehouse->add_option("--mode", wh_mode, "centralised or decentralised")
      ->check(CLI::IsMember({"centralised", "decentralised"}))
      ->capture_default_str();
  warehouse->add_option("--steps", wh_steps, "Simulation length")
      ->capture_default_str();
  warehouse->add_option("--particles", wh_particles, "Particle count for pf")
      ->capture_default_str();
  warehouse->add_option("--tasks", wh_tasks, "Transport tasks issued (default 14)");
  warehouse->add_option("-o,--out", wh_out, "Write the trace CSV here");
  warehouse->add_option("--auctions-out", wh_auctions_out,
                        "Write the auction log CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*passivity) return cmd_passivity(global, passivity_path);
    if (*cluster)
      return cmd_cluster(global, cluster_path, cluster_strategy, cluster_limit);
    if (*gen)
      return cmd_gen(global, gen_preset, gen_passivity, gen_out, gen_dir, gen_count,
                     gen_determinism, gen_actions, gen_max_parents, gen_domain);
    if (*run)
      return cmd_run(global, run_path, run_filter, run_steps, run_cluster_name,
                     run_strategy, run_limit, run_particles, run_kl_cap, run_out);
    if (*bench) {
      plan.filters.clear();
      for (const std::string& name : bench_filters)
        plan.filters.push_back(parse_filter_or_fail(name));
      plan.thread_counts = bench_threads;
      plan.pf_match = parse_pf_match(bench_pf_match);
      plan.timing = !bench_no_timing;
      return cmd_bench(global, plan, bench_out, bench_summary_out);
    }
    if (*warehouse)
      return cmd_warehouse(global, wh_preset, wh_filter, wh_mode, wh_steps,
                           wh_particles, wh_tasks, wh_out, wh_auctions_out);
  } catch (const CliFailure& failure) {
    std::cerr << "error: " << failure.message << "\n";
    return failure.code;
  } catch (const DegenerateModelError& e) {
    std::cerr << "model degeneracy: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
