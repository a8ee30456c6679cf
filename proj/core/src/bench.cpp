#include "psbf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "psbf/belief.hpp"
#include "psbf/clustering.hpp"
#include "psbf/eval.hpp"
#include "psbf/passivity.hpp"
#include "psbf/report.hpp"
#include "psbf/rng.hpp"
#include "psbf/synthgen.hpp"
#include "psbf/worker_pool.hpp"

namespace psbf {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kGenTag = 0x6267656e;
constexpr std::uint64_t kInitTag = 0x62696e69;
constexpr std::uint64_t kActionTag = 0x62616374;
constexpr std::uint64_t kTruthTag = 0x62747275;
constexpr std::uint64_t kObsTag = 0x626f6273;
constexpr std::uint64_t kPfTag = 0x62706673;

std::int64_t elapsed_us(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start)
      .count();
}

struct Trajectory {
  std::vector<int> actions;  // chosen uniformly per step
  std::vector<StateVec> states;
  std::vector<ObsVec> observations;
};

Trajectory roll_trajectory(const Process& process, std::uint64_t seed, int steps) {
  Trajectory traj;
  RngStream init(seed, {kInitTag});
  StateVec truth(static_cast<std::size_t>(process.n()));
  for (int i = 0; i < process.n(); ++i) {
    truth[static_cast<std::size_t>(i)] = static_cast<int>(init.next_below(
        static_cast<std::uint64_t>(process.state_vars[static_cast<std::size_t>(i)].domain)));
  }
  RngStream chooser(seed, {kActionTag});
  for (int t = 0; t < steps; ++t) {
    const int a = static_cast<int>(
        chooser.next_below(static_cast<std::uint64_t>(process.actions.size())));
    const ActionDbn& dbn = process.actions[static_cast<std::size_t>(a)];
    RngStream next_rng(seed, {kTruthTag, static_cast<std::uint64_t>(t)});
    truth = sample_transition(dbn, truth, next_rng);
    RngStream obs_rng(seed, {kObsTag, static_cast<std::uint64_t>(t)});
    traj.actions.push_back(a);
    traj.states.push_back(truth);
    traj.observations.push_back(sample_observation(dbn, truth, obs_rng));
  }
  return traj;
}

// Exact beliefs after each step, or empty when the joint exceeds the cap.
std::vector<JointBelief> exact_beliefs(const Process& process, const Trajectory& traj,
                                       std::size_t cap) {
  std::vector<JointBelief> out;
  if (JointBelief::space_size(process.state_domains()) > cap) return out;
  ExactPropagator prop(process, cap);
  JointBelief belief = JointBelief::uniform(process.state_domains(), cap);
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    belief = prop.step(belief, traj.actions[t], traj.observations[t]);
    out.push_back(belief);
  }
  return out;
}

struct CellContext {
  const BenchPlan* plan;
  Process process;
  Clustering clustering;
  Trajectory traj;
  std::vector<JointBelief> exact;  // empty when over cap
  std::vector<PassivityReport> reports;
  std::string preset;
  int passivity_pct = 0;
  std::uint64_t pf_seed = 0;
};

void append_record(std::vector<BenchmarkRecord>& out, const CellContext& ctx,
                   FilterKind kind, int threads, int step,
                   std::optional<double> kl, const StepStats& stats) {
  BenchmarkRecord rec;
  rec.process = ctx.process.name;
  rec.preset = ctx.preset;
  rec.passivity_pct = ctx.passivity_pct;
  rec.filter = to_string(kind);
  rec.threads = threads;
  rec.step = step;
  rec.kl_bits = kl;
  if (ctx.plan->timing) {
    rec.transition_us = stats.transition_us;
    rec.observation_us = stats.observation_us;
    rec.overhead_us = stats.overhead_us;
  }
  rec.factors_skipped = stats.factors_skipped;
  rec.factors_total = stats.factors_total;
  out.push_back(rec);
}

void run_factored(const CellContext& ctx, FilterKind kind, int threads, int steps,
                  int pf_particles, std::vector<BenchmarkRecord>& out) {
  const Process& process = ctx.process;
  FilterOptions opt;
  opt.threads = threads;
  opt.on_zero = ctx.plan->on_zero;
  opt.marg = ctx.plan->marg;

  if (kind == FilterKind::pf) {
    ParticleSet particles =
        ParticleSet::uniform_init(process.state_domains(), pf_particles, ctx.pf_seed);
    for (int t = 0; t < steps; ++t) {
      const ActionDbn& dbn =
          process.actions[static_cast<std::size_t>(ctx.traj.actions[static_cast<std::size_t>(t)])];
      const auto start = Clock::now();
      particles = pf_step(particles, dbn, ctx.traj.observations[static_cast<std::size_t>(t)],
                          ctx.pf_seed, static_cast<std::uint64_t>(t), opt);
      StepStats stats;
      stats.transition_us = elapsed_us(start);
      std::optional<double> kl;
      if (!ctx.exact.empty())
        kl = relative_entropy(ctx.exact[static_cast<std::size_t>(t)], particles);
      append_record(out, ctx, kind, threads, t, kl, stats);
    }
    return;
  }

  if (kind == FilterKind::exact) {
    if (ctx.exact.empty()) return;  // oracle over cap: nothing to run
    ExactPropagator prop(process, ctx.plan->kl_cap);
    JointBelief belief = JointBelief::uniform(process.state_domains(), ctx.plan->kl_cap);
    for (int t = 0; t < steps; ++t) {
      const auto start = Clock::now();
      belief = prop.step(belief, ctx.traj.actions[static_cast<std::size_t>(t)],
                         ctx.traj.observations[static_cast<std::size_t>(t)],
                         ctx.plan->on_zero);
      StepStats stats;
      stats.transition_us = elapsed_us(start);
      append_record(out, ctx, kind, threads, t, 0.0, stats);
    }
    return;
  }

  FactoredBelief belief = FactoredBelief::uniform(process.state_domains(), ctx.clustering);
  for (int t = 0; t < steps; ++t) {
    const int a = ctx.traj.actions[static_cast<std::size_t>(t)];
    const ActionDbn& dbn = process.actions[static_cast<std::size_t>(a)];
    const ObsVec& obs = ctx.traj.observations[static_cast<std::size_t>(t)];
    std::pair<FactoredBelief, StepStats> next =
        kind == FilterKind::psbf
            ? psbf_step(belief, dbn, obs, ctx.reports[static_cast<std::size_t>(a)], opt)
            : bk_step(belief, dbn, obs, opt);
    belief = std::move(next.first);
    std::optional<double> kl;
    if (!ctx.exact.empty())
      kl = relative_entropy(ctx.exact[static_cast<std::size_t>(t)], belief);
    append_record(out, ctx, kind, threads, t, kl, next.second);
  }
}

CellContext build_cell(const BenchPlan& plan, const std::string& preset,
                       std::size_t preset_index, int passivity, int process_index) {
  SynthParams params = preset_params(preset);
  params.passivity_pct = passivity;
  params.seed = RngStream(plan.seed, {kGenTag, preset_index,
                                      static_cast<std::uint64_t>(passivity),
                                      static_cast<std::uint64_t>(process_index)})
                    .next_u64();
  CellContext ctx;
  ctx.plan = &plan;
  ctx.process = generate(params);
  const NamedClustering* stored = nullptr;
  for (const NamedClustering& nc : ctx.process.clusterings) {
    if (nc.name == "components") stored = &nc;
  }
  ctx.clustering = stored
                       ? Clustering::from_clusters(stored->clusters, ctx.process.n())
                       : components_clusters(ctx.process);
  const std::uint64_t traj_seed =
      RngStream(plan.seed, {kTruthTag, preset_index,
                            static_cast<std::uint64_t>(passivity),
                            static_cast<std::uint64_t>(process_index)})
          .next_u64();
  ctx.traj = roll_trajectory(ctx.process, traj_seed, plan.steps);
  ctx.exact = exact_beliefs(ctx.process, ctx.traj, plan.kl_cap);
  ctx.reports.reserve(ctx.process.actions.size());
  for (const ActionDbn& dbn : ctx.process.actions)
    ctx.reports.push_back(detect_all(dbn));
  ctx.preset = preset;
  ctx.passivity_pct = passivity;
  ctx.pf_seed = RngStream(plan.seed, {kPfTag, preset_index,
                                      static_cast<std::uint64_t>(passivity),
                                      static_cast<std::uint64_t>(process_index)})
                    .next_u64();
  return ctx;
}

// Mean per-step wall time and final-step relative entropy for one filter on a
// probe prefix of the trajectory.
std::pair<double, double> probe_filter(const CellContext& ctx, FilterKind kind,
                                       int particles, int probe_steps) {
  std::vector<BenchmarkRecord> records;
  run_factored(ctx, kind, 1, probe_steps, particles, records);
  double total_us = 0.0;
  double final_kl = 0.0;
  for (const BenchmarkRecord& rec : records) {
    total_us += static_cast<double>(rec.transition_us + rec.observation_us +
                                    rec.overhead_us);
    if (rec.step == probe_steps - 1 && rec.kl_bits) final_kl = *rec.kl_bits;
  }
  return {records.empty() ? 0.0 : total_us / static_cast<double>(records.size()),
          final_kl};
}

// Coarse particle-count calibration against PSBF on one representative cell.
int calibrate_pf(const CellContext& ctx, const BenchPlan& plan) {
  const int probe_steps = std::min(plan.steps, 25);
  if (probe_steps < 1) return plan.pf_particles;
  const auto [psbf_us, psbf_kl] = probe_filter(ctx, FilterKind::psbf, 0, probe_steps);
  constexpr int kMin = 64, kMax = 262144;
  if (plan.pf_match == PfMatch::speed) {
    // Step time grows with the particle count: largest count no slower.
    int lo = kMin, hi = kMax;
    while (lo < hi) {
      const int mid = lo + (hi - lo + 1) / 2;
      const auto [pf_us, pf_kl] = probe_filter(ctx, FilterKind::pf, mid, probe_steps);
      (void)pf_kl;
      if (pf_us <= psbf_us)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }
  // Accuracy: double until the probe's final relative entropy is no worse.
  if (ctx.exact.empty()) return plan.pf_particles;
  for (int count = kMin; count <= kMax; count *= 2) {
    const auto [pf_us, pf_kl] = probe_filter(ctx, FilterKind::pf, count, probe_steps);
    (void)pf_us;
    if (pf_kl <= psbf_kl) return count;
  }
  return kMax;
}

}  // namespace

std::string to_string(PfMatch match) {
  switch (match) {
    case PfMatch::none: return "none";
    case PfMatch::speed: return "speed";
    default: return "accuracy";
  }
}

PfMatch parse_pf_match(const std::string& text) {
  if (text == "none") return PfMatch::none;
  if (text == "speed") return PfMatch::speed;
  if (text == "accuracy") return PfMatch::accuracy;
  throw std::invalid_argument("unknown pf-match mode: " + text);
}

std::vector<BenchmarkRecord> run_bench(const BenchPlan& plan) {
  if (plan.presets.empty() || plan.passivity_levels.empty() || plan.filters.empty() ||
      plan.thread_counts.empty() || plan.processes < 1 || plan.steps < 0)
    throw std::invalid_argument("bench plan: empty grid");

  struct CellKey {
    std::size_t preset_index;
    int passivity;
    int process_index;
  };
  std::vector<CellKey> cells;
  for (std::size_t pi = 0; pi < plan.presets.size(); ++pi) {
    for (int passivity : plan.passivity_levels) {
      for (int proc = 0; proc < plan.processes; ++proc)
        cells.push_back({pi, passivity, proc});
    }
  }

  // Particle-count calibration runs once per (preset, passivity) pair on its
  // first process.
  const bool wants_pf =
      std::find(plan.filters.begin(), plan.filters.end(), FilterKind::pf) !=
      plan.filters.end();
  std::map<std::pair<std::size_t, int>, int> calibrated;
  if (wants_pf && plan.pf_match != PfMatch::none) {
    for (std::size_t pi = 0; pi < plan.presets.size(); ++pi) {
      for (int passivity : plan.passivity_levels) {
        const CellContext ctx = build_cell(plan, plan.presets[pi], pi, passivity, 0);
        calibrated[{pi, passivity}] = calibrate_pf(ctx, plan);
      }
    }
  }

  std::vector<std::vector<BenchmarkRecord>> slots(cells.size());
  parallel_for(plan.workers, cells.size(), [&](std::size_t index) {
    const CellKey& key = cells[index];
    CellContext ctx = build_cell(plan, plan.presets[key.preset_index],
                                 key.preset_index, key.passivity, key.process_index);
    int particles = plan.pf_particles;
    if (auto it = calibrated.find({key.preset_index, key.passivity});
        it != calibrated.end())
      particles = it->second;
    for (FilterKind kind : plan.filters) {
      for (int threads : plan.thread_counts)
        run_factored(ctx, kind, threads, plan.steps, particles, slots[index]);
    }
  });

  std::vector<BenchmarkRecord> records;
  for (std::vector<BenchmarkRecord>& slot : slots) {
    for (BenchmarkRecord& rec : slot) records.push_back(std::move(rec));
  }
  return records;
}

std::string records_csv(const std::vector<BenchmarkRecord>& records) {
  std::string out = csv_line({"process", "preset", "passivity", "filter", "threads",
                              "step", "kl_bits", "transition_us", "observation_us",
                              "overhead_us", "factors_skipped"});
  for (const BenchmarkRecord& rec : records) {
    out += csv_line({rec.process, rec.preset, std::to_string(rec.passivity_pct),
                     rec.filter, std::to_string(rec.threads), std::to_string(rec.step),
                     rec.kl_bits ? format_number(*rec.kl_bits) : std::string(),
                     std::to_string(rec.transition_us),
                     std::to_string(rec.observation_us),
                     std::to_string(rec.overhead_us),
                     std::to_string(rec.factors_skipped)});
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  struct Bucket {
    SummaryRow row;
    std::map<std::string, std::pair<int, double>> final_kl;  // process -> (step, kl)
    double step_us_sum = 0.0;
    std::size_t step_count = 0;
    double fraction_sum = 0.0;
    std::size_t fraction_count = 0;
  };
  std::vector<Bucket> buckets;
  std::map<std::tuple<std::string, int, std::string>, std::size_t> index;
  for (const BenchmarkRecord& rec : records) {
    const auto key = std::make_tuple(rec.preset, rec.passivity_pct, rec.filter);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, buckets.size()).first;
      Bucket bucket;
      bucket.row.preset = rec.preset;
      bucket.row.passivity_pct = rec.passivity_pct;
      bucket.row.filter = rec.filter;
      buckets.push_back(std::move(bucket));
    }
    Bucket& bucket = buckets[it->second];
    bucket.step_us_sum += static_cast<double>(rec.transition_us + rec.observation_us +
                                              rec.overhead_us);
    bucket.step_count += 1;
    if (rec.factors_total > 0) {
      bucket.fraction_sum += static_cast<double>(rec.factors_skipped) /
                             static_cast<double>(rec.factors_total);
      bucket.fraction_count += 1;
    }
    if (rec.kl_bits) {
      auto& slot = bucket.final_kl[rec.process];  // default (0, 0); step 0 updates it
      if (rec.step >= slot.first) slot = {rec.step, *rec.kl_bits};
    }
  }
  std::vector<SummaryRow> rows;
  for (Bucket& bucket : buckets) {
    SummaryRow row = bucket.row;
    if (!bucket.final_kl.empty()) {
      row.has_kl = true;
      double sum = 0.0;
      for (const auto& [proc, entry] : bucket.final_kl) sum += entry.second;
      row.mean_final_kl = sum / static_cast<double>(bucket.final_kl.size());
      double var = 0.0;
      for (const auto& [proc, entry] : bucket.final_kl) {
        const double d = entry.second - row.mean_final_kl;
        var += d * d;
      }
      row.std_final_kl =
          std::sqrt(var / static_cast<double>(bucket.final_kl.size()));
    }
    if (bucket.step_count > 0)
      row.mean_step_us = bucket.step_us_sum / static_cast<double>(bucket.step_count);
    if (bucket.fraction_count > 0)
      row.mean_skipped_fraction =
          bucket.fraction_sum / static_cast<double>(bucket.fraction_count);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::vector<std::string> summary_header() {
  return {"preset", "passivity", "filter", "mean_final_kl_bits", "std_final_kl_bits",
          "mean_step_us", "mean_skipped_fraction"};
}

std::vector<std::vector<std::string>> summary_cells(const std::vector<SummaryRow>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const SummaryRow& row : rows) {
    out.push_back({row.preset, std::to_string(row.passivity_pct), row.filter,
                   row.has_kl ? format_number(row.mean_final_kl) : std::string(),
                   row.has_kl ? format_number(row.std_final_kl) : std::string(),
                   format_number(row.mean_step_us),
                   format_number(row.mean_skipped_fraction)});
  }
  return out;
}

}  // namespace

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  return render_rows(OutputFormat::csv, summary_header(), summary_cells(rows));
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  return render_rows(OutputFormat::table, summary_header(), summary_cells(rows));
}

}  // namespace psbf
