#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psbf/filtering.hpp"

namespace psbf {

// How `--pf-match` picks the particle count: none uses the fixed count,
// speed finds the largest count no slower than PSBF, accuracy the smallest
// count at least as accurate (final-step relative entropy).
enum class PfMatch { none, speed, accuracy };
std::string to_string(PfMatch match);
PfMatch parse_pf_match(const std::string& text);

struct BenchPlan {
  std::vector<std::string> presets = {"S", "M"};
  std::vector<int> passivity_levels = {0, 20, 40, 60};
  std::vector<FilterKind> filters = {FilterKind::psbf, FilterKind::bk};
  std::vector<int> thread_counts = {1};
  int processes = 50;  // per grid cell
  int steps = 100;
  std::uint64_t seed = 1;
  int pf_particles = 1000;
  PfMatch pf_match = PfMatch::none;
  std::size_t kl_cap = std::size_t{1} << 10;  // exact oracle only below this
  bool timing = true;  // false zeroes the timing columns (golden runs)
  int workers = 1;     // grid cells processed in parallel
  OnZeroLikelihood on_zero = OnZeroLikelihood::uniform_reset;
  MarginalizeMode marg = MarginalizeMode::prior;
};

struct BenchmarkRecord {
  std::string process;
  std::string preset;
  int passivity_pct = 0;
  std::string filter;
  int threads = 1;
  int step = 0;
  std::optional<double> kl_bits;  // empty when the exact oracle is over cap
  std::int64_t transition_us = 0;
  std::int64_t observation_us = 0;
  std::int64_t overhead_us = 0;
  int factors_skipped = 0;
  int factors_total = 0;  // kept for summaries; not a CSV column
};

struct SummaryRow {
  std::string preset;
  int passivity_pct = 0;
  std::string filter;
  bool has_kl = false;
  double mean_final_kl = 0.0;
  double std_final_kl = 0.0;  // population standard deviation
  double mean_step_us = 0.0;
  double mean_skipped_fraction = 0.0;
};

// Runs the full grid: per cell, generates a process, rolls one ground-truth
// trajectory shared by every filter, computes exact beliefs once when the
// joint fits the cap, then records per-step metrics per filter and thread
// count. Deterministic in the plan (timing columns aside).
std::vector<BenchmarkRecord> run_bench(const BenchPlan& plan);

std::string records_csv(const std::vector<BenchmarkRecord>& records);

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRecord>& records);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& rows);

}  // namespace psbf
