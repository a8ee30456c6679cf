#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "psbf/bench.hpp"
#include "psbf/report.hpp"
#include "psbf/synthgen.hpp"
#include "support.hpp"

using namespace psbf;

TEST_CASE("report: csv escaping follows the quoting rules") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("") == "");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
  CHECK(csv_line({"a", "b,c", "d"}) == "a,\"b,c\",d\n");
  CHECK(csv_line({}) == "\n");
}

TEST_CASE("report: numbers render short and stable") {
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(-2.25) == "-2.25");
  CHECK(format_number(0.0) == "0");
  // Round trip: the rendering parses back to the same double.
  const double v = 0.20751875;
  CHECK(std::stod(format_number(v)) == v);
  const double tiny = 1.25e-9;
  CHECK(std::stod(format_number(tiny)) == tiny);
}

TEST_CASE("report: table layout aligns columns under a dash rule") {
  const std::string text =
      format_table({"name", "value"}, {{"alpha", "1"}, {"b", "20"}});
  // Header, rule, two rows.
  int lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == 4);
  CHECK(text.find("name") != std::string::npos);
  CHECK(text.find("alpha") != std::string::npos);
  CHECK(text.find("---") != std::string::npos);
  // Render dispatcher: csv mode equals the csv_line rendering.
  const std::string csv =
      render_rows(OutputFormat::csv, {"a", "b"}, {{"1", "2"}});
  CHECK(csv == "a,b\n1,2\n");
  CHECK(render_rows(OutputFormat::table, {"a", "b"}, {{"1", "2"}}) ==
        format_table({"a", "b"}, {{"1", "2"}}));
}

TEST_CASE("report: enum names round-trip") {
  CHECK(parse_output_format("csv") == OutputFormat::csv);
  CHECK(parse_output_format("table") == OutputFormat::table);
  CHECK(to_string(OutputFormat::table) == "table");
  CHECK_THROWS_AS(parse_output_format("json"), std::invalid_argument);
  CHECK(parse_pf_match("none") == PfMatch::none);
  CHECK(parse_pf_match("speed") == PfMatch::speed);
  CHECK(parse_pf_match("accuracy") == PfMatch::accuracy);
  CHECK(to_string(PfMatch::accuracy) == "accuracy");
  CHECK_THROWS_AS(parse_pf_match("both"), std::invalid_argument);
}

TEST_CASE("report: passivity rows name each variable's verdict") {
  ActionDbn dbn = ts::identity_dbn(2);
  dbn.state_cpts[0].table = {0.5, 0.5, 0.5, 0.5};  // x0 mixes, x1 holds
  ts::add_sensor(dbn, 0, 0.9);
  const Process process = ts::wrap_process(std::move(dbn), "demo");
  CHECK(passivity_header() ==
        std::vector<std::string>{"action", "variable", "verdict", "phi", "reachable"});
  const auto rows = passivity_rows(process);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"hold", "x0", "active", "", "1"});
  CHECK(rows[1] == std::vector<std::string>{"hold", "x1", "passive", "", "0"});
}

TEST_CASE("report: cluster rows flag tables that read across the boundary") {
  // x1 copies x0's next value, so splitting them violates the locality rule.
  ActionDbn dbn = ts::identity_dbn(2);
  dbn.state_cpts[1].parents = {state_t1(0)};
  dbn.state_cpts[1].parent_domains = {2};
  dbn.state_cpts[1].table = {1.0, 0.0, 0.0, 1.0};
  dbn.derive_edges();
  const Process process = ts::wrap_process(std::move(dbn), "demo");
  CHECK(cluster_header() ==
        std::vector<std::string>{"cluster", "variables", "a1", "a2"});
  const auto split = cluster_rows(process, {{0}, {1}});
  REQUIRE(split.size() == 2);
  CHECK(split[0] == std::vector<std::string>{"0", "x0", "ok", "ok"});
  CHECK(split[1] == std::vector<std::string>{"1", "x1", "1 violations", "ok"});
  const auto whole = cluster_rows(process, {{0, 1}});
  REQUIRE(whole.size() == 1);
  CHECK(whole[0] == std::vector<std::string>{"0", "x0 x1", "ok", "ok"});
}

TEST_CASE("bench: summaries reproduce hand-computed statistics") {
  BenchmarkRecord base;
  base.process = "a";
  base.preset = "S";
  base.passivity_pct = 0;
  base.filter = "psbf";

  BenchmarkRecord r1 = base;
  r1.step = 0;
  r1.kl_bits = 0.4;
  r1.transition_us = 10;
  r1.observation_us = 5;
  r1.overhead_us = 1;
  r1.factors_skipped = 2;
  r1.factors_total = 4;
  BenchmarkRecord r2 = base;
  r2.step = 1;
  r2.kl_bits = 0.2;  // final step for process a
  r2.transition_us = 20;
  r2.observation_us = 10;
  r2.overhead_us = 2;
  r2.factors_skipped = 4;
  r2.factors_total = 4;
  BenchmarkRecord r3 = base;
  r3.process = "b";
  r3.step = 1;
  r3.kl_bits = 0.6;
  r3.transition_us = 30;
  r3.observation_us = 15;
  r3.overhead_us = 3;
  r3.factors_skipped = 0;
  r3.factors_total = 4;

  const auto rows = summarize({r1, r2, r3});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].has_kl);
  CHECK(rows[0].mean_final_kl == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(rows[0].std_final_kl == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rows[0].mean_step_us == doctest::Approx(32.0).epsilon(1e-12));
  CHECK(rows[0].mean_skipped_fraction == doctest::Approx(0.5).epsilon(1e-12));

  // A single record: the mean is the value and the spread collapses.
  const auto single = summarize({r1});
  REQUIRE(single.size() == 1);
  CHECK(single[0].mean_final_kl == doctest::Approx(0.4));
  CHECK(single[0].std_final_kl == 0.0);

  // Records without a reference entropy leave the columns unset.
  BenchmarkRecord blank = base;
  blank.kl_bits.reset();
  const auto none = summarize({blank});
  REQUIRE(none.size() == 1);
  CHECK_FALSE(none[0].has_kl);
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("bench: record csv carries the fixed column set") {
  BenchmarkRecord rec;
  rec.process = "synth-n4-m1-p0-seed1";
  rec.preset = "S";
  rec.filter = "bk";
  rec.step = 3;
  rec.kl_bits = 0.5;
  rec.transition_us = 7;
  const std::string csv = records_csv({rec});
  const std::string header =
      "process,preset,passivity,filter,threads,step,kl_bits,transition_us,"
      "observation_us,overhead_us,factors_skipped\n";
  REQUIRE(csv.substr(0, header.size()) == header);
  CHECK(csv.substr(header.size()) == "synth-n4-m1-p0-seed1,S,0,bk,1,3,0.5,7,0,0,0\n");
}

TEST_CASE("bench: the grid runner is deterministic and filter-consistent") {
  BenchPlan plan;
  plan.presets = {"S"};
  plan.passivity_levels = {0, 60};
  plan.filters = {FilterKind::psbf, FilterKind::bk};
  plan.thread_counts = {1};
  plan.processes = 2;
  plan.steps = 4;
  plan.seed = 3;
  plan.timing = false;

  const auto records = run_bench(plan);
  // 1 preset x 2 levels x 2 filters x 1 thread x 2 processes x 4 steps.
  CHECK(records.size() == 32);

  std::map<std::tuple<std::string, std::string, int>, double> kl_by_filter[2];
  for (const BenchmarkRecord& rec : records) {
    CHECK(rec.transition_us == 0);  // timing disabled
    CHECK(rec.observation_us == 0);
    CHECK(rec.overhead_us == 0);
    REQUIRE(rec.kl_bits.has_value());  // preset S fits the exact oracle
    const int which = rec.filter == "psbf" ? 0 : 1;
    kl_by_filter[which][{rec.process, rec.preset, rec.step}] = *rec.kl_bits;
    if (rec.filter == "psbf" && rec.passivity_pct == 60)
      CHECK(rec.factors_total > 0);
  }
  // Skipping factors must not change the answer.
  REQUIRE(kl_by_filter[0].size() == kl_by_filter[1].size());
  for (const auto& [key, kl] : kl_by_filter[0]) {
    REQUIRE(kl_by_filter[1].count(key) == 1);
    CHECK(kl == doctest::Approx(kl_by_filter[1][key]).epsilon(1e-9));
  }
  // The psbf rows at 60% passivity actually skip work.
  int skipped_rows = 0;
  for (const BenchmarkRecord& rec : records)
    if (rec.filter == "psbf" && rec.passivity_pct == 60 && rec.factors_skipped > 0)
      ++skipped_rows;
  CHECK(skipped_rows > 0);

  // Rerunning the plan reproduces the csv byte for byte.
  CHECK(records_csv(run_bench(plan)) == records_csv(records));

  // Extra worker threads must not change the records either.
  BenchPlan wide = plan;
  wide.workers = 2;
  CHECK(records_csv(run_bench(wide)) == records_csv(records));
}

TEST_CASE("bench: filter thread counts do not move the numbers") {
  BenchPlan plan;
  plan.presets = {"S"};
  plan.passivity_levels = {40};
  plan.filters = {FilterKind::psbf};
  plan.thread_counts = {1, 2};
  plan.processes = 2;
  plan.steps = 3;
  plan.seed = 5;
  plan.timing = false;

  const auto records = run_bench(plan);
  std::map<std::tuple<std::string, int>, std::vector<double>> by_threads;
  for (const BenchmarkRecord& rec : records) {
    REQUIRE(rec.kl_bits.has_value());
    by_threads[{rec.process, rec.step}].push_back(*rec.kl_bits);
  }
  for (const auto& [key, values] : by_threads) {
    REQUIRE(values.size() == 2);
    CHECK(values[0] == values[1]);  // bitwise: same beliefs, same entropy
  }
}

TEST_CASE("bench: particle filter rows join the same grid") {
  BenchPlan plan;
  plan.presets = {"S"};
  plan.passivity_levels = {0};
  plan.filters = {FilterKind::pf};
  plan.thread_counts = {1};
  plan.processes = 1;
  plan.steps = 3;
  plan.seed = 2;
  plan.pf_particles = 200;
  plan.timing = false;

  const auto records = run_bench(plan);
  CHECK(records.size() == 3);
  for (const BenchmarkRecord& rec : records) {
    CHECK(rec.filter == "pf");
    REQUIRE(rec.kl_bits.has_value());
    CHECK(*rec.kl_bits >= 0.0);
    CHECK(rec.factors_skipped == 0);
  }
  CHECK(records_csv(run_bench(plan)) == records_csv(records));
}
