#include <catch2/catch_amalgamated.hpp>

#include "nsprune/report.hpp"

#include "support/temp.hpp"

using namespace nsprune;
using Catch::Approx;
using nsprune::testing::TempDir;

namespace {

void write_run(const TempDir& dir, const std::string& name, const std::string& mode,
               std::uint64_t seed, const std::vector<EpochMetrics>& rows) {
  std::filesystem::create_directories(dir.path / name);
  json run;
  run["mode"] = mode;
  run["seed"] = seed;
  nsprune::testing::spit(dir.file(name + "/run.json"), run.dump() + "\n");
  bool first = true;
  for (const auto& em : rows) {
    append_metrics_csv(dir.file(name + "/metrics.csv"), em, first);
    first = false;
  }
}

std::vector<EpochMetrics> rows_with(double accuracy, double prune_s, double epoch_s) {
  std::vector<EpochMetrics> rows;
  for (int e = 1; e <= 3; ++e)
    rows.push_back({e, 2.0 - 0.1 * e, accuracy - 0.05 * (3 - e), 80.0, 92.0, prune_s, epoch_s});
  return rows;
}

}  // namespace

TEST_CASE("a single run reports raw values and no std") {
  TempDir dir("report_single");
  write_run(dir, "r1", "frozen", 1, rows_with(0.6, 0.002, 0.02));
  RunReport rep = build_report({dir.file("r1")});
  REQUIRE(rep.modes.size() == 1);
  const auto& m = rep.modes[0];
  CHECK(m.mode == "frozen");
  CHECK(m.runs == 1);
  CHECK(m.accuracy_mean == Approx(0.6));
  CHECK_FALSE(m.accuracy_std.has_value());
  CHECK(m.retained_mean == Approx(80.0));
  CHECK_FALSE(m.delta_vs_baseline.has_value());
}

TEST_CASE("two identical runs have zero std") {
  TempDir dir("report_twin");
  write_run(dir, "r1", "frozen", 1, rows_with(0.6, 0.002, 0.02));
  write_run(dir, "r2", "frozen", 2, rows_with(0.6, 0.002, 0.02));
  RunReport rep = build_report({dir.file("r1"), dir.file("r2")});
  REQUIRE(rep.modes.size() == 1);
  REQUIRE(rep.modes[0].accuracy_std.has_value());
  CHECK(*rep.modes[0].accuracy_std == Approx(0.0).margin(1e-15));
}

TEST_CASE("overhead is recomputable from the raw metrics columns") {
  TempDir dir("report_overhead");
  write_run(dir, "r1", "frozen", 1, rows_with(0.6, 0.004, 0.025));
  RunReport rep = build_report({dir.file("r1")});

  auto rows = load_metrics_csv(dir.file("r1/metrics.csv"));
  double prune = 0, epoch = 0;
  for (const auto& r : rows) {
    prune += r.prune_seconds;
    epoch += r.epoch_seconds;
  }
  prune /= rows.size();
  epoch /= rows.size();
  CHECK(rep.modes[0].overhead_pct == 100.0 * prune / epoch);  // exact, same doubles
}

TEST_CASE("baseline deltas and the one-point flag") {
  TempDir dir("report_delta");
  write_run(dir, "b1", "baseline", 1, rows_with(0.50, 0.0, 0.02));
  write_run(dir, "f1", "frozen", 1, rows_with(0.60, 0.002, 0.02));
  write_run(dir, "t1", "trainable", 1, rows_with(0.505, 0.002, 0.02));
  RunReport rep = build_report({dir.file("b1"), dir.file("f1"), dir.file("t1")});
  REQUIRE(rep.modes.size() == 3);
  for (const auto& m : rep.modes) {
    if (m.mode == "baseline") {
      CHECK(*m.delta_vs_baseline == Approx(0.0).margin(1e-12));
      CHECK_FALSE(m.flagged);
    } else if (m.mode == "frozen") {
      CHECK(*m.delta_vs_baseline == Approx(10.0));
      CHECK(m.flagged);
    } else {
      CHECK(*m.delta_vs_baseline == Approx(0.5));
      CHECK_FALSE(m.flagged);
    }
  }
}

TEST_CASE("missing and short runs are listed, not fatal") {
  TempDir dir("report_missing");
  write_run(dir, "ok", "frozen", 1, rows_with(0.6, 0.002, 0.02));
  std::vector<EpochMetrics> short_rows = {{1, 2.0, 0.5, 80.0, 92.0, 0.002, 0.02}};
  write_run(dir, "short", "frozen", 2, short_rows);
  RunReport rep = build_report({dir.file("ok"), dir.file("missing_dir"), dir.file("short")});
  REQUIRE(rep.modes.size() == 1);
  CHECK(rep.modes[0].runs == 2);
  REQUIRE(rep.issues.size() == 2);
  CHECK_THAT(rep.issues[0], Catch::Matchers::ContainsSubstring("missing_dir"));
  CHECK_THAT(rep.issues[1], Catch::Matchers::ContainsSubstring("short"));
}

TEST_CASE("report files are written with n/a placeholders") {
  TempDir dir("report_files");
  write_run(dir, "r1", "frozen", 1, rows_with(0.6, 0.002, 0.02));
  RunReport rep = build_report({dir.file("r1")});
  write_report_csv(rep, dir.file("report.csv"));
  write_report_json(rep, dir.file("report.json"));
  const std::string csv = nsprune::testing::slurp(dir.file("report.csv"));
  CHECK_THAT(csv, Catch::Matchers::ContainsSubstring("mode,runs,accuracy_mean"));
  CHECK_THAT(csv, Catch::Matchers::ContainsSubstring("n/a"));
  const std::string js = nsprune::testing::slurp(dir.file("report.json"));
  CHECK_THAT(js, Catch::Matchers::ContainsSubstring("\"accuracy_std\": null"));
}
