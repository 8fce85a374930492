#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"
#include "nsprune/trainer.hpp"

namespace nsprune {

struct RunRecord {
  std::string dir;
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;

  double final_accuracy() const { return epochs.back().accuracy; }
  double mean_retained() const {
    double s = 0;
    for (const auto& e : epochs) s += e.retained_pct;
    return s / epochs.size();
  }
  double mean_gold_retained() const {
    double s = 0;
    for (const auto& e : epochs) s += e.gold_retained_pct;
    return s / epochs.size();
  }
  double mean_prune_seconds() const {
    double s = 0;
    for (const auto& e : epochs) s += e.prune_seconds;
    return s / epochs.size();
  }
  double mean_epoch_seconds() const {
    double s = 0;
    for (const auto& e : epochs) s += e.epoch_seconds;
    return s / epochs.size();
  }
  // Pruning overhead as a share of epoch wall time.
  double overhead_pct() const {
    const double es = mean_epoch_seconds();
    return es > 0 ? 100.0 * mean_prune_seconds() / es : 0.0;
  }
};

struct ModeAggregate {
  std::string mode;
  int runs = 0;
  double accuracy_mean = 0;
  std::optional<double> accuracy_std;  // needs >= 2 seeds
  double retained_mean = 0;
  double gold_retained_mean = 0;
  double prune_seconds_mean = 0;
  double epoch_seconds_mean = 0;
  double overhead_pct = 0;
  std::optional<double> delta_vs_baseline;  // accuracy percentage points
  bool flagged = false;                     // |delta| > 1 point
};

struct RunReport {
  std::vector<ModeAggregate> modes;  // sorted by mode name
  std::vector<std::string> issues;   // unreadable or short runs; not fatal
};

inline std::optional<RunRecord> read_run_dir(const std::string& dir, std::string& issue) {
  RunRecord rec;
  rec.dir = dir;
  try {
    std::ifstream in(dir + "/run.json");
    if (!in) {
      issue = dir + ": missing run.json";
      return std::nullopt;
    }
    json j;
    in >> j;
    rec.mode = j.at("mode").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.epochs = load_metrics_csv(dir + "/metrics.csv");
  } catch (const std::exception& e) {
    issue = dir + ": " + e.what();
    return std::nullopt;
  }
  if (rec.epochs.empty()) {
    issue = dir + ": metrics.csv has no epochs";
    return std::nullopt;
  }
  return rec;
}

inline RunReport build_report(const std::vector<std::string>& run_dirs) {
  RunReport report;
  std::map<std::string, std::vector<RunRecord>> by_mode;
  for (const auto& dir : run_dirs) {
    std::string issue;
    auto rec = read_run_dir(dir, issue);
    if (!rec) {
      report.issues.push_back(issue);
      continue;
    }
    by_mode[rec->mode].push_back(std::move(*rec));
  }
  for (auto& [mode, runs] : by_mode) {
    std::size_t max_epochs = 0;
    for (const auto& r : runs) max_epochs = std::max(max_epochs, r.epochs.size());
    for (const auto& r : runs)
      if (r.epochs.size() < max_epochs)
        report.issues.push_back(r.dir + ": short run (" + std::to_string(r.epochs.size()) +
                                " of " + std::to_string(max_epochs) + " epochs)");
  }

  const auto mean_of = [](const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / xs.size();
  };

  std::optional<double> baseline_accuracy;
  if (by_mode.count("baseline")) {
    std::vector<double> accs;
    for (const auto& r : by_mode["baseline"]) accs.push_back(r.final_accuracy());
    baseline_accuracy = mean_of(accs);
  }

  for (const auto& [mode, runs] : by_mode) {
    ModeAggregate agg;
    agg.mode = mode;
    agg.runs = static_cast<int>(runs.size());
    std::vector<double> accs, retained, gold, prune, epoch_s, overhead;
    for (const auto& r : runs) {
      accs.push_back(r.final_accuracy());
      retained.push_back(r.mean_retained());
      gold.push_back(r.mean_gold_retained());
      prune.push_back(r.mean_prune_seconds());
      epoch_s.push_back(r.mean_epoch_seconds());
      overhead.push_back(r.overhead_pct());
    }
    agg.accuracy_mean = mean_of(accs);
    if (accs.size() >= 2) {
      double ss = 0;
      for (double a : accs) ss += (a - agg.accuracy_mean) * (a - agg.accuracy_mean);
      agg.accuracy_std = std::sqrt(ss / (accs.size() - 1));
    }
    agg.retained_mean = mean_of(retained);
    agg.gold_retained_mean = mean_of(gold);
    agg.prune_seconds_mean = mean_of(prune);
    agg.epoch_seconds_mean = mean_of(epoch_s);
    agg.overhead_pct = mean_of(overhead);
    if (baseline_accuracy) {
      agg.delta_vs_baseline = 100.0 * (agg.accuracy_mean - *baseline_accuracy);
      agg.flagged = std::abs(*agg.delta_vs_baseline) > 1.0;
    }
    report.modes.push_back(std::move(agg));
  }
  return report;
}

inline void write_report_csv(const RunReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write report file '" + path + "'");
  out << "mode,runs,accuracy_mean,accuracy_std,retained_pct_mean,gold_retained_pct_mean,"
         "prune_seconds_mean,epoch_seconds_mean,overhead_pct,delta_vs_baseline,flagged\n";
  char buf[128];
  auto num = [&buf](const char* fmt, double v) {
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  for (const auto& m : report.modes) {
    out << m.mode << ',' << m.runs << ',' << num("%.6f", m.accuracy_mean) << ','
        << (m.accuracy_std ? num("%.6f", *m.accuracy_std) : "n/a") << ','
        << num("%.4f", m.retained_mean) << ',' << num("%.4f", m.gold_retained_mean) << ','
        << num("%.6f", m.prune_seconds_mean) << ',' << num("%.6f", m.epoch_seconds_mean) << ','
        << num("%.4f", m.overhead_pct) << ','
        << (m.delta_vs_baseline ? num("%.4f", *m.delta_vs_baseline) : "n/a") << ','
        << (m.flagged ? "yes" : "no") << '\n';
  }
}

inline void write_report_json(const RunReport& report, const std::string& path) {
  json j;
  j["modes"] = json::array();
  for (const auto& m : report.modes) {
    json mj;
    mj["mode"] = m.mode;
    mj["runs"] = m.runs;
    mj["accuracy_mean"] = m.accuracy_mean;
    if (m.accuracy_std)
      mj["accuracy_std"] = *m.accuracy_std;
    else
      mj["accuracy_std"] = nullptr;
    mj["retained_pct_mean"] = m.retained_mean;
    mj["gold_retained_pct_mean"] = m.gold_retained_mean;
    mj["prune_seconds_mean"] = m.prune_seconds_mean;
    mj["epoch_seconds_mean"] = m.epoch_seconds_mean;
    mj["overhead_pct"] = m.overhead_pct;
    if (m.delta_vs_baseline)
      mj["delta_vs_baseline"] = *m.delta_vs_baseline;
    else
      mj["delta_vs_baseline"] = nullptr;
    mj["flagged"] = m.flagged;
    j["modes"].push_back(std::move(mj));
  }
  j["issues"] = report.issues;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write report file '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace nsprune
