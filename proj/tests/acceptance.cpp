// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Criterion 6's training configuration is pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "nsprune/abduction.hpp"
#include "nsprune/consistency.hpp"
#include "nsprune/core.hpp"
#include "nsprune/pruner.hpp"
#include "nsprune/proximity.hpp"
#include "nsprune/report.hpp"
#include "nsprune/trainer.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/temp.hpp"

using namespace nsprune;
namespace fs = std::filesystem;

namespace {

struct Check {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- criterion 1: solver vs oracle on 200 seeded random instances ----------

Check criterion_oracle_optimality() {
  Check c{1, "oracle optimality (200 random instances)"};
  const auto t0 = std::chrono::steady_clock::now();
  OracleCheckParams params;  // <=6 samples, <=10 pre-images, <=8 edges
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    OracleInstance inst = random_oracle_instance(params, seed);
    IncidenceMap inc = incidence(inst.batch, inst.edges);
    IlpModel model = build_ilp(inst.batch, inc);
    PruneSolution fast = solve_exact(model);
    check_solution(model, fast);
    PruneSolution oracle = brute_force_oracle(inst.batch, inc);
    if (fast.objective == oracle.objective) ++agree;
  }
  const double secs = seconds_since(t0);
  c.pass = agree == 200 && secs < 60.0;
  c.detail = std::to_string(agree) + "/200 objectives equal in " + fmt("%.2f", secs) + "s";
  return c;
}

// --- criterion 2: example fixtures ------------------------------------------

Check criterion_example_fixtures() {
  Check c{2, "example fixtures (sum-8, sum-2, three-sample pruning)"};
  bool ok = true;
  std::ostringstream detail;

  const auto sum8 = abduce_sum(2, 8).preimages;
  ok &= sum8.size() == 9;
  detail << "|sum(2,8)|=" << sum8.size();

  const auto sum2 = abduce_sum(2, 2).preimages;
  ok &= sum2 == PreImageSet{{0, 2}, {1, 1}, {2, 0}};
  detail << ", sum(2,2)=" << (sum2 == PreImageSet{{0, 2}, {1, 1}, {2, 0}} ? "exact" : "WRONG");

  auto batch = nsprune::testing::example_batch();
  auto edges = nsprune::testing::example_edges();
  IncidenceMap inc = incidence(batch, edges);
  IlpModel model = build_ilp(batch, inc);
  PruneSolution sol = solve_exact(model);
  check_solution(model, sol);
  PruneSolution oracle = brute_force_oracle(batch, inc);
  ok &= sol.objective == 7 && oracle.objective == 7;
  ok &= sol.included_edges() == std::vector<int>{1};
  PrunedBatch pruned = apply_pruning(batch, sol);
  ok &= pruned.samples[0].preimages == PreImageSet{{7, 1}, {8, 0}};
  const bool both_infeasible = !edge_subset_objective(inc, {0, 1}).has_value();
  ok &= both_infeasible;
  detail << ", objective=" << sol.objective << ", kept={x1->7,x1->8}"
         << (pruned.samples[0].preimages == PreImageSet{{7, 1}, {8, 0}} ? "" : " WRONG")
         << ", {e1,e2} infeasible=" << (both_infeasible ? "yes" : "NO");

  c.pass = ok;
  c.detail = detail.str();
  return c;
}

// --- criterion 3: soundness, forced keeps, supervised samples ---------------

Check criterion_soundness() {
  Check c{3, "soundness (coverage, forced keeps, supervised samples)"};
  int violations = 0;
  long long checked_samples = 0, supervised = 0;
  for (std::uint64_t seed = 1000; seed < 1200; ++seed) {
    OracleInstance inst = random_oracle_instance({}, seed);
    IncidenceMap inc = incidence(inst.batch, inst.edges);
    IlpModel model = build_ilp(inst.batch, inc);
    PruneSolution sol = solve_exact(model);
    try {
      check_solution(model, sol);  // coverage + forced keeps + characterization
    } catch (const InvariantError&) {
      ++violations;
      continue;
    }
    PrunedBatch pruned = apply_pruning(inst.batch, sol);
    for (std::size_t s = 0; s < inst.batch.size(); ++s) {
      ++checked_samples;
      if (pruned.samples[s].preimages.empty()) ++violations;
      if (inst.batch[s].preimages.size() == 1) {
        ++supervised;
        if (pruned.samples[s].preimages != inst.batch[s].preimages) ++violations;
      }
    }
    for (const auto& pid : inc.globally_consistent)
      if (sol.discarded[pid.sample][pid.index]) ++violations;
  }
  c.pass = violations == 0;
  c.detail = std::to_string(checked_samples) + " samples (" + std::to_string(supervised) +
             " supervised) across 200 instances, " + std::to_string(violations) + " violations";
  return c;
}

// --- criterion 4: abduction counts ------------------------------------------

Check criterion_abduction_counts() {
  Check c{4, "abduction counts and raw-scan equivalence"};
  bool ok = true;
  std::ostringstream detail;

  const auto max29 = abduce_max(2, 9).preimages.size();
  const auto max49 = abduce_max(4, 9).preimages.size();
  const auto hwf32 = abduce_hwf(3, 2).preimages.size();
  ok &= max29 == 19 && max49 == 3439 && hwf32 == 10;
  detail << "|max(2,9)|=" << max29 << ", |max(4,9)|=" << max49 << ", |hwf(3,2)|=" << hwf32;

  std::mt19937_64 rng(99);
  bool symmetry = true;
  for (int trial = 0; trial < 30; ++trial) {
    const int arity = 1 + static_cast<int>(rng() % 4);
    const int target = static_cast<int>(rng() % (9 * arity + 1));
    symmetry &= abduce_sum(arity, target).preimages.size() ==
                abduce_sum(arity, 9 * arity - target).preimages.size();
  }
  ok &= symmetry;
  detail << ", sum symmetry=" << (symmetry ? "ok" : "FAIL");

  bool equivalence = true;
  for (int arity = 1; arity <= 4 && equivalence; ++arity) {
    for (int target = -1; target <= 9 * arity + 1; ++target)
      equivalence &= abduce_sum(arity, target).preimages ==
                     nsprune::testing::raw_scan_abduction({Theory::Sum, target, arity},
                                                          kDigitClassCount);
    for (int target = -1; target <= 10; ++target)
      equivalence &= abduce_max(arity, target).preimages ==
                     nsprune::testing::raw_scan_abduction({Theory::Max, target, arity},
                                                          kDigitClassCount);
  }
  for (int arity : {1, 3})
    for (int target = -10; target <= 82 && equivalence; ++target)
      equivalence &= abduce_hwf(arity, target).preimages ==
                     nsprune::testing::raw_scan_abduction({Theory::Hwf, target, arity},
                                                          kHwfClassCount);
  ok &= equivalence;
  detail << ", scan equivalence (M<=4)=" << (equivalence ? "ok" : "FAIL");

  c.pass = ok;
  c.detail = detail.str();
  return c;
}

// --- criterion 5: gradients and normalization --------------------------------

Check criterion_gradients() {
  Check c{5, "gradient and softmax normalization checks"};
  std::mt19937_64 rng(555);
  double worst_score_rel = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int arity = 1 + static_cast<int>(rng() % 3);
    const int classes = 3 + static_cast<int>(rng() % 8);
    std::vector<std::vector<double>> scores(arity, std::vector<double>(classes));
    for (auto& row : scores) {
      double total = 0;
      for (double& s : row) {
        s = 0.05 + uniform01(rng);
        total += s;
      }
      for (double& s : row) s /= total;
    }
    std::set<PreImage> omega_set;
    int count = 1 + static_cast<int>(rng() % 6);
    int distinct = 1;
    for (int i = 0; i < arity && distinct < count; ++i) distinct *= classes;
    count = std::min(count, distinct);
    while (static_cast<int>(omega_set.size()) < count) {
      PreImage p(arity);
      for (int& v : p) v = static_cast<int>(rng() % classes);
      omega_set.insert(std::move(p));
    }
    PreImageSet omega(omega_set.begin(), omega_set.end());
    auto grad = semantic_loss_grad(scores, omega);
    for (int j = 0; j < arity; ++j)
      for (int y = 0; y < classes; ++y) {
        auto f = [&](double x) {
          auto s = scores;
          s[j][y] = x;
          return semantic_loss(s, omega).value;
        };
        const double fd = nsprune::testing::central_difference(f, scores[j][y], 1e-5);
        if (std::abs(fd) < 1e-8 && std::abs(grad[j][y]) < 1e-8) continue;
        worst_score_rel =
            std::max(worst_score_rel, nsprune::testing::relative_error(grad[j][y], fd));
      }
  }

  double worst_param_rel = 0;
  for (int trial = 0; trial < 8; ++trial) {
    Mlp model = Mlp::init(4, 6, 5, rng);
    const int arity = 2;
    std::vector<std::vector<double>> xs(arity, std::vector<double>(4));
    for (auto& x : xs)
      for (double& v : x) v = 2.0 * uniform01(rng) - 1.0;
    std::set<PreImage> omega_set;
    while (omega_set.size() < 3) {
      PreImage p(arity);
      for (int& v : p) v = static_cast<int>(rng() % 5);
      omega_set.insert(std::move(p));
    }
    PreImageSet omega(omega_set.begin(), omega_set.end());

    MlpGrads grads(model);
    std::vector<std::vector<double>> scores;
    std::vector<MlpForward> fwd;
    for (const auto& x : xs) {
      fwd.push_back(model.forward(x));
      scores.push_back(fwd.back().scores);
    }
    auto dscores = semantic_loss_grad(scores, omega);
    for (int j = 0; j < arity; ++j) backprop_instance(model, xs[j], fwd[j], dscores[j], grads);
    std::vector<double> analytic;
    analytic.insert(analytic.end(), grads.w1.begin(), grads.w1.end());
    analytic.insert(analytic.end(), grads.b1.begin(), grads.b1.end());
    analytic.insert(analytic.end(), grads.w2.begin(), grads.w2.end());
    analytic.insert(analytic.end(), grads.b2.begin(), grads.b2.end());
    const std::vector<double> params = model.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto probe = [&](double v) {
        auto copy = params;
        copy[p] = v;
        Mlp m2 = model;
        m2.set_parameters(copy);
        std::vector<std::vector<double>> s2;
        for (const auto& x : xs) s2.push_back(m2.forward(x).scores);
        return semantic_loss(s2, omega).value;
      };
      const double fd = nsprune::testing::central_difference(probe, params[p], 1e-6);
      if (std::abs(fd) < 1e-7 && std::abs(analytic[p]) < 1e-7) continue;
      worst_param_rel =
          std::max(worst_param_rel, nsprune::testing::relative_error(analytic[p], fd));
    }
  }

  double worst_norm = 0;
  Mlp norm_model = Mlp::init(6, 10, 10, rng);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = 6.0 * uniform01(rng) - 3.0;
    auto f = norm_model.forward(x);
    double total = 0;
    for (double s : f.scores) total += s;
    worst_norm = std::max(worst_norm, std::abs(total - 1.0));
  }

  c.pass = worst_score_rel < 1e-4 && worst_param_rel < 1e-3 && worst_norm < 1e-9;
  c.detail = "score-grad rel " + fmt("%.2e", worst_score_rel) + " (<1e-4), param-grad rel " +
             fmt("%.2e", worst_param_rel) + " (<1e-3), softmax |sum-1| " +
             fmt("%.2e", worst_norm) + " (<1e-9)";
  return c;
}

// --- criteria 6 & 7: direction of effect and overhead ------------------------

// Pinned configuration: SUM-3, c=10, m=16, n=100, noise 0.15 against unit
// class separation, 5 seeds, T=50, batch 64, k=1, euclidean, lr 1.0,
// hidden width 64.
struct Effect {
  double baseline_mean = 0;
  double frozen_mean = 0;
  double gold_retention = 0;   // mean per-epoch gold retention, frozen arm
  double mean_batch_prune = 0; // mean per-batch pruning seconds, frozen arm
  double runtime_seconds = 0;
  int seeds_improved = 0;      // seeds where frozen beats baseline
  std::vector<std::string> run_dirs;
};

Effect run_direction_of_effect(const nsprune::testing::TempDir& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Effect eff;
  SynthTask task;
  task.theory = Theory::Sum;
  task.arity = 3;
  task.sample_count = 100;
  task.input_dim = 16;
  task.noise = 0.15;
  task.test_count = 500;

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 64;
  cfg.learning_rate = 1.0;
  cfg.hidden_dim = 64;
  cfg.k = 1;
  cfg.metric = Metric::Euclidean;

  double gold_sum = 0;
  double prune_time_sum = 0;
  long long prune_batches = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double seed_baseline = 0;
    SynthData data = synth_generate(task, seed);
    Dataset abduced = abduce_dataset(data.dataset).dataset;
    for (TrainMode mode : {TrainMode::Baseline, TrainMode::Frozen}) {
      cfg.mode = mode;
      cfg.seed = seed;
      TrainResult res = train(abduced, data.features, data.test, cfg);
      const std::string run_dir =
          dir.file(std::string(train_mode_name(mode)) + "_" + std::to_string(seed));
      fs::create_directories(run_dir);
      json run;
      run["mode"] = train_mode_name(mode);
      run["seed"] = seed;
      nsprune::testing::spit(run_dir + "/run.json", run.dump() + "\n");
      bool first = true;
      for (const auto& em : res.epochs) {
        append_metrics_csv(run_dir + "/metrics.csv", em, first);
        first = false;
      }
      eff.run_dirs.push_back(run_dir);

      const double final_acc = res.epochs.back().accuracy;
      if (mode == TrainMode::Baseline) {
        seed_baseline = final_acc;
        eff.baseline_mean += final_acc / 5.0;
      } else {
        eff.frozen_mean += final_acc / 5.0;
        if (final_acc > seed_baseline) ++eff.seeds_improved;
        for (const auto& em : res.epochs) gold_sum += em.gold_retained_pct;
        for (const auto& per_epoch : res.batch_stats)
          for (const auto& st : per_epoch) {
            prune_time_sum += st.solve_seconds;
            ++prune_batches;
          }
      }
    }
  }
  eff.gold_retention = gold_sum / (5.0 * cfg.epochs);
  eff.mean_batch_prune = prune_batches ? prune_time_sum / prune_batches : 0.0;
  eff.runtime_seconds = seconds_since(t0);
  return eff;
}

Check criterion_direction_of_effect(const Effect& eff) {
  Check c{6, "direction of effect (frozen vs baseline, SUM-3 synthetic)"};
  const double gap = 100.0 * (eff.frozen_mean - eff.baseline_mean);
  c.pass = gap >= 5.0 && eff.seeds_improved >= 3 && eff.gold_retention >= 85.0 &&
           eff.runtime_seconds <= 600.0;
  c.detail = "baseline " + fmt("%.1f", 100.0 * eff.baseline_mean) + "%, frozen " +
             fmt("%.1f", 100.0 * eff.frozen_mean) + "%, gap " + fmt("%.1f", gap) +
             "pp (>=5), improved on " + std::to_string(eff.seeds_improved) +
             "/5 seeds (>=3), gold retention " + fmt("%.1f", eff.gold_retention) +
             "% (>=85), " + fmt("%.1f", eff.runtime_seconds) + "s (<=600)";
  return c;
}

Check criterion_overhead(const Effect& eff) {
  Check c{7, "pruning overhead at batch 64"};
  // Recompute each mode's reported overhead column from the raw metrics.csv
  // values alone and demand exact equality with the aggregated report.
  RunReport rep = build_report(eff.run_dirs);
  std::map<std::string, std::vector<double>> recomputed;
  for (const auto& dirname : eff.run_dirs) {
    std::ifstream in(dirname + "/run.json");
    json run;
    in >> run;
    const auto rows = load_metrics_csv(dirname + "/metrics.csv");
    double prune = 0, epoch = 0;
    for (const auto& em : rows) {
      prune += em.prune_seconds;
      epoch += em.epoch_seconds;
    }
    prune /= rows.size();
    epoch /= rows.size();
    recomputed[run.at("mode").get<std::string>()].push_back(
        epoch > 0 ? 100.0 * prune / epoch : 0.0);
  }
  bool recompute_ok = !rep.modes.empty();
  for (const auto& m : rep.modes) {
    double mean = 0;
    for (double v : recomputed[m.mode]) mean += v;
    mean /= recomputed[m.mode].size();
    recompute_ok &= m.overhead_pct == mean;
  }
  c.pass = eff.mean_batch_prune <= 1.5 && recompute_ok;
  c.detail = "mean per-batch pruning " + fmt("%.4f", eff.mean_batch_prune) +
             "s (<=1.5), overhead column recomputable=" + (recompute_ok ? "yes" : "NO");
  return c;
}

// --- criterion 8: determinism -------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NSPRUNE_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// metrics.csv / stats.json comparison with the wall-clock fields masked;
// timings are measurements, not computation outputs.
std::string mask_metrics_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out << line << '\n';
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() == 7) {
      fields[5] = "_";
      fields[6] = "_";
    }
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  }
  return out.str();
}

std::string mask_json_timing(std::string text) {
  // Blank every "prune_seconds": <number> value.
  const std::string key = "\"prune_seconds\":";
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t start = pos + key.size();
    std::size_t end = start;
    while (end < text.size() && text[end] != ',' && text[end] != '\n' && text[end] != '}') ++end;
    text.replace(start, end - start, " 0");
    pos = start;
  }
  return text;
}

Check criterion_determinism() {
  Check c{8, "determinism (byte-identical artifacts across reruns)"};
  nsprune::testing::TempDir dir("acceptance_det");
  bool ok = true;
  std::ostringstream detail;

  auto files_equal = [&](const std::string& a, const std::string& b) {
    return nsprune::testing::slurp(a) == nsprune::testing::slurp(b);
  };

  for (const char* tag : {"one", "two"}) {
    const std::string d = dir.file(tag);
    ok &= run_cli("synth --theory sum --arity 3 --samples 24 --dim 12 --noise 0.2 "
                  "--test-count 50 --seed 7 --out-dir " + d) == 0;
    ok &= run_cli("abduce --dataset " + d + "/dataset.jsonl --out " + d + "/abduced.jsonl") == 0;
    ok &= run_cli("prune --dataset " + d + "/abduced.jsonl --embeddings " + d +
                  "/embeddings.csv --k 1 --metric euclidean --batch-size 8 --out " + d +
                  "/pruned.jsonl --stats " + d + "/stats.json") == 0;
    json cfg;
    cfg["dataset"] = d + "/abduced.jsonl";
    cfg["embeddings"] = d + "/embeddings.csv";
    cfg["test"] = d + "/test.csv";
    cfg["epochs"] = 3;
    cfg["batch_size"] = 8;
    cfg["learning_rate"] = 0.5;
    cfg["hidden_dim"] = 8;
    nsprune::testing::spit(d + "/cfg.json", cfg.dump() + "\n");
    ok &= run_cli("train --config " + d + "/cfg.json --mode frozen --seed 11 --out-dir " + d +
                  "/run") == 0;
  }
  if (!ok) {
    c.detail = "pipeline commands failed";
    return c;
  }

  const std::string one = dir.file("one"), two = dir.file("two");
  const bool synth_eq = files_equal(one + "/dataset.jsonl", two + "/dataset.jsonl") &&
                        files_equal(one + "/embeddings.csv", two + "/embeddings.csv") &&
                        files_equal(one + "/test.csv", two + "/test.csv");
  const bool abduced_eq = files_equal(one + "/abduced.jsonl", two + "/abduced.jsonl");
  const bool pruned_eq = files_equal(one + "/pruned.jsonl", two + "/pruned.jsonl");
  const bool stats_eq = mask_json_timing(nsprune::testing::slurp(one + "/stats.json")) ==
                        mask_json_timing(nsprune::testing::slurp(two + "/stats.json"));
  const bool metrics_eq =
      mask_metrics_timing(nsprune::testing::slurp(one + "/run/metrics.csv")) ==
      mask_metrics_timing(nsprune::testing::slurp(two + "/run/metrics.csv"));
  const bool model_eq = files_equal(one + "/run/model.json", two + "/run/model.json");

  ok = synth_eq && abduced_eq && pruned_eq && stats_eq && metrics_eq && model_eq;
  detail << "synth=" << (synth_eq ? "ok" : "DIFF") << ", abduced=" << (abduced_eq ? "ok" : "DIFF")
         << ", pruned=" << (pruned_eq ? "ok" : "DIFF")
         << ", stats(timing-masked)=" << (stats_eq ? "ok" : "DIFF")
         << ", metrics(timing-masked)=" << (metrics_eq ? "ok" : "DIFF")
         << ", model=" << (model_eq ? "ok" : "DIFF");
  c.pass = ok;
  c.detail = detail.str();
  return c;
}

}  // namespace

int main() {
  std::vector<Check> checks;
  nsprune::testing::TempDir effect_dir("acceptance_effect");

  checks.push_back(criterion_oracle_optimality());
  checks.push_back(criterion_example_fixtures());
  checks.push_back(criterion_soundness());
  checks.push_back(criterion_abduction_counts());
  checks.push_back(criterion_gradients());
  const Effect eff = run_direction_of_effect(effect_dir);
  checks.push_back(criterion_direction_of_effect(eff));
  checks.push_back(criterion_overhead(eff));
  checks.push_back(criterion_determinism());

  int failures = 0;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << c.detail
              << "\n";
    if (!c.pass) ++failures;
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed"
                              : "acceptance: " + std::to_string(failures) + " criteria FAILED")
            << "\n";
  return failures;
}
