// Command-line front end: synthetic task generation, abduction, proximity
// graphs, pre-image pruning, training, evaluation, and reporting.
//
// Exit codes: 0 success, 2 validation error (bad input or usage),
// 3 invariant failure (internal soundness violation).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsprune/abduction.hpp"
#include "nsprune/consistency.hpp"
#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"
#include "nsprune/pruner.hpp"
#include "nsprune/proximity.hpp"
#include "nsprune/report.hpp"
#include "nsprune/trainer.hpp"

namespace fs = std::filesystem;
using namespace nsprune;

namespace {

json prune_stats_json(const PruneStats& st) {
  json j;
  j["samples"] = st.samples;
  j["preimages_total"] = st.preimages_total;
  j["preimages_kept"] = st.preimages_kept;
  j["retained_pct"] = st.retained_pct;
  j["gold_known"] = st.gold_known;
  j["gold_kept"] = st.gold_kept;
  j["gold_retained_pct"] = st.gold_retained_pct;
  j["prune_seconds"] = st.solve_seconds;
  j["edges_candidate"] = st.edges_candidate;
  j["edges_included"] = st.edges_included;
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
}

int run(int argc, char** argv) {
  CLI::App app{"pre-image pruning for weakly supervised neurosymbolic training"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic Gaussian-cluster task");
  std::string synth_theory = "sum", synth_out_dir;
  SynthTask task;
  std::uint64_t synth_seed = 1;
  synth_cmd->add_option("--theory", synth_theory, "sum|max|hwf")
      ->check(CLI::IsMember({"sum", "max", "hwf"}));
  synth_cmd->add_option("--arity", task.arity, "instances per sample");
  synth_cmd->add_option("--samples", task.sample_count, "number of training samples");
  synth_cmd->add_option("--dim", task.input_dim, "feature dimension");
  synth_cmd->add_option("--noise", task.noise, "Gaussian noise scale");
  synth_cmd->add_option("--separation", task.mean_separation, "pairwise class-mean distance");
  synth_cmd->add_option("--test-count", task.test_count, "held-out labeled instances");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out-dir", synth_out_dir, "output directory")->required();
  synth_cmd->callback([&] {
    task.theory = theory_from_name(synth_theory);
    SynthData data = synth_generate(task, synth_seed);
    fs::create_directories(synth_out_dir);
    save_dataset(data.dataset, synth_out_dir + "/dataset.jsonl");
    save_embeddings_csv(data.features, synth_out_dir + "/embeddings.csv");
    save_test_csv(data.test, synth_out_dir + "/test.csv");
    std::cout << "synth: " << data.dataset.samples.size() << " samples, "
              << data.features.rows.size() << " instances, " << data.test.size()
              << " test rows -> " << synth_out_dir << "\n";
  });

  // --- abduce --------------------------------------------------------------
  auto* abduce_cmd = app.add_subcommand("abduce", "enumerate the pre-images of every sample");
  std::string abduce_in, abduce_out;
  std::size_t max_preimages = 0;
  abduce_cmd->add_option("--dataset", abduce_in, "input dataset (JSONL)")->required();
  abduce_cmd->add_option("--out", abduce_out, "output dataset (JSONL)")->required();
  abduce_cmd->add_option("--max-preimages", max_preimages,
                         "error out when a sample exceeds this pre-image count");
  abduce_cmd->callback([&] {
    Dataset d = load_dataset(abduce_in);
    std::optional<std::size_t> cap;
    if (max_preimages > 0) cap = max_preimages;
    AbduceDatasetResult res = abduce_dataset(d, cap);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    save_dataset(res.dataset, abduce_out);
    std::size_t total = 0;
    for (const auto& s : res.dataset.samples) total += s.preimages.size();
    std::cout << "abduce: " << res.dataset.samples.size() << " samples kept, "
              << res.warnings.size() << " rejected, " << total << " pre-images -> "
              << abduce_out << "\n";
  });

  // --- knn -----------------------------------------------------------------
  auto* knn_cmd = app.add_subcommand("knn", "build the candidate proximity edges");
  std::string knn_dataset, knn_embeddings, knn_out, knn_metric = "euclidean";
  int knn_k = 1;
  double knn_theta = 0;
  bool knn_has_theta = false;
  knn_cmd->add_option("--dataset", knn_dataset)->required();
  knn_cmd->add_option("--embeddings", knn_embeddings)->required();
  knn_cmd->add_option("--k", knn_k, "neighbors per node (top-k rule)");
  knn_cmd->add_option("--metric", knn_metric)->check(CLI::IsMember({"euclidean", "cosine"}));
  auto* theta_opt = knn_cmd->add_option("--theta", knn_theta,
                                        "distance threshold rule instead of top-k");
  knn_cmd->add_option("--out", knn_out, "edge list (JSON)")->required();
  knn_cmd->callback([&] {
    knn_has_theta = theta_opt->count() > 0;
    Dataset d = load_dataset(knn_dataset);
    EmbeddingTable emb = load_embeddings_csv(knn_embeddings);
    const Metric metric = metric_from_name(knn_metric);
    CandidateEdgeSet set = knn_has_theta
                               ? candidate_edges_threshold(d.samples, emb, knn_theta, metric)
                               : candidate_edges(d.samples, emb, knn_k, metric);
    for (const auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
    write_text(knn_out, edges_to_json(d.samples, set).dump(2) + "\n");
    std::cout << "knn: " << set.edges.size() << " candidate edges -> " << knn_out << "\n";
  });

  // --- prune ---------------------------------------------------------------
  auto* prune_cmd = app.add_subcommand("prune", "prune pre-images batch by batch");
  std::string prune_dataset, prune_embeddings, prune_out, prune_stats_path,
      prune_metric = "euclidean", dump_incidence_path;
  int prune_k = 1, prune_batch_size = 64;
  double prune_theta = 0;
  auto* prune_theta_opt = prune_cmd->add_option("--theta", prune_theta,
                                                "distance threshold rule instead of top-k");
  prune_cmd->add_option("--dataset", prune_dataset)->required();
  prune_cmd->add_option("--embeddings", prune_embeddings)->required();
  prune_cmd->add_option("--k", prune_k);
  prune_cmd->add_option("--metric", prune_metric)
      ->check(CLI::IsMember({"euclidean", "cosine"}));
  prune_cmd->add_option("--batch-size", prune_batch_size)->check(CLI::PositiveNumber);
  prune_cmd->add_option("--out", prune_out, "pruned dataset (JSONL)")->required();
  prune_cmd->add_option("--stats", prune_stats_path, "statistics (JSON)");
  prune_cmd->add_option("--dump-incidence", dump_incidence_path,
                        "debug dump of the incidence structure (JSON)");
  prune_cmd->callback([&] {
    Dataset d = load_dataset(prune_dataset);
    if (!dataset_abduced(d))
      throw ValidationError("dataset has samples without pre-images; run abduce first");
    EmbeddingTable emb = load_embeddings_csv(prune_embeddings);
    const Metric metric = metric_from_name(prune_metric);
    std::optional<double> theta;
    if (prune_theta_opt->count() > 0) theta = prune_theta;

    Dataset pruned;
    pruned.label_space = d.label_space;
    json batches = json::array();
    json incidence_dump = json::array();
    PruneStats total;
    double mean_retained = 0, mean_gold = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < d.samples.size(); start += prune_batch_size) {
      const std::size_t end = std::min(d.samples.size(), start + prune_batch_size);
      std::vector<NesySample> batch(d.samples.begin() + start, d.samples.begin() + end);
      BatchPruneResult res = prune_batch(batch, emb, prune_k, theta, metric);
      for (const auto& w : res.edges.warnings) std::cerr << "warning: " << w << "\n";
      for (auto& s : res.samples) pruned.samples.push_back(std::move(s));
      json bj = prune_stats_json(res.stats);
      bj["index"] = batch_index;
      batches.push_back(std::move(bj));
      if (!dump_incidence_path.empty()) {
        json ij = incidence_to_json(batch, res.edges, res.incidence_map);
        ij["batch"] = batch_index;
        incidence_dump.push_back(std::move(ij));
      }
      total.samples += res.stats.samples;
      total.preimages_total += res.stats.preimages_total;
      total.preimages_kept += res.stats.preimages_kept;
      total.gold_known += res.stats.gold_known;
      total.gold_kept += res.stats.gold_kept;
      total.solve_seconds += res.stats.solve_seconds;
      mean_retained += res.stats.retained_pct;
      mean_gold += res.stats.gold_retained_pct;
      ++batch_index;
    }
    save_dataset(pruned, prune_out);

    if (!prune_stats_path.empty()) {
      total.retained_pct =
          total.preimages_total ? 100.0 * total.preimages_kept / total.preimages_total : 100.0;
      total.gold_retained_pct =
          total.gold_known ? 100.0 * total.gold_kept / total.gold_known : 100.0;
      json stats;
      stats["batch_size"] = prune_batch_size;
      stats["k"] = prune_k;
      stats["metric"] = prune_metric;
      if (theta) stats["theta"] = *theta;
      json agg = prune_stats_json(total);
      agg.erase("edges_candidate");
      agg.erase("edges_included");
      agg["batches"] = batch_index;
      agg["mean_batch_retained_pct"] = batch_index ? mean_retained / batch_index : 100.0;
      agg["mean_batch_gold_retained_pct"] = batch_index ? mean_gold / batch_index : 100.0;
      stats["aggregate"] = std::move(agg);
      stats["batches"] = std::move(batches);
      write_text(prune_stats_path, stats.dump(2) + "\n");
    }
    if (!dump_incidence_path.empty())
      write_text(dump_incidence_path, incidence_dump.dump(2) + "\n");
    std::cout << "prune: kept " << total.preimages_kept << " of " << total.preimages_total
              << " pre-images across " << batch_index << " batches -> " << prune_out << "\n";
  });

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train the classifier with per-batch pruning");
  std::string train_config_path, train_mode = "baseline", train_out_dir;
  std::uint64_t train_seed = 1;
  train_cmd->add_option("--config", train_config_path, "training configuration (JSON)")
      ->required();
  train_cmd->add_option("--mode", train_mode)
      ->check(CLI::IsMember({"baseline", "frozen", "trainable"}));
  train_cmd->add_option("--seed", train_seed);
  train_cmd->add_option("--out-dir", train_out_dir)->required();
  train_cmd->callback([&] {
    std::ifstream in(train_config_path);
    if (!in) throw ValidationError("cannot open config '" + train_config_path + "'");
    json cj;
    try {
      in >> cj;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(train_config_path + ": " + e.what());
    }
    TrainConfig cfg;
    cfg.mode = train_mode_from_name(train_mode);
    cfg.seed = train_seed;
    std::string dataset_path, embeddings_path, test_path;
    try {
      dataset_path = cj.at("dataset").get<std::string>();
      embeddings_path = cj.at("embeddings").get<std::string>();
      test_path = cj.at("test").get<std::string>();
      if (cj.contains("epochs")) cfg.epochs = cj["epochs"].get<int>();
      if (cj.contains("batch_size")) cfg.batch_size = cj["batch_size"].get<int>();
      if (cj.contains("learning_rate")) cfg.learning_rate = cj["learning_rate"].get<double>();
      if (cj.contains("hidden_dim")) cfg.hidden_dim = cj["hidden_dim"].get<int>();
      if (cj.contains("k")) cfg.k = cj["k"].get<int>();
      if (cj.contains("metric")) cfg.metric = metric_from_name(cj["metric"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(train_config_path + ": " + e.what());
    }

    Dataset d = load_dataset(dataset_path);
    EmbeddingTable features = load_embeddings_csv(embeddings_path);
    TestSet test = load_test_csv(test_path);
    fs::create_directories(train_out_dir);

    json run;
    run["mode"] = train_mode;
    run["seed"] = train_seed;
    run["config"] = {{"dataset", dataset_path},
                     {"embeddings", embeddings_path},
                     {"test", test_path},
                     {"epochs", cfg.epochs},
                     {"batch_size", cfg.batch_size},
                     {"learning_rate", cfg.learning_rate},
                     {"hidden_dim", cfg.hidden_dim},
                     {"k", cfg.k},
                     {"metric", metric_name(cfg.metric)}};
    write_text(train_out_dir + "/run.json", run.dump(2) + "\n");

    bool first_epoch = true;
    TrainResult res = train(d, features, test, cfg, [&](const EpochMetrics& em) {
      append_metrics_csv(train_out_dir + "/metrics.csv", em, first_epoch);
      first_epoch = false;
      std::cerr << "epoch " << em.epoch << ": loss " << em.loss << ", accuracy " << em.accuracy
                << ", retained " << em.retained_pct << "%\n";
    });
    save_model(res.model, train_out_dir + "/model.json");
    if (res.clamped_losses > 0)
      std::cerr << "warning: " << res.clamped_losses
                << " sample losses were epsilon-clamped (zero pre-image mass)\n";
    std::cout << "train: " << train_mode << " seed " << train_seed << " final accuracy "
              << res.epochs.back().accuracy << " -> " << train_out_dir << "\n";
  });

  // --- eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on a labeled test set");
  std::string eval_model, eval_test;
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--test", eval_test)->required();
  eval_cmd->callback([&] {
    Mlp m = load_model(eval_model);
    TestSet t = load_test_csv(eval_test);
    json j;
    j["accuracy"] = evaluate(m, t);
    j["test_instances"] = t.size();
    std::cout << j.dump() << "\n";
  });

  // --- report --------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "aggregate training runs into a table");
  std::vector<std::string> report_dirs;
  std::string report_csv = "report.csv", report_json = "report.json";
  report_cmd->add_option("dirs", report_dirs, "run directories")->required()->expected(-1);
  report_cmd->add_option("--out-csv", report_csv);
  report_cmd->add_option("--out-json", report_json);
  report_cmd->callback([&] {
    RunReport rep = build_report(report_dirs);
    for (const auto& issue : rep.issues) std::cerr << "warning: " << issue << "\n";
    write_report_csv(rep, report_csv);
    write_report_json(rep, report_json);
    std::cout << "report: " << rep.modes.size() << " modes over " << report_dirs.size()
              << " run dirs -> " << report_csv << ", " << report_json << "\n";
  });

  // --- oracle-check ----------------------------------------------------------
  auto* oracle_cmd = app.add_subcommand(
      "oracle-check", "compare the exact solver against the brute-force oracle");
  int oracle_seeds = 200;
  std::uint64_t oracle_seed_base = 0;
  OracleCheckParams params;
  oracle_cmd->add_option("--seeds", oracle_seeds, "number of random instances");
  oracle_cmd->add_option("--seed-base", oracle_seed_base);
  oracle_cmd->add_option("--max-samples", params.max_samples);
  oracle_cmd->add_option("--max-preimages", params.max_preimages);
  oracle_cmd->add_option("--max-edges", params.max_edges);
  oracle_cmd->callback([&] {
    const auto t0 = std::chrono::steady_clock::now();
    for (int s = 0; s < oracle_seeds; ++s) {
      OracleInstance inst = random_oracle_instance(params, oracle_seed_base + s);
      IncidenceMap inc = incidence(inst.batch, inst.edges);
      IlpModel model = build_ilp(inst.batch, inc);
      PruneSolution fast = solve_exact(model);
      check_solution(model, fast);
      PruneSolution oracle = brute_force_oracle(inst.batch, inc);
      if (fast.objective != oracle.objective || fast.edge_included != oracle.edge_included ||
          fast.discarded != oracle.discarded)
        throw InvariantError("solver/oracle mismatch at seed " +
                             std::to_string(oracle_seed_base + s) + " (solver objective " +
                             std::to_string(fast.objective) + ", oracle " +
                             std::to_string(oracle.objective) + ")");
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "oracle-check: " << oracle_seeds
              << " instances, solver and oracle agree on all (" << secs << "s)\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
