#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nsprune/abduction.hpp"
#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"
#include "nsprune/pruner.hpp"
#include "nsprune/proximity.hpp"

namespace nsprune {

// ---------------------------------------------------------------------------
// Deterministic random draws (independent of the standard library's
// distribution implementations)
// ---------------------------------------------------------------------------

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double gaussian(std::mt19937_64& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------
// Input -> tanh hidden layer -> softmax. The hidden activations double as the
// trainable encoder.

struct MlpForward {
  std::vector<double> hidden;
  std::vector<double> scores;
};

struct Mlp {
  int input_dim = 0;
  int hidden_dim = 0;
  int class_count = 0;
  std::vector<double> w1, b1, w2, b2;  // w1: hidden x input, w2: classes x hidden

  static Mlp init(int input_dim, int hidden_dim, int class_count, std::mt19937_64& rng) {
    Mlp m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.class_count = class_count;
    m.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
    m.b1.assign(hidden_dim, 0.0);
    m.w2.resize(static_cast<std::size_t>(class_count) * hidden_dim);
    m.b2.assign(class_count, 0.0);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (double& w : m.w1) w = (2.0 * uniform01(rng) - 1.0) * a1;
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (double& w : m.w2) w = (2.0 * uniform01(rng) - 1.0) * a2;
    return m;
  }

  MlpForward forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim)
      throw ValidationError("classifier input has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(input_dim));
    MlpForward f;
    f.hidden.resize(hidden_dim);
    for (int h = 0; h < hidden_dim; ++h) {
      double z = b1[h];
      const double* row = &w1[static_cast<std::size_t>(h) * input_dim];
      for (int i = 0; i < input_dim; ++i) z += row[i] * x[i];
      f.hidden[h] = std::tanh(z);
    }
    std::vector<double> logits(class_count);
    for (int c = 0; c < class_count; ++c) {
      double z = b2[c];
      const double* row = &w2[static_cast<std::size_t>(c) * hidden_dim];
      for (int h = 0; h < hidden_dim; ++h) z += row[h] * f.hidden[h];
      logits[c] = z;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0;
    f.scores.resize(class_count);
    for (int c = 0; c < class_count; ++c) {
      f.scores[c] = std::exp(logits[c] - mx);
      total += f.scores[c];
    }
    for (double& s : f.scores) s /= total;
    return f;
  }

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }

  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    p.insert(p.end(), w1.begin(), w1.end());
    p.insert(p.end(), b1.begin(), b1.end());
    p.insert(p.end(), w2.begin(), w2.end());
    p.insert(p.end(), b2.begin(), b2.end());
    return p;
  }

  void set_parameters(const std::vector<double>& p) {
    if (p.size() != parameter_count()) throw InvariantError("parameter vector size mismatch");
    auto it = p.begin();
    for (double& w : w1) w = *it++;
    for (double& w : b1) w = *it++;
    for (double& w : w2) w = *it++;
    for (double& w : b2) w = *it++;
  }
};

struct MlpGrads {
  std::vector<double> w1, b1, w2, b2;

  explicit MlpGrads(const Mlp& m)
      : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0), w2(m.w2.size(), 0.0), b2(m.b2.size(), 0.0) {}

  void scale(double f) {
    for (double& g : w1) g *= f;
    for (double& g : b1) g *= f;
    for (double& g : w2) g *= f;
    for (double& g : b2) g *= f;
  }
};

// Accumulates d(loss)/d(parameters) for one instance given d(loss)/d(scores).
inline void backprop_instance(const Mlp& m, const std::vector<double>& x, const MlpForward& f,
                              const std::vector<double>& dscores, MlpGrads& grads) {
  double dot = 0;
  for (int c = 0; c < m.class_count; ++c) dot += dscores[c] * f.scores[c];
  std::vector<double> dlogits(m.class_count);
  for (int c = 0; c < m.class_count; ++c) dlogits[c] = f.scores[c] * (dscores[c] - dot);

  std::vector<double> dhidden(m.hidden_dim, 0.0);
  for (int c = 0; c < m.class_count; ++c) {
    const double g = dlogits[c];
    double* wrow = &grads.w2[static_cast<std::size_t>(c) * m.hidden_dim];
    const double* row = &m.w2[static_cast<std::size_t>(c) * m.hidden_dim];
    for (int h = 0; h < m.hidden_dim; ++h) {
      wrow[h] += g * f.hidden[h];
      dhidden[h] += g * row[h];
    }
    grads.b2[c] += g;
  }
  for (int h = 0; h < m.hidden_dim; ++h) {
    const double dz = dhidden[h] * (1.0 - f.hidden[h] * f.hidden[h]);
    double* wrow = &grads.w1[static_cast<std::size_t>(h) * m.input_dim];
    for (int i = 0; i < m.input_dim; ++i) wrow[i] += dz * x[i];
    grads.b1[h] += dz;
  }
}

inline void gd_step(Mlp& m, const MlpGrads& grads, double lr) {
  for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * grads.w1[i];
  for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * grads.b1[i];
  for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= lr * grads.w2[i];
  for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= lr * grads.b2[i];
}

inline bool all_parameters_finite(const Mlp& m) {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(m.w1) && finite(m.b1) && finite(m.w2) && finite(m.b2);
}

// ---------------------------------------------------------------------------
// Semantic loss
// ---------------------------------------------------------------------------
// loss = -log sum_{sigma in Omega} prod_j scores_j[sigma(j)]

constexpr double kMassEpsilon = 1e-12;

struct SemanticLoss {
  double value = 0;
  double mass = 0;
  bool clamped = false;  // total pre-image probability mass underflowed
};

inline SemanticLoss semantic_loss(const std::vector<std::vector<double>>& scores,
                                  const PreImageSet& omega) {
  if (omega.empty()) throw InvariantError("semantic_loss: empty pre-image set");
  SemanticLoss out;
  for (const auto& sigma : omega) {
    if (sigma.size() != scores.size())
      throw InvariantError("semantic_loss: pre-image arity does not match the score rows");
    double p = 1.0;
    for (std::size_t j = 0; j < sigma.size(); ++j) p *= scores[j].at(sigma[j]);
    out.mass += p;
  }
  double mass = out.mass;
  if (mass < kMassEpsilon) {
    mass = kMassEpsilon;
    out.clamped = true;
  }
  out.value = -std::log(mass);
  return out;
}

// d(loss)/d(scores_j[y]); products use prefix/suffix factorization so zero
// scores stay differentiable.
inline std::vector<std::vector<double>> semantic_loss_grad(
    const std::vector<std::vector<double>>& scores, const PreImageSet& omega) {
  const SemanticLoss l = semantic_loss(scores, omega);
  const double mass = l.clamped ? kMassEpsilon : l.mass;
  std::vector<std::vector<double>> grad(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) grad[j].assign(scores[j].size(), 0.0);

  const std::size_t arity = scores.size();
  std::vector<double> pref(arity + 1), suf(arity + 1);
  for (const auto& sigma : omega) {
    pref[0] = 1.0;
    for (std::size_t j = 0; j < arity; ++j) pref[j + 1] = pref[j] * scores[j][sigma[j]];
    suf[arity] = 1.0;
    for (std::size_t j = arity; j-- > 0;) suf[j] = suf[j + 1] * scores[j][sigma[j]];
    for (std::size_t j = 0; j < arity; ++j) grad[j][sigma[j]] -= pref[j] * suf[j + 1] / mass;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct TestSet {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return ids.size(); }
};

inline int argmax_class(const std::vector<double>& scores) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(scores.size()); ++c)
    if (scores[c] > scores[best]) best = c;  // ties keep the smaller class id
  return best;
}

inline double evaluate(const Mlp& model, const TestSet& test) {
  if (test.size() == 0) throw ValidationError("evaluate: empty test set");
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (argmax_class(model.forward(test.features[i]).scores) == test.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------
// Training (mini-batch pruning + semantic-loss gradient descent)
// ---------------------------------------------------------------------------

enum class TrainMode { Baseline, Frozen, Trainable };

inline const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::Baseline: return "baseline";
    case TrainMode::Frozen: return "frozen";
    case TrainMode::Trainable: return "trainable";
  }
  return "?";
}

inline TrainMode train_mode_from_name(const std::string& name) {
  if (name == "baseline") return TrainMode::Baseline;
  if (name == "frozen") return TrainMode::Frozen;
  if (name == "trainable") return TrainMode::Trainable;
  throw ValidationError("unknown training mode '" + name + "'");
}

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1.0;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::Baseline;
  int k = 1;
  Metric metric = Metric::Euclidean;
  int hidden_dim = 32;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double loss = 0;
  double accuracy = 0;
  double retained_pct = 100.0;
  double gold_retained_pct = 100.0;
  double prune_seconds = 0;
  double epoch_seconds = 0;
};

struct TrainResult {
  Mlp model;
  std::vector<EpochMetrics> epochs;
  std::vector<double> initial_parameters;
  std::vector<std::vector<int>> batch_orders;        // per-epoch sample permutation
  std::vector<std::vector<PruneStats>> batch_stats;  // [epoch][batch]
  int clamped_losses = 0;  // samples whose pre-image mass underflowed
};

// Runs Algorithm-style training: per mini-batch, prune the pre-image sets
// (mode-dependent), accumulate the mean semantic-loss gradient over the batch
// and take one gradient step. Baseline skips pruning; frozen prunes with the
// fixed feature table; trainable prunes with the current hidden activations,
// recomputed each batch before edge construction.
inline TrainResult train(const Dataset& dataset, const EmbeddingTable& features,
                         const TestSet& test, const TrainConfig& cfg,
                         const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  if (!dataset_abduced(dataset))
    throw ValidationError("train: dataset has samples without pre-images; run abduce first");
  if (cfg.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("train: batch size must be >= 1");
  if (cfg.mode != TrainMode::Baseline && cfg.batch_size < 2)
    throw ValidationError("train: pruning modes need batch size >= 2");
  if (cfg.learning_rate <= 0) throw ValidationError("train: learning rate must be positive");
  for (const auto& s : dataset.samples)
    for (const auto& iid : s.instance_ids) features.at(iid);  // all instances embedded

  TrainResult result;
  std::mt19937_64 init_rng(cfg.seed);
  result.model =
      Mlp::init(features.dim, cfg.hidden_dim, dataset.label_space.class_count, init_rng);
  result.initial_parameters = result.model.parameters();
  std::mt19937_64 order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  const int n = static_cast<int>(dataset.samples.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_t0 = std::chrono::steady_clock::now();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[uniform_int(order_rng, 0, i)]);
    result.batch_orders.push_back(order);
    result.batch_stats.emplace_back();

    double loss_sum = 0;
    int loss_count = 0;
    double prune_seconds = 0;
    double retained_sum = 0, gold_sum = 0;
    int batch_count = 0;

    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      std::vector<NesySample> batch;
      for (int i = start; i < end; ++i) batch.push_back(dataset.samples[order[i]]);
      const int batch_id = batch_count++;

      // One forward pass per instance with the current parameters, shared by
      // edge construction (trainable mode) and the loss.
      std::vector<std::vector<MlpForward>> fwd(batch.size());
      for (std::size_t s = 0; s < batch.size(); ++s)
        for (const auto& iid : batch[s].instance_ids)
          fwd[s].push_back(result.model.forward(features.at(iid)));

      PruneStats stats;
      if (cfg.mode == TrainMode::Baseline) {
        stats.samples = static_cast<int>(batch.size());
        for (const auto& s : batch) {
          stats.preimages_total += static_cast<int>(s.preimages.size());
          stats.preimages_kept += static_cast<int>(s.preimages.size());
          if (s.gold) {
            ++stats.gold_known;
            ++stats.gold_kept;
          }
        }
      } else {
        const EmbeddingTable* prox = &features;
        EmbeddingTable hidden_emb;
        if (cfg.mode == TrainMode::Trainable) {
          hidden_emb.dim = cfg.hidden_dim;
          for (std::size_t s = 0; s < batch.size(); ++s)
            for (int p = 0; p < batch[s].arity(); ++p)
              hidden_emb.insert(batch[s].instance_ids[p], fwd[s][p].hidden);
          prox = &hidden_emb;
        }
        BatchPruneResult pruned =
            prune_batch(batch, *prox, cfg.k, std::nullopt, cfg.metric);
        batch = std::move(pruned.samples);
        stats = pruned.stats;
      }
      prune_seconds += stats.solve_seconds;
      retained_sum += stats.retained_pct;
      gold_sum += stats.gold_retained_pct;
      result.batch_stats.back().push_back(stats);

      MlpGrads grads(result.model);
      double batch_loss = 0;
      for (std::size_t s = 0; s < batch.size(); ++s) {
        std::vector<std::vector<double>> scores;
        for (const auto& f : fwd[s]) scores.push_back(f.scores);
        const SemanticLoss l = semantic_loss(scores, batch[s].preimages);
        if (l.clamped) ++result.clamped_losses;
        if (!std::isfinite(l.value))
          throw InvariantError("non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_id) + ", sample '" +
                               batch[s].id + "'");
        batch_loss += l.value;
        const auto dscores = semantic_loss_grad(scores, batch[s].preimages);
        for (int p = 0; p < batch[s].arity(); ++p)
          backprop_instance(result.model, features.at(batch[s].instance_ids[p]), fwd[s][p],
                            dscores[p], grads);
      }
      loss_sum += batch_loss;
      loss_count += static_cast<int>(batch.size());
      grads.scale(1.0 / static_cast<double>(batch.size()));
      // Trainable-mode encoder gradients flow through w1/b1 like any other
      // parameter; the hidden layer is the encoder.
      gd_step(result.model, grads, cfg.learning_rate);
      if (!all_parameters_finite(result.model))
        throw InvariantError("non-finite parameters after epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_id));
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.loss = loss_count ? loss_sum / loss_count : 0.0;
    em.accuracy = evaluate(result.model, test);
    em.retained_pct = batch_count ? retained_sum / batch_count : 100.0;
    em.gold_retained_pct = batch_count ? gold_sum / batch_count : 100.0;
    em.prune_seconds = prune_seconds;
    em.epoch_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_t0).count();
    result.epochs.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic tasks (Gaussian clusters standing in for image encoders)
// ---------------------------------------------------------------------------

struct SynthTask {
  Theory theory = Theory::Sum;
  int arity = 3;
  int sample_count = 100;
  int input_dim = 16;
  double noise = 0.2;
  double mean_separation = 1.0;  // pairwise distance between class means
  int test_count = 500;
};

struct SynthData {
  Dataset dataset;         // weak labels only; abduction fills pre-images
  EmbeddingTable features; // raw feature vectors, keyed by instance id
  TestSet test;
};

namespace detail {

inline std::vector<std::vector<double>> class_means(int class_count, int dim, double separation) {
  if (dim < class_count)
    throw ValidationError("synth: input_dim must be >= class_count");
  // Scaled one-hot corners: all pairwise distances equal `separation`.
  std::vector<std::vector<double>> means(class_count, std::vector<double>(dim, 0.0));
  const double scale = separation / std::sqrt(2.0);
  for (int c = 0; c < class_count; ++c) means[c][c] = scale;
  return means;
}

inline long long weak_label(Theory theory, const PreImage& gold) {
  switch (theory) {
    case Theory::Sum: {
      long long s = 0;
      for (int v : gold) s += v;
      return s;
    }
    case Theory::Max:
      return *std::max_element(gold.begin(), gold.end());
    case Theory::Hwf:
      return hwf_evaluate(gold);
  }
  return 0;
}

inline std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace detail

// Draws gold labels uniformly per position (through the theory's position
// mask), plants instances on per-class Gaussians, and derives the weak label
// from the gold labels. Gold labels are stored on the samples for evaluation
// only. Byte-deterministic for a fixed seed.
inline SynthData synth_generate(const SynthTask& task, std::uint64_t seed) {
  if (task.arity < 1) throw ValidationError("synth: arity must be >= 1");
  if (task.sample_count < 1) throw ValidationError("synth: sample_count must be >= 1");
  if (task.theory == Theory::Hwf && task.arity % 2 == 0)
    throw ValidationError("synth: hwf arity must be odd");

  SynthData data;
  data.dataset.label_space = label_space_for(task.theory);
  const int c = data.dataset.label_space.class_count;
  const auto means = detail::class_means(c, task.input_dim, task.mean_separation);
  data.features.dim = task.input_dim;

  Constraint proto{task.theory, 0, task.arity};
  const PositionMask mask = position_mask(proto);
  std::mt19937_64 rng(seed);

  auto draw_instance = [&](int cls) {
    std::vector<double> x = means[cls];
    for (double& v : x) v += task.noise * gaussian(rng);
    return x;
  };

  for (int i = 0; i < task.sample_count; ++i) {
    NesySample s;
    s.id = "s" + detail::zero_pad(i + 1, 4);
    PreImage gold(task.arity);
    for (int p = 0; p < task.arity; ++p) {
      std::vector<int> allowed(mask.allowed[p].begin(), mask.allowed[p].end());
      gold[p] = allowed[uniform_int(rng, 0, static_cast<int>(allowed.size()) - 1)];
      s.instance_ids.push_back(s.id + "_i" + std::to_string(p));
      data.features.insert(s.instance_ids.back(), draw_instance(gold[p]));
    }
    s.constraint = {task.theory, detail::weak_label(task.theory, gold), task.arity};
    s.gold = gold;
    data.dataset.samples.push_back(std::move(s));
  }

  for (int i = 0; i < task.test_count; ++i) {
    const int cls = uniform_int(rng, 0, c - 1);
    data.test.ids.push_back("t" + detail::zero_pad(i + 1, 4));
    data.test.labels.push_back(cls);
    data.test.features.push_back(draw_instance(cls));
  }
  validate_dataset(data.dataset);
  return data;
}

// ---------------------------------------------------------------------------
// File formats for test sets, metrics, and models
// ---------------------------------------------------------------------------

inline void save_test_csv(const TestSet& test, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write test file '" + path + "'");
  const int dim = test.features.empty() ? 0 : static_cast<int>(test.features[0].size());
  out << "instance_id,gold";
  for (int i = 0; i < dim; ++i) out << ",v" << i;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < test.size(); ++i) {
    out << test.ids[i] << ',' << test.labels[i];
    for (double x : test.features[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline TestSet load_test_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open test file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty test file");
  TestSet test;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 3)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": too few fields");
    test.ids.push_back(fields[0]);
    try {
      test.labels.push_back(std::stoi(fields[1]));
      std::vector<double> v;
      for (std::size_t i = 2; i < fields.size(); ++i) v.push_back(std::stod(fields[i]));
      test.features.push_back(std::move(v));
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": bad numeric field");
    }
  }
  return test;
}

inline void append_metrics_csv(const std::string& path, const EpochMetrics& em,
                               bool write_header) {
  std::ofstream out(path, std::ios::binary | (write_header ? std::ios::trunc : std::ios::app));
  if (!out) throw ValidationError("cannot write metrics file '" + path + "'");
  if (write_header)
    out << "epoch,loss,accuracy,retained_pct,gold_retained_pct,prune_seconds,epoch_seconds\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.4f,%.4f,%.6f,%.6f\n", em.epoch, em.loss,
                em.accuracy, em.retained_pct, em.gold_retained_pct, em.prune_seconds,
                em.epoch_seconds);
  out << buf;
}

inline std::vector<EpochMetrics> load_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open metrics file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty metrics file");
  std::vector<EpochMetrics> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    EpochMetrics em;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf", &em.epoch, &em.loss,
                    &em.accuracy, &em.retained_pct, &em.gold_retained_pct, &em.prune_seconds,
                    &em.epoch_seconds) != 7)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": bad metrics row");
    rows.push_back(em);
  }
  return rows;
}

inline void save_model(const Mlp& m, const std::string& path) {
  json j;
  j["input_dim"] = m.input_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["class_count"] = m.class_count;
  j["w1"] = m.w1;
  j["b1"] = m.b1;
  j["w2"] = m.w2;
  j["b2"] = m.b2;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write model file '" + path + "'");
  out << j.dump() << '\n';
}

inline Mlp load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  Mlp m;
  try {
    m.input_dim = j.at("input_dim").get<int>();
    m.hidden_dim = j.at("hidden_dim").get<int>();
    m.class_count = j.at("class_count").get<int>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (m.w1.size() != static_cast<std::size_t>(m.hidden_dim) * m.input_dim ||
      m.w2.size() != static_cast<std::size_t>(m.class_count) * m.hidden_dim ||
      m.b1.size() != static_cast<std::size_t>(m.hidden_dim) ||
      m.b2.size() != static_cast<std::size_t>(m.class_count))
    throw ValidationError(path + ": weight shapes do not match the declared dimensions");
  return m;
}

}  // namespace nsprune
