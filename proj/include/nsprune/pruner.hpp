#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "nsprune/consistency.hpp"
#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"
#include "nsprune/proximity.hpp"
#include "nsprune/union_find.hpp"

namespace nsprune {

// ---------------------------------------------------------------------------
// ILP model
// ---------------------------------------------------------------------------
// One binary edge variable per candidate edge, one (keep, discard) pair per
// pre-image. Constraint families: complementarity I + I' = 1 per pre-image,
// coverage sum_i I >= 1 per sample, forced keep I = 1 for globally consistent
// pre-images, and one coupling per inconsistent (edge, pre-image) pair tying
// the edge's inclusion to the pre-image's discard. The objective maximizes the
// number of discarded pre-images. An included edge discards every pre-image it
// is inconsistent with; a pre-image no included edge is inconsistent with is
// kept.

struct Coupling {
  int edge = 0;
  PreImageId preimage;
};

struct IlpModel {
  int sample_count = 0;
  std::vector<int> omegas;
  int edge_count = 0;
  std::vector<Coupling> couplings;          // canonical (edge, preimage) order
  std::vector<PreImageId> forced_keep;      // globally consistent pre-images
  IncidenceMap incidence;

  int variable_pair_count() const {
    int n = 0;
    for (int w : omegas) n += w;
    return n;
  }
  int complementarity_count() const { return variable_pair_count(); }
  int coverage_count() const { return sample_count; }
};

inline IlpModel build_ilp(const std::vector<NesySample>& batch, const IncidenceMap& inc) {
  IlpModel m;
  m.sample_count = static_cast<int>(batch.size());
  m.omegas = inc.omegas;
  m.edge_count = static_cast<int>(inc.edge_inconsistent.size());
  for (int e = 0; e < m.edge_count; ++e)
    for (const auto& pid : inc.edge_inconsistent[e]) m.couplings.push_back({e, pid});
  m.forced_keep = inc.globally_consistent;
  m.incidence = inc;
  return m;
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

struct PruneSolution {
  std::vector<char> edge_included;            // E bits, candidate-set order
  std::vector<std::vector<char>> discarded;   // I' bits, [sample][preimage]
  long long objective = 0;                    // number of discarded pre-images
  double solve_seconds = 0;
  bool proven_optimal = false;

  std::vector<int> included_edges() const {
    std::vector<int> out;
    for (int e = 0; e < static_cast<int>(edge_included.size()); ++e)
      if (edge_included[e]) out.push_back(e);
    return out;
  }
};

// Discard set implied by an edge subset; nullopt when some sample would lose
// every pre-image (coverage violation).
inline std::optional<long long> edge_subset_objective(const IncidenceMap& inc,
                                                      const std::vector<int>& subset,
                                                      std::vector<std::vector<char>>* discarded_out = nullptr) {
  std::vector<std::vector<char>> discarded(inc.omegas.size());
  for (std::size_t s = 0; s < inc.omegas.size(); ++s) discarded[s].assign(inc.omegas[s], 0);
  long long objective = 0;
  for (int e : subset)
    for (const auto& pid : inc.edge_inconsistent.at(e))
      if (!discarded[pid.sample][pid.index]) {
        discarded[pid.sample][pid.index] = 1;
        ++objective;
      }
  for (std::size_t s = 0; s < inc.omegas.size(); ++s) {
    if (inc.omegas[s] == 0) continue;
    int kept = 0;
    for (char d : discarded[s]) kept += d ? 0 : 1;
    if (kept == 0) return std::nullopt;
  }
  if (discarded_out) *discarded_out = std::move(discarded);
  return objective;
}

namespace detail {

// Canonical order among equal-objective solutions: fewest included edges,
// then lexicographically smallest sorted edge-index list. With equal sizes
// that is "the smallest differing edge index wins", which composes across
// the independent per-sample subproblems.
inline bool choice_better(int count_a, const std::vector<int>& edges_a, int count_b,
                          const std::vector<int>& edges_b) {
  if (count_a != count_b) return count_a < count_b;
  return edges_a < edges_b;
}

struct GroupChoice {
  std::vector<int> edges;  // sorted global edge indices
};

// Exhaustive search over one coupled edge group, pruned by the per-sample
// discard budget. Records, per achievable discard count, the canonical best
// subset.
class GroupSearch {
 public:
  GroupSearch(const IncidenceMap& inc, const std::vector<int>& group_edges, int budget,
              int omega)
      : inc_(inc), edges_(group_edges), budget_(budget), hits_(omega, 0) {
    best_.resize(budget + 1);
  }

  // best()[d] is the canonical subset discarding exactly d pre-images, if any.
  const std::vector<std::optional<GroupChoice>>& run() {
    consider();  // the empty subset
    descend(0, 0);
    return best_;
  }

 private:
  void consider() {
    auto& slot = best_[discards_];
    if (!slot || choice_better(static_cast<int>(chosen_.size()), chosen_,
                               static_cast<int>(slot->edges.size()), slot->edges))
      slot = GroupChoice{chosen_};
  }

  void descend(std::size_t next, int depth) {
    for (std::size_t gi = next; gi < edges_.size(); ++gi) {
      const int e = edges_[gi];
      int gained = 0;
      for (const auto& pid : inc_.edge_inconsistent[e])
        if (hits_[pid.index]++ == 0) ++gained;
      discards_ += gained;
      if (discards_ <= budget_) {
        chosen_.push_back(e);
        consider();
        descend(gi + 1, depth + 1);
        chosen_.pop_back();
      }
      discards_ -= gained;
      for (const auto& pid : inc_.edge_inconsistent[e]) --hits_[pid.index];
    }
  }

  const IncidenceMap& inc_;
  const std::vector<int>& edges_;
  int budget_;
  std::vector<int> hits_;  // per pre-image index of the source sample
  std::vector<int> chosen_;
  int discards_ = 0;
  std::vector<std::optional<GroupChoice>> best_;
};

}  // namespace detail

// Exact solver. An edge only renders pre-images of its source sample
// inconsistent and coverage binds per sample, so the program decomposes by
// source sample. Within a sample, edges linked through shared inconsistent
// pre-images form union-find groups with pairwise-disjoint discard sets;
// each group is searched exhaustively under the sample's budget (omega - 1)
// and the groups are recombined with a small DP over the budget.
inline PruneSolution solve_exact(const IlpModel& model) {
  const auto t0 = std::chrono::steady_clock::now();
  const IncidenceMap& inc = model.incidence;

  PruneSolution sol;
  sol.edge_included.assign(model.edge_count, 0);
  sol.discarded.resize(model.omegas.size());
  for (std::size_t s = 0; s < model.omegas.size(); ++s)
    sol.discarded[s].assign(model.omegas[s], 0);

  // Edges by source sample; edges with empty inconsistency sets stay excluded.
  std::vector<std::vector<int>> sample_edges(model.sample_count);
  for (int e = 0; e < model.edge_count; ++e)
    if (!inc.edge_inconsistent[e].empty())
      sample_edges[inc.edge_inconsistent[e].front().sample].push_back(e);

  for (int s = 0; s < model.sample_count; ++s) {
    const auto& edges = sample_edges[s];
    if (edges.empty()) continue;
    const int omega = model.omegas[s];
    const int budget = omega - 1;
    if (budget <= 0) continue;  // supervised sample: nothing may be discarded

    // Union edges sharing an inconsistent pre-image.
    UnionFind uf(static_cast<int>(edges.size()));
    std::map<int, int> first_edge_for_preimage;  // preimage index -> local edge
    for (std::size_t le = 0; le < edges.size(); ++le)
      for (const auto& pid : inc.edge_inconsistent[edges[le]]) {
        auto [it, fresh] = first_edge_for_preimage.emplace(pid.index, static_cast<int>(le));
        if (!fresh) uf.merge(it->second, static_cast<int>(le));
      }
    std::map<int, std::vector<int>> groups;  // root -> global edge indices
    for (std::size_t le = 0; le < edges.size(); ++le)
      groups[uf.find(static_cast<int>(le))].push_back(edges[le]);

    // dp[d] = canonical best subset discarding exactly d pre-images total.
    std::vector<std::optional<detail::GroupChoice>> dp(budget + 1);
    dp[0] = detail::GroupChoice{};
    for (auto& [root, group_edges] : groups) {
      std::sort(group_edges.begin(), group_edges.end());
      detail::GroupSearch search(inc, group_edges, budget, omega);
      const auto& achievable = search.run();
      std::vector<std::optional<detail::GroupChoice>> next(budget + 1);
      for (int d1 = 0; d1 <= budget; ++d1) {
        if (!dp[d1]) continue;
        for (int d2 = 0; d1 + d2 <= budget; ++d2) {
          if (!achievable[d2]) continue;
          std::vector<int> merged = dp[d1]->edges;
          merged.insert(merged.end(), achievable[d2]->edges.begin(),
                        achievable[d2]->edges.end());
          std::sort(merged.begin(), merged.end());
          auto& slot = next[d1 + d2];
          if (!slot || detail::choice_better(static_cast<int>(merged.size()), merged,
                                             static_cast<int>(slot->edges.size()), slot->edges))
            slot = detail::GroupChoice{std::move(merged)};
        }
      }
      dp = std::move(next);
    }
    for (int d = budget; d >= 0; --d) {
      if (!dp[d]) continue;
      for (int e : dp[d]->edges) sol.edge_included[e] = 1;
      break;
    }
  }

  std::vector<std::vector<char>> discarded;
  const auto objective = edge_subset_objective(inc, sol.included_edges(), &discarded);
  if (!objective) throw InvariantError("solver produced an unsound edge selection");
  sol.discarded = std::move(discarded);
  sol.objective = *objective;
  sol.proven_optimal = true;
  sol.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

// Asserts feasibility and the discard characterization of a solution.
inline void check_solution(const IlpModel& model, const PruneSolution& sol) {
  const IncidenceMap& inc = model.incidence;
  std::vector<std::vector<char>> hit(model.omegas.size());
  for (std::size_t s = 0; s < hit.size(); ++s) hit[s].assign(model.omegas[s], 0);
  for (int e = 0; e < model.edge_count; ++e)
    if (sol.edge_included[e])
      for (const auto& pid : inc.edge_inconsistent[e]) hit[pid.sample][pid.index] = 1;

  long long discarded_total = 0;
  for (int s = 0; s < model.sample_count; ++s) {
    int kept = 0;
    for (int i = 0; i < model.omegas[s]; ++i) {
      if (sol.discarded[s][i] != hit[s][i])
        throw InvariantError("discard characterization violated at sample " + std::to_string(s));
      if (sol.discarded[s][i])
        ++discarded_total;
      else
        ++kept;
    }
    if (model.omegas[s] > 0 && kept == 0)
      throw InvariantError("pruning left sample index " + std::to_string(s) +
                           " with zero pre-images");
  }
  if (discarded_total != sol.objective)
    throw InvariantError("objective does not match the discard bits");
  for (const auto& pid : model.forced_keep)
    if (sol.discarded[pid.sample][pid.index])
      throw InvariantError("globally consistent pre-image was discarded");
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

// Independent check of optimality: enumerate every edge subset, derive the
// implied discards, reject subsets violating coverage, and keep the best
// feasible subset under the same canonical order as the solver.
inline PruneSolution brute_force_oracle(const std::vector<NesySample>& batch,
                                        const IncidenceMap& inc) {
  const auto t0 = std::chrono::steady_clock::now();
  const int edge_count = static_cast<int>(inc.edge_inconsistent.size());
  if (edge_count > 20)
    throw ValidationError("brute_force_oracle: more than 20 candidate edges");
  if (batch.size() != inc.omegas.size())
    throw ValidationError("brute_force_oracle: incidence does not match the batch");

  long long best_objective = -1;
  std::vector<int> best_subset;
  for (std::uint32_t bits = 0; bits < (1u << edge_count); ++bits) {
    std::vector<int> subset;
    for (int e = 0; e < edge_count; ++e)
      if (bits & (1u << e)) subset.push_back(e);
    std::vector<std::vector<char>> discarded;
    const auto objective = edge_subset_objective(inc, subset, &discarded);
    if (!objective) continue;
    // Forced keeps hold in every feasible subset; verify rather than assume.
    bool forced_ok = true;
    for (const auto& pid : inc.globally_consistent)
      if (discarded[pid.sample][pid.index]) forced_ok = false;
    if (!forced_ok) continue;
    if (*objective > best_objective ||
        (*objective == best_objective &&
         detail::choice_better(static_cast<int>(subset.size()), subset,
                               static_cast<int>(best_subset.size()), best_subset))) {
      best_objective = *objective;
      best_subset = std::move(subset);
    }
  }

  PruneSolution sol;
  sol.edge_included.assign(edge_count, 0);
  for (int e : best_subset) sol.edge_included[e] = 1;
  std::vector<std::vector<char>> discarded;
  edge_subset_objective(inc, best_subset, &discarded);
  sol.discarded = std::move(discarded);
  sol.objective = best_objective;
  sol.proven_optimal = true;
  sol.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

// ---------------------------------------------------------------------------
// Applying a solution
// ---------------------------------------------------------------------------

struct PruneStats {
  int samples = 0;
  int preimages_total = 0;
  int preimages_kept = 0;
  int gold_known = 0;
  int gold_kept = 0;
  double retained_pct = 100.0;
  double gold_retained_pct = 100.0;  // 100 when no gold labels are known
  double solve_seconds = 0;
  int edges_candidate = 0;
  int edges_included = 0;
};

struct PrunedBatch {
  std::vector<NesySample> samples;
  PruneStats stats;
};

inline PrunedBatch apply_pruning(const std::vector<NesySample>& batch,
                                 const PruneSolution& sol) {
  if (batch.size() != sol.discarded.size())
    throw InvariantError("apply_pruning: solution does not match the batch");
  PrunedBatch out;
  out.samples = batch;
  out.stats.samples = static_cast<int>(batch.size());
  out.stats.solve_seconds = sol.solve_seconds;
  out.stats.edges_candidate = static_cast<int>(sol.edge_included.size());
  out.stats.edges_included = static_cast<int>(sol.included_edges().size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& sample = batch[s];
    if (sol.discarded[s].size() != sample.preimages.size())
      throw InvariantError("apply_pruning: discard bits do not match sample '" + sample.id + "'");
    PreImageSet kept;
    for (std::size_t i = 0; i < sample.preimages.size(); ++i)
      if (!sol.discarded[s][i]) kept.push_back(sample.preimages[i]);
    if (kept.empty())
      throw InvariantError("pruning left sample '" + sample.id + "' with zero pre-images");
    out.stats.preimages_total += static_cast<int>(sample.preimages.size());
    out.stats.preimages_kept += static_cast<int>(kept.size());
    if (sample.gold) {
      ++out.stats.gold_known;
      if (contains_preimage(kept, *sample.gold))
        ++out.stats.gold_kept;
      else
        out.samples[s].gold.reset();  // gold was pruned away; counted above
    }
    out.samples[s].preimages = std::move(kept);
  }
  if (out.stats.preimages_total > 0)
    out.stats.retained_pct = 100.0 * out.stats.preimages_kept / out.stats.preimages_total;
  if (out.stats.gold_known > 0)
    out.stats.gold_retained_pct = 100.0 * out.stats.gold_kept / out.stats.gold_known;
  return out;
}

// ---------------------------------------------------------------------------
// One-call pipeline for a batch
// ---------------------------------------------------------------------------

struct BatchPruneResult {
  std::vector<NesySample> samples;
  PruneStats stats;
  CandidateEdgeSet edges;
  IncidenceMap incidence_map;
  PruneSolution solution;
};

// Edge construction through pruning for one batch; prune_seconds covers the
// whole step. Batches with fewer than two samples pass through unchanged.
inline BatchPruneResult prune_batch(const std::vector<NesySample>& batch,
                                    const EmbeddingTable& emb, int k,
                                    std::optional<double> theta, Metric metric) {
  const auto t0 = std::chrono::steady_clock::now();
  BatchPruneResult res;
  if (batch.size() < 2) {
    res.samples = batch;
    res.stats.samples = static_cast<int>(batch.size());
    for (const auto& s : batch) {
      res.stats.preimages_total += static_cast<int>(s.preimages.size());
      res.stats.preimages_kept += static_cast<int>(s.preimages.size());
      if (s.gold) {
        ++res.stats.gold_known;
        ++res.stats.gold_kept;
      }
    }
    res.stats.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }
  res.edges = theta ? candidate_edges_threshold(batch, emb, *theta, metric)
                    : candidate_edges(batch, emb, k, metric);
  res.incidence_map = incidence(batch, res.edges);
  IlpModel model = build_ilp(batch, res.incidence_map);
  res.solution = solve_exact(model);
  check_solution(model, res.solution);
  PrunedBatch pruned = apply_pruning(batch, res.solution);
  res.samples = std::move(pruned.samples);
  res.stats = pruned.stats;
  res.stats.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Random instances for solver-vs-oracle checks
// ---------------------------------------------------------------------------

struct OracleCheckParams {
  int max_samples = 6;
  int max_preimages = 10;
  int max_edges = 8;
  int max_arity = 3;
  int class_count = 6;
};

struct OracleInstance {
  std::vector<NesySample> batch;
  CandidateEdgeSet edges;
};

// Deterministic random batch + candidate edges (distances are irrelevant to
// the solver and set to zero).
inline OracleInstance random_oracle_instance(const OracleCheckParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  OracleInstance inst;
  const int n = uniform(2, params.max_samples);
  for (int s = 0; s < n; ++s) {
    NesySample sample;
    sample.id = "r" + std::to_string(s);
    const int arity = uniform(1, params.max_arity);
    for (int p = 0; p < arity; ++p)
      sample.instance_ids.push_back(sample.id + "_x" + std::to_string(p));
    sample.constraint = {Theory::Sum, 0, arity};  // placeholder; never evaluated
    std::set<PreImage> tuples;
    const int omega = uniform(1, params.max_preimages);
    int guard = 0;
    while (static_cast<int>(tuples.size()) < omega && guard++ < 1000) {
      PreImage p(arity);
      for (int j = 0; j < arity; ++j) p[j] = uniform(0, params.class_count - 1);
      tuples.insert(std::move(p));
    }
    sample.preimages.assign(tuples.begin(), tuples.end());
    inst.batch.push_back(std::move(sample));
  }

  const int edge_count = uniform(0, params.max_edges);
  std::set<std::tuple<int, int, int, int>> seen;
  for (int e = 0; e < edge_count; ++e) {
    const int src = uniform(0, n - 1);
    int dst = uniform(0, n - 2);
    if (dst >= src) ++dst;
    const int sp = uniform(0, inst.batch[src].arity() - 1);
    const int dp = uniform(0, inst.batch[dst].arity() - 1);
    if (!seen.insert({src, sp, dst, dp}).second) continue;
    inst.edges.edges.push_back({src, sp, dst, dp, inst.batch[src].instance_ids[sp],
                                inst.batch[dst].instance_ids[dp], 0.0});
  }
  detail::sort_edges(inst.edges.edges);
  inst.edges.k = params.max_edges;
  return inst;
}

}  // namespace nsprune
