#pragma once

#include <algorithm>
#include <compare>
#include <set>
#include <string>
#include <vector>

#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"
#include "nsprune/proximity.hpp"

namespace nsprune {

// Identifies the i-th pre-image of the sample at a batch index.
struct PreImageId {
  int sample = 0;
  int index = 0;

  auto operator<=>(const PreImageId&) const = default;
};

// Labels an instance position takes across the sample's pre-image set.
inline std::set<int> value_domain(const NesySample& sample, int position) {
  if (position < 0 || position >= sample.arity())
    throw InvariantError("value_domain: position out of range for sample '" + sample.id + "'");
  std::set<int> domain;
  for (const auto& p : sample.preimages) domain.insert(p[position]);
  return domain;
}

// A pre-image of the edge's source sample is consistent with the edge when its
// label for the source instance appears among the labels the target instance
// takes across the target sample's (original, unpruned) pre-images.
inline bool is_consistent(const std::vector<NesySample>& batch, const PreImageId& pid,
                          const CandidateEdge& edge) {
  if (pid.sample != edge.src_sample)
    throw InvariantError("is_consistent: edge source is not in the pre-image's sample");
  const NesySample& src = batch.at(pid.sample);
  const NesySample& dst = batch.at(edge.dst_sample);
  const int label = src.preimages.at(pid.index).at(edge.src_pos);
  for (const auto& p : dst.preimages)
    if (p[edge.dst_pos] == label) return true;
  return false;
}

// Full incidence structure between candidate edges and pre-images.
struct IncidenceMap {
  // Per edge (candidate-set order): pre-images inconsistent with it, sorted.
  std::vector<std::vector<PreImageId>> edge_inconsistent;
  // Transpose: [sample][preimage] -> sorted candidate-edge indices.
  std::vector<std::vector<std::vector<int>>> preimage_edges;
  // Pre-images with no inconsistent candidate edge, sorted.
  std::vector<PreImageId> globally_consistent;
  std::vector<int> omegas;  // pre-image count per batch sample
  int total_preimages = 0;

  bool is_globally_consistent(const PreImageId& pid) const {
    return preimage_edges[pid.sample][pid.index].empty();
  }
};

inline IncidenceMap incidence(const std::vector<NesySample>& batch,
                              const CandidateEdgeSet& edges) {
  IncidenceMap map;
  map.edge_inconsistent.resize(edges.edges.size());
  map.preimage_edges.resize(batch.size());
  map.omegas.resize(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    map.omegas[s] = static_cast<int>(batch[s].preimages.size());
    map.preimage_edges[s].resize(batch[s].preimages.size());
    map.total_preimages += map.omegas[s];
  }

  // Value domains of the unpruned target sets, computed once per node.
  std::vector<std::vector<std::set<int>>> domains(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    domains[s].resize(batch[s].arity());
    for (int p = 0; p < batch[s].arity(); ++p) domains[s][p] = value_domain(batch[s], p);
  }

  for (int e = 0; e < static_cast<int>(edges.edges.size()); ++e) {
    const CandidateEdge& edge = edges.edges[e];
    if (edge.src_sample == edge.dst_sample)
      throw InvariantError("incidence: candidate edge within a single sample");
    const NesySample& src = batch.at(edge.src_sample);
    const std::set<int>& target_domain = domains.at(edge.dst_sample).at(edge.dst_pos);
    for (int i = 0; i < static_cast<int>(src.preimages.size()); ++i) {
      if (!target_domain.count(src.preimages[i][edge.src_pos])) {
        map.edge_inconsistent[e].push_back({edge.src_sample, i});
        map.preimage_edges[edge.src_sample][i].push_back(e);
      }
    }
  }
  for (std::size_t s = 0; s < batch.size(); ++s)
    for (std::size_t i = 0; i < map.preimage_edges[s].size(); ++i)
      if (map.preimage_edges[s][i].empty())
        map.globally_consistent.push_back({static_cast<int>(s), static_cast<int>(i)});
  return map;
}

inline json incidence_to_json(const std::vector<NesySample>& batch,
                              const CandidateEdgeSet& edges, const IncidenceMap& map) {
  json j;
  j["edges"] = json::array();
  for (std::size_t e = 0; e < map.edge_inconsistent.size(); ++e) {
    json ej;
    ej["edge"] = e;
    ej["src_instance"] = edges.edges[e].src_instance;
    ej["dst_instance"] = edges.edges[e].dst_instance;
    json inc = json::array();
    for (const auto& pid : map.edge_inconsistent[e])
      inc.push_back({batch[pid.sample].id, pid.index});
    ej["inconsistent_preimages"] = std::move(inc);
    j["edges"].push_back(std::move(ej));
  }
  json gc = json::array();
  for (const auto& pid : map.globally_consistent)
    gc.push_back({batch[pid.sample].id, pid.index});
  j["globally_consistent"] = std::move(gc);
  return j;
}

}  // namespace nsprune
